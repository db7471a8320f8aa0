#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "webuq/agents.hpp"
#include "webuq/conactu.hpp"
#include "webuq/types.hpp"
#include "webuq/webenv.hpp"

namespace webuq::mcts {

using conactu::UncertaintyReport;
using conactu::UncertaintyThresholds;
using json = nlohmann::ordered_json;

struct TreeNode;

/// One action edge with the AlphaZero-style statistics the selection
/// rule needs. The child node is materialized lazily: it exists once
/// the edge has been traversed or evaluated.
struct TreeEdge {
    Action action;
    double prior = 0.0; // P_con, from the expansion's pseudo-probability
    int visits = 0;     // N(s,a)
    double value = 0.0; // Q(s,a); stays 0 until the first backpropagation
    bool pruned = false;
    std::unique_ptr<TreeNode> child;
};

/// A webpage state in the search tree. `state` is the environment
/// snapshot backing speculative execution; it is empty only for nodes
/// that have never been materialized.
struct TreeNode {
    std::optional<webenv::EnvSnapshot> state;
    Observation observation;
    bool terminal = false; // post-Stop state; cannot be deepened
    bool regenerate_marked = false;
    std::vector<TreeEdge> edges; // creation order; actions pairwise distinct
    std::set<Action, ActionLess> excluded_actions;

    int total_child_visits() const;
};

struct PenaltyConfig {
    double strict = -5.0;
    double relaxed = -1.0;
    double regenerate = 0.0;
};

struct SearchConfig {
    double w_puct = 5.0;
    int k_candidates = 3;
    int max_expansions = 10; // per subgoal
    double tau = 6.0;        // acceptance threshold on s_base
    PenaltyConfig penalties;
    UncertaintyThresholds thresholds;
    /// Ablation: uniform priors and no quadrant modulation (the reward
    /// is always the raw base score; acceptance still applies).
    bool uncertainty_blind = false;
    /// Acceptance commits the full root-to-accepted-node path by
    /// default; set to commit only the root action.
    bool commit_root_action_only = false;

    void validate() const;
};

void to_json(json& j, const SearchConfig& c);
void from_json(const json& j, SearchConfig& c);

enum class Directive { Accept, Prune, Backtrack, Continue, Regenerate };

const char* to_string(Directive d);

struct ModulatedReward {
    double reward = 0.0;
    Directive directive = Directive::Continue;
};

struct EdgeStats {
    Action action;
    int visits = 0;
    double value = 0.0;
    double prior = 0.0;
    bool pruned = false;
};

void to_json(json& j, const EdgeStats& s);

struct SearchStats {
    int accepts = 0;
    int prunes = 0;
    int backtracks = 0;
    int continues = 0;
    int regenerations = 0;
    int empty_filterings = 0;
    int dead_end_prunes = 0;
    int terminal_prunes = 0;
    int evaluations = 0;
};

void to_json(json& j, const SearchStats& s);

struct SearchOutcome {
    Action committed_action;
    std::vector<Action> committed_path; // root-first; first element == committed_action
    bool accepted = false;              // early acceptance vs. budget exhaustion
    int expansions_used = 0;
    std::vector<EdgeStats> root_stats;
    SearchStats stats;
    std::optional<agents::EvaluationResponse> acceptance_eval;
    std::shared_ptr<const TreeNode> tree; // final tree, for diagnostics and tests
};

// ---------------------------------------------------------------------------
// Search primitives
// ---------------------------------------------------------------------------

/// Exploration bonus U(s,a) = w * P_con * sqrt(sum_b N(s,b)) / (1 + N(s,a)).
double puct_bonus(const TreeEdge& edge, int parent_total_visits, double w_puct);

/// Argmax of Q + U over non-pruned edges. Ties break by higher prior,
/// then creation order. Returns nullptr when every edge is pruned,
/// which callers treat as a dead end.
TreeEdge* select_child(TreeNode& node, const SearchConfig& cfg);
const TreeEdge* select_child(const TreeNode& node, const SearchConfig& cfg);

/// Attaches one edge per surviving candidate (exclusion list, existing
/// edges and in-batch duplicates are filtered first), with priors from
/// the ConActU pseudo-probabilities over the survivors. Clears the
/// regenerate mark. Throws EmptyAfterFiltering when nothing survives.
UncertaintyReport expand(TreeNode& node, const std::vector<agents::ActionCandidate>& candidates,
                         const SearchConfig& cfg);

/// Acceptance and quadrant modulation of a base feasibility score.
ModulatedReward modulate_reward(double s_base, const UncertaintyReport& report,
                                const SearchConfig& cfg);

/// Incremental mean update along a root-first path:
/// N += 1, then Q += (R - Q) / N.
void backpropagate(std::span<TreeEdge* const> path, double reward);

// ---------------------------------------------------------------------------
// Search driver
// ---------------------------------------------------------------------------

class Searcher {
public:
    struct Hooks {
        std::function<void(const TreeNode&, const TreeEdge&)> on_select;
        std::function<void(Directive, const TreeEdge&)> on_directive;
    };

    Searcher(const agents::AgentProviders& providers, const SearchConfig& cfg);

    /// Runs select/expand/simulate/backpropagate from the given root
    /// state until a directive accepts an action or the expansion budget
    /// runs out (committing the most-visited root edge; ties break by Q,
    /// then prior, then creation order). Throws NoViableAction when the
    /// root has nothing selectable left and regeneration is exhausted.
    SearchOutcome search(const webenv::EnvSnapshot& root_state, const Observation& root_observation,
                         const std::string& subgoal, const std::string& instruction);

    Hooks hooks;

private:
    void materialize(TreeNode& parent, TreeEdge& edge) const;

    agents::AgentProviders providers_;
    SearchConfig cfg_;
};

} // namespace webuq::mcts
