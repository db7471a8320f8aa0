#include "webuq/mcts.hpp"

#include "webuq/errors.hpp"

#include <algorithm>
#include <cmath>

namespace webuq::mcts {

int TreeNode::total_child_visits() const {
    int total = 0;
    for (const auto& e : edges) total += e.visits;
    return total;
}

void SearchConfig::validate() const {
    if (w_puct < 0.0) throw ConfigError("w_puct must be >= 0");
    if (k_candidates < 1) throw ConfigError("k_candidates must be >= 1");
    if (max_expansions < 1) throw ConfigError("max_expansions must be >= 1");
    if (!(tau >= 0.0 && tau <= 10.0)) throw ConfigError("tau must be in [0, 10]");
    if (!(thresholds.theta_eu >= 0.0 && thresholds.theta_eu <= 1.0) ||
        !(thresholds.theta_au >= 0.0 && thresholds.theta_au <= 1.0)) {
        throw ConfigError("uncertainty thresholds must be in [0, 1]");
    }
}

void to_json(json& j, const SearchConfig& c) {
    j = json{
        {"w_puct", c.w_puct},
        {"k_candidates", c.k_candidates},
        {"max_expansions", c.max_expansions},
        {"tau", c.tau},
        {"penalties",
         {{"strict", c.penalties.strict},
          {"relaxed", c.penalties.relaxed},
          {"regenerate", c.penalties.regenerate}}},
        {"thresholds", c.thresholds},
        {"uncertainty_blind", c.uncertainty_blind},
        {"commit_root_action_only", c.commit_root_action_only},
    };
}

void from_json(const json& j, SearchConfig& c) {
    c.w_puct = j.value("w_puct", 5.0);
    c.k_candidates = j.value("k_candidates", 3);
    c.max_expansions = j.value("max_expansions", 10);
    c.tau = j.value("tau", 6.0);
    if (j.contains("penalties")) {
        const auto& p = j.at("penalties");
        c.penalties.strict = p.value("strict", -5.0);
        c.penalties.relaxed = p.value("relaxed", -1.0);
        c.penalties.regenerate = p.value("regenerate", 0.0);
    }
    if (j.contains("thresholds")) {
        c.thresholds = j.at("thresholds").get<UncertaintyThresholds>();
    }
    c.uncertainty_blind = j.value("uncertainty_blind", false);
    c.commit_root_action_only = j.value("commit_root_action_only", false);
}

const char* to_string(Directive d) {
    switch (d) {
        case Directive::Accept: return "accept";
        case Directive::Prune: return "prune";
        case Directive::Backtrack: return "backtrack";
        case Directive::Continue: return "continue";
        case Directive::Regenerate: return "regenerate";
    }
    return "?";
}

void to_json(json& j, const EdgeStats& s) {
    j = json{{"action", s.action},
             {"visits", s.visits},
             {"value", s.value},
             {"prior", s.prior},
             {"pruned", s.pruned}};
}

void to_json(json& j, const SearchStats& s) {
    j = json{
        {"accepts", s.accepts},
        {"prunes", s.prunes},
        {"backtracks", s.backtracks},
        {"continues", s.continues},
        {"regenerations", s.regenerations},
        {"empty_filterings", s.empty_filterings},
        {"dead_end_prunes", s.dead_end_prunes},
        {"terminal_prunes", s.terminal_prunes},
        {"evaluations", s.evaluations},
    };
}

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

double puct_bonus(const TreeEdge& edge, int parent_total_visits, double w_puct) {
    return w_puct * edge.prior * std::sqrt(static_cast<double>(parent_total_visits)) /
           (1.0 + static_cast<double>(edge.visits));
}

TreeEdge* select_child(TreeNode& node, const SearchConfig& cfg) {
    const int total = node.total_child_visits();
    TreeEdge* best = nullptr;
    double best_score = 0.0;
    for (auto& edge : node.edges) {
        if (edge.pruned) continue;
        const double score = edge.value + puct_bonus(edge, total, cfg.w_puct);
        if (!best || score > best_score ||
            (score == best_score && edge.prior > best->prior)) {
            best = &edge;
            best_score = score;
        }
    }
    return best;
}

const TreeEdge* select_child(const TreeNode& node, const SearchConfig& cfg) {
    return select_child(const_cast<TreeNode&>(node), cfg);
}

UncertaintyReport expand(TreeNode& node, const std::vector<agents::ActionCandidate>& candidates,
                         const SearchConfig& cfg) {
    if (!node.edges.empty() && !node.regenerate_marked) {
        throw Error("expand requires a leaf or a regenerate-marked node");
    }
    if (candidates.empty()) {
        throw Error("expand requires at least one candidate");
    }

    std::vector<const agents::ActionCandidate*> survivors;
    std::set<Action, ActionLess> seen;
    for (const auto& e : node.edges) seen.insert(e.action);
    for (const auto& cand : candidates) {
        if (node.excluded_actions.count(cand.action)) continue;
        if (!seen.insert(cand.action).second) continue; // existing edge or in-batch duplicate
        survivors.push_back(&cand);
    }
    if (survivors.empty()) {
        throw EmptyAfterFiltering("every candidate was an excluded duplicate");
    }

    std::vector<double> confidences;
    confidences.reserve(survivors.size());
    for (const auto* cand : survivors) confidences.push_back(cand->confidence);

    const auto report =
        conactu::quantify(conactu::ConfidenceVector(std::move(confidences)), cfg.thresholds);

    const double uniform_prior = 1.0 / static_cast<double>(survivors.size());
    for (std::size_t i = 0; i < survivors.size(); ++i) {
        TreeEdge edge;
        edge.action = survivors[i]->action;
        edge.prior = cfg.uncertainty_blind ? uniform_prior : report.p[i];
        node.edges.push_back(std::move(edge));
    }
    node.regenerate_marked = false;
    return report;
}

ModulatedReward modulate_reward(double s_base, const UncertaintyReport& report,
                                const SearchConfig& cfg) {
    if (s_base >= cfg.tau) {
        return {s_base, Directive::Accept};
    }
    if (cfg.uncertainty_blind) {
        return {s_base, Directive::Continue}; // plain MCTS: raw score, no quadrant handling
    }
    switch (report.quadrant) {
        case conactu::Quadrant::StrictPenalty:
            return {cfg.penalties.strict, Directive::Prune};
        case conactu::Quadrant::RelaxedPenalty:
            return {cfg.penalties.relaxed, Directive::Backtrack};
        case conactu::Quadrant::Normal:
            return {s_base, Directive::Continue};
        case conactu::Quadrant::Regenerate:
            return {cfg.penalties.regenerate, Directive::Regenerate};
    }
    return {s_base, Directive::Continue};
}

void backpropagate(std::span<TreeEdge* const> path, double reward) {
    for (TreeEdge* edge : path) {
        edge->visits += 1;
        edge->value += (reward - edge->value) / static_cast<double>(edge->visits);
    }
}

// ---------------------------------------------------------------------------
// Search driver
// ---------------------------------------------------------------------------

Searcher::Searcher(const agents::AgentProviders& providers, const SearchConfig& cfg)
    : providers_(providers), cfg_(cfg) {
    providers_.validate();
    cfg_.validate();
}

void Searcher::materialize(TreeNode& parent, TreeEdge& edge) const {
    if (edge.child && edge.child->state) return;
    if (!parent.state) throw Error("cannot materialize from an unmaterialized parent");

    auto clone = webenv::WebEnvironment::restore(*parent.state);
    const Observation obs = clone.apply(edge.action);
    auto child = std::make_unique<TreeNode>();
    child->state = clone.snapshot();
    child->observation = obs;
    child->terminal = clone.finished();
    edge.child = std::move(child);
}

namespace {

std::vector<Action> excluded_as_vector(const TreeNode& node) {
    return {node.excluded_actions.begin(), node.excluded_actions.end()};
}

} // namespace

SearchOutcome Searcher::search(const webenv::EnvSnapshot& root_state,
                               const Observation& root_observation, const std::string& subgoal,
                               const std::string& instruction) {
    TreeNode root;
    root.state = root_state;
    root.observation = root_observation;
    root.terminal = root_state.finished;
    if (root.terminal) {
        throw NoViableAction("search started on a finished episode");
    }

    SearchOutcome outcome;
    auto& stats = outcome.stats;

    auto finalize = [&](std::vector<Action> committed, bool accepted) {
        outcome.accepted = accepted;
        if (cfg_.commit_root_action_only && committed.size() > 1) {
            committed.resize(1);
        }
        outcome.committed_path = std::move(committed);
        outcome.committed_action = outcome.committed_path.front();
        outcome.root_stats.clear();
        for (const auto& e : root.edges) {
            outcome.root_stats.push_back({e.action, e.visits, e.value, e.prior, e.pruned});
        }
        outcome.tree = std::make_shared<const TreeNode>(std::move(root));
        return outcome;
    };

    auto fail_if_root_dead = [&]() {
        // regeneration exhausted: viable only if some root edge is selectable
        if (root.edges.empty() || !select_child(root, cfg_)) {
            throw NoViableAction("no selectable root action for subgoal \"" + subgoal + '"');
        }
    };

    while (outcome.expansions_used < cfg_.max_expansions) {
        // -- Selection: walk down until a leaf or a regenerate-marked node.
        std::vector<TreeEdge*> path;
        TreeNode* node = &root;
        bool restart = false;
        while (!node->edges.empty() && !node->regenerate_marked) {
            TreeEdge* edge = select_child(*node, cfg_);
            if (!edge) {
                if (node == &root) {
                    // Every root action is pruned; try regenerating fresh
                    // candidates with the burned ones excluded.
                    for (const auto& e : root.edges) root.excluded_actions.insert(e.action);
                    root.regenerate_marked = true;
                    break;
                }
                // Interior dead end: the incoming edge can never lead
                // anywhere selectable again.
                path.back()->pruned = true;
                stats.dead_end_prunes += 1;
                restart = true;
                break;
            }
            if (hooks.on_select) hooks.on_select(*node, *edge);
            path.push_back(edge);
            materialize(*node, *edge);
            node = edge->child.get();
            if (node->terminal) break;
        }
        if (restart) continue;

        if (node->terminal) {
            // A terminal state scored below tau earlier; it cannot be
            // deepened, so re-selecting it is conclusive.
            path.back()->pruned = true;
            backpropagate(path, cfg_.penalties.relaxed);
            stats.terminal_prunes += 1;
            continue;
        }

        // -- Expansion: one reasoning call, counted against the budget.
        outcome.expansions_used += 1;
        agents::ReasoningRequest req;
        req.subgoal = subgoal;
        req.observation = node->observation;
        req.excluded = excluded_as_vector(*node);
        req.k = cfg_.k_candidates;

        UncertaintyReport report;
        try {
            const auto resp = providers_.reasoning->propose_actions(req);
            report = expand(*node, resp.candidates, cfg_);
        } catch (const EmptyAfterFiltering&) {
            stats.empty_filterings += 1;
            node->regenerate_marked = false;
            if (!path.empty()) {
                backpropagate(path, cfg_.penalties.relaxed);
            } else {
                fail_if_root_dead();
            }
            continue;
        }

        // -- Simulation: materialize and score the best child state.
        TreeEdge* edge = select_child(*node, cfg_);
        if (!edge) throw Error("expansion produced no selectable edge");
        path.push_back(edge);
        materialize(*node, *edge);
        TreeNode* child = edge->child.get();

        agents::EvaluationRequest ereq;
        ereq.subgoal = subgoal;
        ereq.observation = child->observation;
        ereq.instruction = instruction;
        ereq.stopped = child->terminal;
        ereq.stop_answer = child->state->stop_answer;
        const auto eval = providers_.evaluation->evaluate_state(ereq);
        stats.evaluations += 1;

        const auto modulated = modulate_reward(eval.s_base, report, cfg_);
        if (hooks.on_directive) hooks.on_directive(modulated.directive, *edge);

        switch (modulated.directive) {
            case Directive::Accept: {
                stats.accepts += 1;
                backpropagate(path, modulated.reward);
                std::vector<Action> committed;
                committed.reserve(path.size());
                for (const TreeEdge* e : path) committed.push_back(e->action);
                outcome.acceptance_eval = eval;
                return finalize(std::move(committed), true);
            }
            case Directive::Prune:
                stats.prunes += 1;
                edge->pruned = true;
                backpropagate(path, modulated.reward);
                break;
            case Directive::Backtrack:
                stats.backtracks += 1;
                backpropagate(path, modulated.reward);
                break;
            case Directive::Continue:
                stats.continues += 1;
                backpropagate(path, modulated.reward);
                break;
            case Directive::Regenerate:
                stats.regenerations += 1;
                backpropagate(path, modulated.reward);
                for (const auto& e : node->edges) node->excluded_actions.insert(e.action);
                node->regenerate_marked = true;
                break;
        }
        // A rejected terminal child is conclusive: no future visit can
        // deepen it or improve its score.
        if (child->terminal && modulated.directive != Directive::Accept && !edge->pruned) {
            edge->pruned = true;
            stats.terminal_prunes += 1;
        }
    }

    // -- Budget exhausted: commit the most-visited selectable root edge.
    const TreeEdge* best = nullptr;
    for (const auto& e : root.edges) {
        if (e.pruned) continue;
        if (!best || e.visits > best->visits ||
            (e.visits == best->visits && e.value > best->value) ||
            (e.visits == best->visits && e.value == best->value && e.prior > best->prior)) {
            best = &e;
        }
    }
    if (!best) {
        throw NoViableAction("expansion budget exhausted with no selectable root action");
    }
    return finalize({best->action}, false);
}

} // namespace webuq::mcts
