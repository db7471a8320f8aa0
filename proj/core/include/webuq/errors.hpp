#pragma once

#include <stdexcept>
#include <string>

namespace webuq {

/// Base class for every error this library raises on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A task fixture failed validation. The message carries the offending
/// location (file, task id, rule index).
struct FixtureInvalid : Error {
    using Error::Error;
};

/// An action was applied to an environment that already executed Stop.
struct EpisodeFinished : Error {
    using Error::Error;
};

/// Provider output stayed unusable after the repair retry.
struct ProviderOutputInvalid : Error {
    using Error::Error;
};

/// Transport-level failure talking to a backend, after retries.
struct BackendUnavailable : Error {
    using Error::Error;
};

/// Backend answered, but the payload could not be parsed.
struct MalformedOutput : Error {
    using Error::Error;
};

/// Every candidate produced for an expansion was filtered by the
/// exclusion list; the search treats this as a backtrack signal.
struct EmptyAfterFiltering : Error {
    using Error::Error;
};

/// The search root has no selectable edge left and regeneration is
/// exhausted. The episode records a task failure.
struct NoViableAction : Error {
    using Error::Error;
};

/// Bad run configuration (CLI flags, config file, sweep grid).
struct ConfigError : Error {
    using Error::Error;
};

} // namespace webuq
