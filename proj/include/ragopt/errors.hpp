#pragma once

#include <stdexcept>
#include <string>

namespace ragopt {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad CLI usage, unreadable/invalid configuration, malformed script file.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed dataset records, impossible split sizes, empty inputs.
class DataError : public Error {
public:
    using Error::Error;
};

/// A generated instruction that is empty after cleanup.
class UnusableInstructionError : public Error {
public:
    using Error::Error;
};

/// Failure talking to a text-generation backend.
class BackendError : public Error {
public:
    enum class Kind {
        transport,         // connection refused / timeout / read error
        http_status,       // non-success HTTP status from the server
        empty_completion,  // the backend produced an empty completion
        script_exhausted,  // scripted backend ran out of entries for a role
    };

    BackendError(Kind kind, const std::string& message, int attempts = 1, int status = 0)
        : Error(message), kind_(kind), attempts_(attempts), status_(status) {}

    Kind kind() const { return kind_; }

    /// Total request attempts made, including the first one.
    int attempts() const { return attempts_; }

    /// HTTP status code when kind() == Kind::http_status, 0 otherwise.
    int status() const { return status_; }

    /// True when the run can be checkpointed and resumed once the backend
    /// is healthy again (exit code 3 at the CLI).
    bool resumable_outage() const {
        switch (kind_) {
        case Kind::transport:
        case Kind::script_exhausted:
            return true;
        case Kind::http_status:
            return status_ == 429 || status_ >= 500;
        case Kind::empty_completion:
            return false;
        }
        return false;
    }

private:
    Kind kind_;
    int attempts_;
    int status_;
};

} // namespace ragopt
