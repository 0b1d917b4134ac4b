#pragma once

#include <stdexcept>
#include <string>

namespace pwrank {

/// Malformed or inconsistent input data (files, labels, score maps).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments or configuration supplied by the caller.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure reported by a scoring backend.
class BackendError : public std::runtime_error {
public:
    BackendError(const std::string& what, bool retryable)
        : std::runtime_error(what), retryable_(retryable) {}

    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

}  // namespace pwrank
