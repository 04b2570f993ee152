#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bandit_collab {

/// Bad arguments or a violated precondition. The CLI maps this to exit code 2.
class usage_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed transcript, CSV or other structured input.
class structural_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A randomized generator could not satisfy its output invariant.
class generator_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by the minimal-time search when no tested horizon reaches the target.
class search_not_found : public std::runtime_error {
public:
    explicit search_not_found(std::uint64_t ceiling)
        : std::runtime_error("no horizon up to " + std::to_string(ceiling) + " reaches the target error"),
          ceiling_(ceiling) {}

    std::uint64_t ceiling() const noexcept { return ceiling_; }

private:
    std::uint64_t ceiling_;
};

}  // namespace bandit_collab
