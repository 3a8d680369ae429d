#pragma once

#include <stdexcept>
#include <string>

namespace csae {

// Bad inputs, bad files, broken contracts. The CLI maps these to exit code 2.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Artifact file problems, with a machine-checkable kind.
struct StoreError : ValidationError {
    enum class Kind { io, bad_magic, bad_version, truncated, corrupt };

    StoreError(Kind k, const std::string& msg) : ValidationError(msg), kind(k) {}

    Kind kind;
};

// Training produced a non-finite loss. The CLI maps this to exit code 3.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace csae
