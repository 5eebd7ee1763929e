#pragma once

#include <stdexcept>
#include <string>

namespace lg {

// Exit-code classes used by the CLI: 2 = validation, 3 = infeasibility,
// 4 = resource cap.
struct Error : std::runtime_error {
    int exit_code;
    Error(int code, const std::string& what) : std::runtime_error(what), exit_code(code) {}
};

struct InputError : Error {
    explicit InputError(const std::string& what) : Error(2, what) {}
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error(2, what) {}
};

struct InfeasibleError : Error {
    explicit InfeasibleError(const std::string& what) : Error(3, what) {}
};

struct ResourceError : Error {
    explicit ResourceError(const std::string& what) : Error(4, what) {}
};

}  // namespace lg
