#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <system_error>

namespace atmopt {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A plan or schedule cannot satisfy a hard constraint (capacity, safety
// stock, funding).  The CLI maps these to their own exit code.
struct InfeasibleError : Error {
    using Error::Error;
};

namespace num {

// Shortest decimal form that round-trips through a double exactly.
inline std::string to_string(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Strict double parse: the whole token must be consumed.
inline bool parse(std::string_view text, double& out) {
    const char* first = text.data();
    const char* last = first + text.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

}  // namespace num

}  // namespace atmopt
