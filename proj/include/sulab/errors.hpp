#pragma once

#include <stdexcept>
#include <string>

namespace sulab {

// Argument outside the mathematical domain of an operation (probability
// outside [0,1], non-positive epsilon, NaN input, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Mismatched lengths or shapes between related inputs.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed external input (log lines, config files).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

namespace detail {

inline void require(bool ok, const char* msg) {
    if (!ok) throw DomainError(msg);
}

inline void require_finite(double x, const char* msg) {
    if (!(x == x) || x - x != 0.0) throw DomainError(msg);
}

inline void require_unit(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError(std::string(what) + " must lie in [0,1]");
}

inline void require_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
}

}  // namespace detail
}  // namespace sulab
