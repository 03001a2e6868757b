#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hypocx {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

/// Raised for violated preconditions on user-supplied parameters.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw InvalidArgument(what);
}

} // namespace hypocx
