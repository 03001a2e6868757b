#pragma once

// Compensated (Neumaier) summation. Every reduction in the library goes
// through these accumulators in a fixed index order, so results do not depend
// on thread count.

#include <cmath>
#include <span>

#include "hypocx/common.hpp"

namespace hypocx {

class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    CompensatedSum& operator+=(double v) noexcept { add(v); return *this; }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class CompensatedComplexSum {
public:
    void add(cplx v) noexcept {
        re_.add(v.real());
        im_.add(v.imag());
    }
    CompensatedComplexSum& operator+=(cplx v) noexcept { add(v); return *this; }
    [[nodiscard]] cplx value() const noexcept { return {re_.value(), im_.value()}; }

private:
    CompensatedSum re_;
    CompensatedSum im_;
};

[[nodiscard]] inline double compensated_sum(std::span<const double> xs) noexcept {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

} // namespace hypocx
