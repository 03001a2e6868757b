#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "hypocx/common.hpp"
#include "hypocx/grid.hpp"

namespace hypocx {

/// Complex polynomial c0 + c1 z + ... evaluated by Horner's rule.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<cplx> coeffs) : c_(std::move(coeffs)) {
        while (c_.size() > 1 && c_.back() == cplx(0.0)) c_.pop_back();
    }

    [[nodiscard]] static Polynomial identity() { return Polynomial({0.0, 1.0}); }

    [[nodiscard]] cplx operator()(cplx z) const noexcept {
        cplx acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + *it;
        return acc;
    }

    [[nodiscard]] cplx derivative(cplx z) const noexcept {
        cplx acc = 0.0;
        for (std::size_t k = c_.size(); k-- > 1;) acc = acc * z + static_cast<double>(k) * c_[k];
        return acc;
    }

    [[nodiscard]] const std::vector<cplx>& coefficients() const noexcept { return c_; }
    [[nodiscard]] bool is_zero() const noexcept {
        for (auto c : c_) if (c != cplx(0.0)) return false;
        return true;
    }

private:
    std::vector<cplx> c_;
};

/// The model field L_sigma = d/dt - i|t|^sigma d/dx with first integral
/// Z_sigma = x + i t|t|^sigma/(sigma+1), optionally post-composed with a
/// holomorphic polynomial H (Z = H o Z_sigma, L = H'(Z_sigma) L_sigma).
///
/// sigma = 0 is accepted as the elliptic sanity mode (L = -2i d/dzbar).
class VectorFieldSpec {
public:
    [[nodiscard]] static VectorFieldSpec model(double sigma) {
        require(std::isfinite(sigma) && sigma >= 0.0, "VectorFieldSpec: sigma must be >= 0");
        VectorFieldSpec s;
        s.sigma_ = sigma;
        return s;
    }

    /// Checks |H'(Z_sigma)| over the nodes of `grid` and records the minimum.
    [[nodiscard]] static VectorFieldSpec with_post_map(double sigma, Polynomial post_map, const Grid& grid,
                                                       double h_min_floor = 1e-8) {
        VectorFieldSpec s = model(sigma);
        require(!post_map.is_zero(), "VectorFieldSpec: post map must be non-constant");
        double h_min = std::numeric_limits<double>::infinity();
        for (double t : grid.t()) {
            for (double x : grid.x()) {
                h_min = std::min(h_min, std::abs(post_map.derivative(s.z_sigma(x, t))));
            }
        }
        require(h_min > h_min_floor, "VectorFieldSpec: |H'(Z_sigma)| vanishes on the domain grid");
        s.post_ = std::move(post_map);
        s.h_min_ = h_min;
        return s;
    }

    [[nodiscard]] double sigma() const noexcept { return sigma_; }
    [[nodiscard]] double tau() const noexcept { return sigma_ / (sigma_ + 1.0); }
    [[nodiscard]] bool has_post_map() const noexcept { return post_.has_value(); }
    [[nodiscard]] const std::optional<Polynomial>& post_map() const noexcept { return post_; }
    /// min |H'| sampled at construction (1 without post map).
    [[nodiscard]] double h_min() const noexcept { return h_min_; }

    /// |t|^sigma, with 0^0 = 1 in the elliptic mode.
    [[nodiscard]] double degeneracy(double t) const noexcept {
        return sigma_ == 0.0 ? 1.0 : std::pow(std::abs(t), sigma_);
    }
    /// eta(t) = t|t|^sigma/(sigma+1), the imaginary part of Z_sigma.
    [[nodiscard]] double eta(double t) const noexcept { return t * degeneracy(t) / (sigma_ + 1.0); }
    /// Inverse of eta.
    [[nodiscard]] double t_of_eta(double eta) const noexcept {
        const double a = std::pow((sigma_ + 1.0) * std::abs(eta), 1.0 / (sigma_ + 1.0));
        return eta < 0.0 ? -a : a;
    }

    [[nodiscard]] cplx z_sigma(double x, double t) const noexcept { return {x, eta(t)}; }
    [[nodiscard]] cplx eval_Z(double x, double t) const noexcept {
        const cplx z = z_sigma(x, t);
        return post_ ? (*post_)(z) : z;
    }
    /// H'(Z_sigma(x,t)), equal to Z_x.
    [[nodiscard]] cplx hprime(double x, double t) const noexcept {
        return post_ ? post_->derivative(z_sigma(x, t)) : cplx(1.0);
    }
    [[nodiscard]] cplx dZ_dx(double x, double t) const noexcept { return hprime(x, t); }
    [[nodiscard]] cplx dZ_dt(double x, double t) const noexcept { return hprime(x, t) * I * degeneracy(t); }

private:
    VectorFieldSpec() = default;
    double sigma_ = 1.0;
    std::optional<Polynomial> post_;
    double h_min_ = 1.0;
};

[[nodiscard]] inline cplx eval_Z(const VectorFieldSpec& spec, double x, double t) noexcept {
    return spec.eval_Z(x, t);
}

/// Z sampled on every node.
[[nodiscard]] inline GridFunction sample_Z(const VectorFieldSpec& spec, const GridPtr& grid) {
    return GridFunction::sample(grid, [&](double x, double t) { return spec.eval_Z(x, t); });
}

} // namespace hypocx
