#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hypocx/common.hpp"
#include "hypocx/vector_field.hpp"

namespace hypocx {

using PointFunction = std::function<cplx(double, double)>;
using LevelFunction = std::function<double(double, double)>;

/// A named closed-form function of (x, t). `jump` is a level function whose
/// zero set carries the discontinuities, when there are any.
struct CatalogFunction {
    std::string name;
    PointFunction eval;
    std::optional<LevelFunction> jump;
};

struct CatalogParams {
    double value = 1.0;     // amplitude
    double exponent = 0.0;  // abs_t_pow exponent
    double radius = 1.0;    // disk_indicator radius
};

[[nodiscard]] inline std::vector<std::string> catalog_names() {
    return {"zero", "constant", "x", "sign_t", "abs_t_pow", "disk_indicator", "counterexample_f",
            "counterexample_v", "exp_t", "Z", "conj_Z", "Z_cubed"};
}

/// Looks up `name`; unknown names throw InvalidArgument. Singular values
/// (|t|^e at t = 0 for e < 0, counterexample terms at Z = 0 or |Z| = 1) are
/// replaced by 0.
[[nodiscard]] inline CatalogFunction catalog_function(const std::string& name, const VectorFieldSpec& spec,
                                                      const CatalogParams& prm = {}) {
    const double c = prm.value;
    if (name == "zero") return {name, [](double, double) { return cplx{}; }, std::nullopt};
    if (name == "constant") return {name, [c](double, double) { return cplx(c); }, std::nullopt};
    if (name == "x") return {name, [c](double x, double) { return cplx(c * x); }, std::nullopt};
    if (name == "sign_t") {
        return {name, [c](double, double t) { return cplx(t > 0.0 ? c : (t < 0.0 ? -c : 0.0)); },
                LevelFunction([](double, double t) { return t; })};
    }
    if (name == "abs_t_pow") {
        const double e = prm.exponent;
        return {name,
                [c, e](double, double t) {
                    if (t == 0.0) return cplx(e == 0.0 ? c : 0.0);
                    return cplx(c * std::pow(std::abs(t), e));
                },
                std::nullopt};
    }
    if (name == "disk_indicator") {
        const double r = prm.radius;
        return {name,
                [spec, c, r](double x, double t) { return cplx(std::abs(spec.eval_Z(x, t)) <= r ? c : 0.0); },
                LevelFunction([spec, r](double x, double t) { return std::abs(spec.eval_Z(x, t)) - r; })};
    }
    if (name == "counterexample_f") {
        return {name,
                [spec, c](double x, double t) {
                    const cplx z = spec.eval_Z(x, t);
                    const double lz = std::log(std::abs(z));
                    if (z == cplx(0.0) || lz == 0.0) return cplx{};
                    return -c * I * spec.degeneracy(t) / (std::conj(z) * lz);
                },
                std::nullopt};
    }
    if (name == "counterexample_v") {
        return {name,
                [spec, c](double x, double t) {
                    const double lz = std::log(std::abs(spec.eval_Z(x, t)));
                    if (!std::isfinite(lz) || lz == 0.0) return cplx{};
                    return cplx(c * std::log(std::abs(lz)));
                },
                std::nullopt};
    }
    if (name == "exp_t") return {name, [c](double, double t) { return cplx(c * std::exp(t)); }, std::nullopt};
    if (name == "Z") return {name, [spec, c](double x, double t) { return c * spec.eval_Z(x, t); }, std::nullopt};
    if (name == "conj_Z") {
        return {name, [spec, c](double x, double t) { return c * std::conj(spec.eval_Z(x, t)); }, std::nullopt};
    }
    if (name == "Z_cubed") {
        return {name,
                [spec, c](double x, double t) {
                    const cplx z = spec.eval_Z(x, t);
                    return c * z * z * z;
                },
                std::nullopt};
    }
    throw InvalidArgument("unknown catalog function '" + name + "'");
}

} // namespace hypocx
