#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "hypocx/catalog.hpp"
#include "hypocx/cauchy_op.hpp"
#include "hypocx/config.hpp"
#include "hypocx/csv.hpp"
#include "hypocx/exponents.hpp"
#include "hypocx/holder.hpp"
#include "hypocx/lemma_suite.hpp"
#include "hypocx/parallel.hpp"
#include "hypocx/semilinear.hpp"
#include "hypocx/similarity.hpp"
#include "hypocx/verification.hpp"

namespace hypocx::cli {

inline constexpr const char* version = "0.1.0";

[[nodiscard]] inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> s{"lemmas",  "apply",          "verify",     "representation",
                                            "holder",  "counterexample", "semilinear", "similarity"};
    return s;
}

struct RunOptions {
    std::string subcommand;
    std::string config_path;
    std::string out_dir = ".";
    unsigned threads = 0;
    std::uint64_t seed = 1;
};

namespace detail {

struct Assertion {
    std::string name;
    bool pass;
    std::string detail;
};

struct Context {
    const Config& cfg;
    std::filesystem::path out;
    std::uint64_t seed;
    std::vector<Assertion> assertions;
    std::vector<std::string> outputs;
    std::map<std::string, double> timings;

    void check(const std::string& name, bool pass, const std::string& detail) {
        assertions.push_back({name, pass, detail});
    }
    void save(const CsvWriter& w, const std::string& file) {
        w.save((out / file).string());
        outputs.push_back(file);
    }
    void reject_unused() const {
        const auto extra = cfg.unused_keys();
        if (extra.empty()) return;
        std::string msg = "unknown config keys:";
        for (const auto& k : extra) msg += " " + k;
        throw ConfigError(msg);
    }
    template <class F>
    auto timed(const std::string& stage, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            timings[stage] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        } else {
            auto r = f();
            timings[stage] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return r;
        }
    }
};

[[nodiscard]] inline std::string num(double v) { return CsvWriter::format(v); }

/// Settings shared by every subcommand.
struct Common {
    double sigma = 1.0;
    double p = 4.0;
    Domain domain{};
    std::vector<std::size_t> sizes;
    double grading = 0.0;
    QuadratureConfig quad{};

    [[nodiscard]] double grading_for(double s) const { return grading > 0.0 ? grading : default_grading(s); }
    [[nodiscard]] GridPtr grid(std::size_t n, double s) const { return Grid::make(domain, n, n, grading_for(s)); }
};

[[nodiscard]] inline std::vector<std::size_t> read_sizes(const Config& c, const std::string& key,
                                                         const std::vector<double>& def) {
    std::vector<std::size_t> out;
    for (double v : c.get_doubles(key, def)) {
        if (!(v >= 2.0) || v != std::floor(v)) throw ConfigError("key '" + key + "': sizes must be integers >= 2");
        out.push_back(static_cast<std::size_t>(v));
    }
    for (std::size_t k = 1; k < out.size(); ++k)
        if (out[k] <= out[k - 1]) throw ConfigError("key '" + key + "': refinement list must be strictly increasing");
    if (out.empty()) throw ConfigError("key '" + key + "': at least one size required");
    return out;
}

[[nodiscard]] inline Domain read_domain(const Config& c, const std::string& prefix, Domain def) {
    return Domain::make(c.get_double(prefix + ".x_min", def.x_min), c.get_double(prefix + ".x_max", def.x_max),
                        c.get_double(prefix + ".t_min", def.t_min), c.get_double(prefix + ".t_max", def.t_max));
}

[[nodiscard]] inline Common read_common(const Config& c) {
    Common k;
    k.sigma = c.get_double("sigma", 1.0);
    k.p = c.get_double("p", 4.0);
    k.domain = read_domain(c, "domain", Domain::make(-1.0, 1.0, -1.0, 1.0));
    k.sizes = read_sizes(c, "grid.sizes", {128.0, 256.0});
    k.grading = c.get_double("grid.grading", 0.0);
    if (k.grading != 0.0 && k.grading < 1.0) throw ConfigError("grid.grading must be 0 (auto) or >= 1");
    k.quad.max_depth = static_cast<int>(c.get_int("quad.max_depth", k.quad.max_depth));
    k.quad.rel_tol = c.get_double("quad.rel_tol", k.quad.rel_tol);
    k.quad.rule_order = static_cast<int>(c.get_int("quad.rule_order", k.quad.rule_order));
    k.quad.edge_grading = c.get_double("quad.edge_grading", k.quad.edge_grading);
    k.quad.validate();
    return k;
}

[[nodiscard]] inline CatalogFunction read_rhs(const Config& c, const std::string& key, const std::string& def,
                                              const VectorFieldSpec& spec, double def_exponent = 0.0) {
    CatalogParams prm;
    prm.value = c.get_double(key + ".value", 1.0);
    prm.exponent = c.get_double(key + ".exponent", def_exponent);
    prm.radius = c.get_double(key + ".radius", 1.0);
    const std::string name = c.get_string(key, def);
    try {
        return catalog_function(name, spec, prm);
    } catch (const InvalidArgument& e) {
        throw ConfigError("key '" + key + "': " + e.what());
    }
}

[[nodiscard]] inline std::vector<CatalogFunction> read_rhs_list(const Config& c, const std::string& key,
                                                                const std::vector<std::string>& def,
                                                                const VectorFieldSpec& spec) {
    std::vector<CatalogFunction> out;
    CatalogParams prm;
    prm.value = c.get_double(key + ".value", 1.0);
    prm.exponent = c.get_double(key + ".exponent", 0.0);
    prm.radius = c.get_double(key + ".radius", 1.0);
    for (const auto& name : c.get_list(key, def)) {
        try {
            out.push_back(catalog_function(name, spec, prm));
        } catch (const InvalidArgument& e) {
            throw ConfigError("key '" + key + "': " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------- lemmas

inline void cmd_lemmas(Context& ctx, const Common& com) {
    const auto& c = ctx.cfg;
    std::vector<Lemma> which;
    for (const auto& s : c.get_list("lemmas.which", {"I", "H", "delta"})) {
        try {
            which.push_back(parse_lemma(s));
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("lemmas.which: ") + e.what());
        }
    }
    const long depth_inc = c.get_int("lemmas.depth_increase", 2);
    const double stab_tol = c.get_double("lemmas.stability_tol", 0.05);
    const double closed_tol = c.get_double("lemmas.closed_form_tol", 1e-3);
    const double scaling_tol = c.get_double("lemmas.scaling_tol", 1e-2);
    std::map<Lemma, std::vector<LemmaTuple>> grids;
    for (Lemma w : which) {
        const std::string pre = "lemmas." + lemma_name(w) + ".";
        const std::vector<std::string> fields{"R", "gamma", "tau", "q", "phi", "delta", "m"};
        bool custom = false;
        for (const auto& f : fields) custom = custom || c.has(pre + f);
        if (!custom) {
            grids[w] = default_scan_grid(w);
            continue;
        }
        const LemmaTuple d{};
        const auto R = c.get_doubles(pre + "R", {d.R});
        const auto G = c.get_doubles(pre + "gamma", {d.gamma});
        const auto T = c.get_doubles(pre + "tau", {d.tau});
        const auto Q = c.get_doubles(pre + "q", {d.q});
        const auto P = c.get_doubles(pre + "phi", {d.phi});
        const auto D = c.get_doubles(pre + "delta", {d.delta});
        const auto M = c.get_doubles(pre + "m", {d.m});
        std::vector<LemmaTuple> g;
        for (double r : R) for (double ga : G) for (double t : T) for (double q : Q) for (double ph : P)
            for (double de : D) for (double m : M) g.push_back({r, ga, t, q, ph, de, m});
        grids[w] = std::move(g);
    }
    ctx.reject_unused();
    if (depth_inc < 1) throw ConfigError("lemmas.depth_increase must be >= 1");

    QuadratureConfig fine = com.quad;
    fine.max_depth += static_cast<int>(depth_inc);
    for (Lemma w : which) {
        const std::string name = lemma_name(w);
        ScanReport a, b;
        try {
            a = ctx.timed("scan_" + name, [&] { return scan_lemma(w, grids[w], com.quad); });
            b = ctx.timed("scan_" + name + "_refined", [&] { return scan_lemma(w, grids[w], fine); });
        } catch (const InvalidArgument& e) {
            throw ConfigError("lemmas." + name + ": " + e.what());
        }
        CsvWriter rows({"R", "gamma", "tau", "q", "phi", "delta", "m", "value", "error", "bound", "margin",
                        "converged", "pass"});
        std::size_t inconclusive = 0;
        for (const auto& r : a.rows) {
            const auto& t = r.params;
            rows.add(t.R).add(t.gamma).add(t.tau).add(t.q).add(t.phi).add(t.delta).add(t.m);
            rows.add(r.value).add(r.error).add(r.bound).add(r.margin).add(r.converged).add(r.pass);
            rows.end_row();
            inconclusive += !r.converged;
        }
        ctx.save(rows, "lemma_" + name + ".csv");
        CsvWriter cons({"tau", "exponent", "constant", "constant_refined", "relative_drift"});
        for (std::size_t k = 0; k < a.constants.size(); ++k) {
            const double x = a.constants[k].value;
            const double y = b.constants[k].value;
            cons.add(a.constants[k].tau).add(a.constants[k].exponent).add(x).add(y);
            cons.add(std::abs(x - y) / std::max(std::abs(x), std::abs(y))).end_row();
        }
        ctx.save(cons, "lemma_" + name + "_constants.csv");
        ctx.check("lemmas." + name + ".rows_pass", a.all_pass() && b.all_pass(),
                  std::to_string(a.rows.size()) + " rows, " + std::to_string(inconclusive) + " inconclusive");
        const double drift = fitted_constant_drift(a, b);
        ctx.check("lemmas." + name + ".constant_stability", drift <= stab_tol, "drift " + num(drift));
        if (w == Lemma::I) {
            double worst = 0.0;
            std::size_t n0 = 0;
            for (const auto& r : a.rows) {
                if (r.params.gamma != 0.0) continue;
                const auto& t = r.params;
                const double e = 2.0 - t.tau - t.q;
                const double exact = line_constant(t.tau) * std::pow(t.R, e) / e;
                worst = std::max(worst, std::abs(r.value - exact) / exact);
                ++n0;
            }
            if (n0) ctx.check("lemmas.I.gamma0_closed_form", worst <= closed_tol, "max rel err " + num(worst));
            // I(2R, 2 gamma) = 2^{2 - tau - q} I(R, gamma)
            double sc = 0.0;
            std::size_t pairs = 0;
            for (const auto& r : a.rows) {
                for (const auto& s : a.rows) {
                    const auto& t = r.params;
                    const auto& u = s.params;
                    if (u.tau != t.tau || u.q != t.q || u.R != 2.0 * t.R || u.gamma != 2.0 * t.gamma) continue;
                    const double want = std::pow(2.0, 2.0 - t.tau - t.q);
                    sc = std::max(sc, std::abs(s.value / r.value - want) / want);
                    ++pairs;
                }
            }
            if (pairs)
                ctx.check("lemmas.I.scaling", sc <= scaling_tol,
                          std::to_string(pairs) + " pairs, max rel err " + num(sc));
        }
        if (w == Lemma::H) {
            bool ok = true;
            double spread = 0.0;
            std::map<std::tuple<double, double, double, double>, std::pair<double, double>> by_rest;
            for (const auto& r : a.rows) {
                const auto* fc = a.constant_for(r.params.tau, r.params.q);
                ok = ok && fc && r.converged && r.value <= fc->value * (1.0 + com.quad.rel_tol);
                auto [it, fresh] = by_rest.try_emplace({r.params.tau, r.params.q, r.params.gamma, r.params.phi},
                                                       r.value, r.value);
                if (!fresh) {
                    it->second.first = std::min(it->second.first, r.value);
                    it->second.second = std::max(it->second.second, r.value);
                }
            }
            for (const auto& [k, mm] : by_rest) spread = std::max(spread, mm.second / mm.first);
            ctx.check("lemmas.H.uniform_in_R", ok, "largest max/min across R " + num(spread));
        }
    }
}

// ---------------------------------------------------------------- apply

inline void cmd_apply(Context& ctx, const Common& com) {
    const auto& c = ctx.cfg;
    const auto spec = VectorFieldSpec::model(com.sigma);
    const auto f = read_rhs(c, "apply.rhs", "constant", spec);
    const auto n = static_cast<std::size_t>(c.get_int("apply.n", long(com.sizes.back())));
    const auto targets_s = c.get_list("apply.targets", {"grid"});
    const std::string oracle = c.get_string("apply.oracle", "none");
    const double oracle_tol = c.get_double("apply.oracle_tol", 0.01);
    ctx.reject_unused();
    if (oracle != "none" && oracle != "disk") throw ConfigError("apply.oracle must be none or disk");
    if (oracle == "disk" && (com.sigma != 0.0 || f.name != "disk_indicator"))
        throw ConfigError("apply.oracle = disk needs sigma = 0 and apply.rhs = disk_indicator");
    const double radius = c.get_double("apply.rhs.radius", 1.0);
    const auto g = com.grid(n, com.sigma);
    const CauchyOperator op(spec, g, com.quad);
    const auto fg = GridFunction::sample(g, f.eval);
    std::vector<Target> targets;
    if (targets_s.size() == 1 && targets_s[0] == "grid") {
        for (std::size_t j = 0; j < g->nt(); ++j)
            for (std::size_t i = 0; i < g->nx(); ++i) targets.push_back({g->x()[i], g->t()[j]});
    } else {
        for (const auto& s : targets_s) {
            const auto colon = s.find(':');
            if (colon == std::string::npos) throw ConfigError("apply.targets: expected x:t, got '" + s + "'");
            const auto pt = Config::parse_string("x=" + s.substr(0, colon) + "\nt=" + s.substr(colon + 1));
            const Target tg{pt.get_double("x", 0.0), pt.get_double("t", 0.0)};
            const auto& d = com.domain;
            if (tg.x < d.x_min || tg.x > d.x_max || tg.t < d.t_min || tg.t > d.t_max)
                throw ConfigError("apply.targets: target " + s + " outside the domain");
            targets.push_back(tg);
        }
    }
    std::vector<cplx> vals;
    std::vector<TargetDiagnostics> diag;
    ctx.timed("apply", [&] {
        if (targets_s.size() == 1 && targets_s[0] == "grid") {
            auto r = op.apply(fg);
            vals.assign(r.values.values().begin(), r.values.values().end());
            diag = std::move(r.diagnostics);
        } else {
            auto r = op.apply(fg, targets);
            vals = std::move(r.values);
            diag = std::move(r.diagnostics);
        }
    });
    std::vector<std::string> header{"x", "t", "re", "im", "cells", "error", "converged"};
    if (oracle == "disk") header.insert(header.end(), {"oracle_re", "oracle_im", "relative_error"});
    CsvWriter w(header);
    bool all_conv = true;
    double worst = 0.0;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        w.add(targets[k].x).add(targets[k].t).add(vals[k]).add(diag[k].cells).add(diag[k].error).add(diag[k].converged);
        all_conv = all_conv && diag[k].converged;
        if (oracle == "disk") {
            const cplx z = spec.eval_Z(targets[k].x, targets[k].t);
            const cplx ex = std::abs(z) < radius ? I * std::conj(z) / 2.0 : I * radius * radius / (2.0 * z);
            const double rel = std::abs(vals[k] - ex) / std::max(std::abs(ex), 0.25 * radius);
            worst = std::max(worst, rel);
            w.add(ex).add(rel);
        }
        w.end_row();
    }
    ctx.save(w, "apply.csv");
    ctx.check("apply.converged", all_conv, std::to_string(targets.size()) + " targets");
    if (oracle == "disk") ctx.check("apply.disk_oracle", worst <= oracle_tol, "max relative error " + num(worst));
}

// ---------------------------------------------------------------- verify

inline void cmd_verify(Context& ctx, const Common& com) {
    const auto& c = ctx.cfg;
    const auto sigmas = c.get_doubles("verify.sigmas", {com.sigma});
    const double max_res = c.get_double("verify.max_residual", 1e-2);
    const double min_order = c.get_double("verify.min_order", 1.0);
    ResidualMaskOptions mo;
    mo.margin_fraction = c.get_double("verify.margin", mo.margin_fraction);
    mo.band = static_cast<std::size_t>(c.get_int("verify.band", long(mo.band)));
    const bool bounds = c.get_bool("verify.bounds", false);
    const double bound_stab = c.get_double("verify.bound_stability", 0.2);
    const auto lq_qs = c.get_doubles("verify.lq_q", {1.1, 1.4});
    const double lq_stab = c.get_double("verify.lq_stability", 0.05);
    std::vector<std::pair<double, std::vector<CatalogFunction>>> plan;
    for (double s : sigmas) {
        const auto spec = VectorFieldSpec::model(s);
        plan.push_back({s, read_rhs_list(c, "verify.rhs", {"constant", "x", "sign_t"}, spec)});
    }
    ctx.reject_unused();

    CsvWriter w({"sigma", "rhs", "n", "grading", "max_residual", "l2_residual", "nodes", "converged", "order_max",
                 "order_l2"});
    for (const auto& [s, fs] : plan) {
        const auto spec = VectorFieldSpec::model(s);
        std::vector<std::shared_ptr<CauchyOperator>> ops;
        for (std::size_t n : com.sizes) ops.push_back(std::make_shared<CauchyOperator>(spec, com.grid(n, s), com.quad));
        for (const auto& f : fs) {
            std::vector<ResidualLevel> lv;
            for (const auto& op : ops)
                lv.push_back(ctx.timed("verify", [&] { return solution_residual(*op, f, mo); }));
            double order = std::numeric_limits<double>::quiet_NaN();
            double order2 = order;
            if (lv.size() >= 2) {
                const auto& a = lv[lv.size() - 2];
                const auto& b = lv.back();
                order = observed_order(a.max_residual, b.max_residual, double(a.n), double(b.n));
                order2 = observed_order(a.l2_residual, b.l2_residual, double(a.n), double(b.n));
            }
            bool conv = true;
            for (const auto& l : lv) {
                w.add(s).add(f.name).add(l.n).add(com.grading_for(s)).add(l.max_residual).add(l.l2_residual);
                w.add(l.nodes).add(l.converged).add(order).add(order2).end_row();
                conv = conv && l.converged;
            }
            const std::string tag = "verify.sigma=" + num(s) + "." + f.name;
            const double fin = lv.back().max_residual;
            ctx.check(tag + ".residual", fin <= max_res && conv, "max residual " + num(fin));
            if (lv.size() >= 2)
                ctx.check(tag + ".order", fin == 0.0 || order >= min_order, "observed order " + num(order));
        }
        if (bounds) {
            const auto exps = make_exponents(s, com.p);
            CsvWriter sb({"sigma", "p", "rhs", "n", "sup", "lp_norm", "ratio", "converged"});
            std::vector<double> mx;
            for (std::size_t k = 0; k < ops.size(); ++k) {
                double m = 0.0;
                for (const auto& pf : default_probe_family(spec, exps)) {
                    const auto b = ctx.timed("sup_bound", [&] {
                        return sup_bound_check(*ops[k], GridFunction::sample(ops[k]->grid(), pf.eval), exps);
                    });
                    sb.add(s).add(com.p).add(pf.name).add(com.sizes[k]).add(b.sup).add(b.lp).add(b.ratio)
                        .add(b.converged).end_row();
                    m = std::max(m, b.ratio);
                }
                mx.push_back(m);
            }
            ctx.save(sb, "sup_bound_sigma=" + num(s) + ".csv");
            if (mx.size() >= 2) {
                const double d = std::abs(mx.back() - mx[mx.size() - 2]) / mx.back();
                ctx.check("verify.sigma=" + num(s) + ".sup_bound_stability", d <= bound_stab, "relative change " + num(d));
            }
            const auto lq_f = catalog_function("abs_t_pow", spec, {1.0, -spec.tau() / 2.0, 1.0});
            std::vector<double> qs;
            for (double q : lq_qs)
                if (q < 2.0 - spec.tau()) qs.push_back(q);
            const auto rows = ctx.timed("lq", [&] { return lq_membership(lq_f, spec, com.domain, com.sizes, qs, com.grading, com.quad); });
            CsvWriter lq({"sigma", "q", "n", "norm", "converged"});
            for (const auto& r : rows) lq.add(s).add(r.q).add(r.n).add(r.norm).add(r.converged).end_row();
            ctx.save(lq, "lq_sigma=" + num(s) + ".csv");
            for (std::size_t k = 0; k < qs.size() && com.sizes.size() >= 2; ++k) {
                const auto& a = rows[k * com.sizes.size() + com.sizes.size() - 2];
                const auto& b = rows[k * com.sizes.size() + com.sizes.size() - 1];
                const double d = std::abs(b.norm - a.norm) / b.norm;
                ctx.check("verify.sigma=" + num(s) + ".lq_q=" + num(qs[k]), std::isfinite(b.norm) && d <= lq_stab,
                          "relative change " + num(d));
            }
        }
    }
    ctx.save(w, "verify.csv");
}

// ---------------------------------------------------------------- representation

inline void cmd_representation(Context& ctx, const Common& com) {
    const auto& c = ctx.cfg;
    const auto spec = VectorFieldSpec::model(com.sigma);
    const auto ws = read_rhs_list(c, "representation.w", {"Z", "conj_Z", "constant"}, spec);
    const auto n = static_cast<std::size_t>(c.get_int("representation.n", long(com.sizes.back())));
    const double tol = c.get_double("representation.tol", 1e-3);
    const double area_tol = c.get_double("representation.area_tol", 5e-3);
    const auto lattice = static_cast<std::size_t>(c.get_int("representation.lattice", 5));
    const double inset = c.get_double("representation.inset", 0.25);
    ctx.reject_unused();
    const auto g = com.grid(n, com.sigma);
    const auto targets = interior_lattice(*g, lattice, inset);
    CsvWriter gw({"w", "n", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "mismatch"});
    CsvWriter pw({"w", "n", "x", "t", "boundary_re", "boundary_im", "area_re", "area_im", "w_re", "w_im", "error"});
    for (const auto& wf : ws) {
        const auto w = GridFunction::sample(g, wf.eval);
        const auto gc = ctx.timed("green", [&] { return green_identity_check(w, spec); });
        gw.add(wf.name).add(n).add(gc.lhs).add(gc.rhs).add(gc.mismatch).end_row();
        ctx.check("representation.green." + wf.name, gc.mismatch <= tol, "mismatch " + num(gc.mismatch));
        if (wf.name == "conj_Z") {
            const auto& d = com.domain;
            const double s1 = com.sigma + 1.0;
            const cplx exact = -2.0 * I * d.width() * (std::pow(-d.t_min, s1) + std::pow(d.t_max, s1)) / s1 *
                               wf.eval(1.0, 0.0).real();
            const double rel = std::abs(gc.lhs - exact) / std::abs(exact);
            ctx.check("representation.green.conj_Z.area_value", rel <= area_tol, "relative error " + num(rel));
        }
        const auto pr = ctx.timed("pompeiu", [&] { return pompeiu_reconstruct(w, spec, targets, com.quad); });
        for (std::size_t k = 0; k < pr.targets.size(); ++k) {
            const std::size_t node = pr.targets[k];
            pw.add(wf.name).add(n).add(g->x()[node % g->nx()]).add(g->t()[node / g->nx()]);
            pw.add(pr.boundary_term[k]).add(pr.area_term[k]).add(w[node]);
            pw.add(std::abs(pr.boundary_term[k] + pr.area_term[k] - w[node])).end_row();
        }
        ctx.check("representation.pompeiu." + wf.name, pr.max_error <= tol && pr.converged,
                  "max error " + num(pr.max_error));
    }
    ctx.save(gw, "green.csv");
    ctx.save(pw, "pompeiu.csv");
}

// ---------------------------------------------------------------- counterexample settings

struct CounterexampleSettings {
    Domain domain{};
    std::size_t n = 256;
    std::vector<std::size_t> refine;
    std::vector<double> punctures;
    std::vector<double> p_list;
    double max_residual = 1e-2;
    double min_order = 1.5;
    double norm_tol = 0.05;
};

[[nodiscard]] inline CounterexampleSettings read_counterexample(const Config& c, const Common& com) {
    CounterexampleSettings s;
    s.domain = read_domain(c, "counterexample", Domain::make(-0.125, 0.125, -1.0, 1.0));
    s.n = static_cast<std::size_t>(c.get_int("counterexample.n", 256));
    s.refine = read_sizes(c, "counterexample.refine", {128.0, 256.0});
    s.punctures = c.get_doubles("counterexample.punctures", {1e-2, 1e-3, 1e-4});
    s.p_list = c.get_doubles("counterexample.p_list", {1.0, 2.0 + com.sigma});
    s.max_residual = c.get_double("counterexample.max_residual", s.max_residual);
    s.min_order = c.get_double("counterexample.min_order", s.min_order);
    s.norm_tol = c.get_double("counterexample.norm_tol", s.norm_tol);
    if (s.punctures.empty()) throw ConfigError("counterexample.punctures: at least one value required");
    for (std::size_t k = 1; k < s.punctures.size(); ++k)
        if (!(s.punctures[k] < s.punctures[k - 1]))
            throw ConfigError("counterexample.punctures must be strictly decreasing");
    return s;
}

// ---------------------------------------------------------------- holder

inline void cmd_holder(Context& ctx, const Common& com) {
    const auto& c = ctx.cfg;
    const auto spec = VectorFieldSpec::model(com.sigma);
    const auto f = read_rhs(c, "holder.rhs", "sign_t", spec);
    HolderOptions ho;
    ho.pair_budget = static_cast<std::size_t>(c.get_int("holder.pairs", long(ho.pair_budget)));
    ho.max_decades = static_cast<std::size_t>(c.get_int("holder.decades", long(ho.max_decades)));
    ho.seed = ctx.seed;
    const double stab = c.get_double("holder.stability", 0.2);
    const double slack = c.get_double("holder.slope_slack", 0.05);
    const bool negative = c.get_bool("holder.negative_control", true);
    const double growth = c.get_double("holder.growth", 2.0);
    const auto cs = read_counterexample(c, com);
    ctx.reject_unused();
    if (ho.pair_budget < 1000) throw ConfigError("holder.pairs must be >= 1000");
    const auto exps = make_exponents(com.sigma, com.p);

    CsvWriter hw({"n", "alpha", "max_ratio", "slope", "pairs", "converged"});
    CsvWriter sw({"n", "dz_lo", "pairs", "max_ratio"});
    std::vector<HolderReport> reps;
    for (std::size_t n : com.sizes) {
        const auto g = com.grid(n, com.sigma);
        const auto u = ctx.timed("apply", [&] { return CauchyOperator(spec, g, com.quad).apply(GridFunction::sample(g, f.eval)); });
        const auto h = ctx.timed("holder", [&] { return holder_scan(u.values, spec, exps, ho); });
        hw.add(n).add(exps.alpha).add(h.max_ratio).add(h.slope).add(h.pairs).add(u.all_converged()).end_row();
        for (const auto& st : h.strata) sw.add(n).add(st.dz_lo).add(st.pairs).add(st.max_ratio).end_row();
        reps.push_back(h);
    }
    ctx.save(hw, "holder.csv");
    ctx.save(sw, "holder_strata.csv");
    if (reps.size() >= 2) {
        const double a = reps[reps.size() - 2].max_ratio;
        const double b = reps.back().max_ratio;
        const double d = std::abs(b - a) / std::max(a, b);
        ctx.check("holder.ratio_stability", d <= stab, "relative change " + num(d));
    }
    ctx.check("holder.slope", reps.back().slope >= exps.alpha - slack, "slope " + num(reps.back().slope));
    if (negative) {
        if (cs.punctures.size() < 2) throw ConfigError("holder negative control needs two punctures");
        const auto g = Grid::make(cs.domain, cs.n, cs.n, com.grading_for(com.sigma));
        CsvWriter nw({"puncture", "max_ratio", "slope", "pairs"});
        std::vector<double> ratios;
        for (double e : cs.punctures) {
            const auto cp = make_counterexample(com.sigma, g, e);
            const auto h = ctx.timed("holder_negative", [&] { return holder_scan(cp.v, spec, exps, ho, &cp.mask); });
            nw.add(e).add(h.max_ratio).add(h.slope).add(h.pairs).end_row();
            ratios.push_back(h.max_ratio);
        }
        ctx.save(nw, "holder_negative.csv");
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k < ratios.size(); ++k) {
            const double decades = std::log10(cs.punctures[k - 1] / cs.punctures[k]);
            worst = std::min(worst, std::pow(ratios[k] / ratios[k - 1], 1.0 / decades));
        }
        ctx.check("holder.negative_control_growth", worst >= growth, "smallest growth per decade " + num(worst));
    }
}

// ---------------------------------------------------------------- counterexample

inline void cmd_counterexample(Context& ctx, const Common& com) {
    const auto cs = read_counterexample(ctx.cfg, com);
    ctx.reject_unused();
    const double gr = com.grading_for(com.sigma);
    CsvWriter rw({"n", "puncture", "retained", "residual"});
    std::vector<double> res;
    std::vector<std::size_t> ns = cs.refine;
    if (std::find(ns.begin(), ns.end(), cs.n) == ns.end()) ns.push_back(cs.n);
    std::sort(ns.begin(), ns.end());
    double at_n = 0.0;
    for (std::size_t n : ns) {
        const auto g = Grid::make(cs.domain, n, n, gr);
        const auto cp = make_counterexample(com.sigma, g, cs.punctures.front());
        const double r = ctx.timed("residual", [&] { return counterexample_residual(cp); });
        rw.add(n).add(cs.punctures.front()).add(cp.retained()).add(r).end_row();
        if (std::find(cs.refine.begin(), cs.refine.end(), n) != cs.refine.end()) res.push_back(r);
        if (n == cs.n) at_n = r;
    }
    ctx.save(rw, "counterexample_residual.csv");
    ctx.check("counterexample.residual", at_n <= cs.max_residual, "max |Lv - f| " + num(at_n));
    if (res.size() >= 2) {
        const double o = observed_order(res[res.size() - 2], res.back(), double(cs.refine[cs.refine.size() - 2]),
                                        double(cs.refine.back()));
        ctx.check("counterexample.residual_order", o >= cs.min_order, "observed order " + num(o));
    }
    const auto g = Grid::make(cs.domain, cs.n, cs.n, gr);
    const auto rows = ctx.timed("norms", [&] { return counterexample_norms(com.sigma, g, cs.punctures, cs.p_list); });
    CsvWriter nw({"p", "puncture", "f_norm", "relative_change", "sup_v"});
    for (const auto& r : rows) nw.add(r.p).add(r.puncture).add(r.f_norm).add(r.relative_change).add(r.sup_v).end_row();
    ctx.save(nw, "counterexample_norms.csv");
    bool increasing = true;
    for (std::size_t k = 1; k < cs.punctures.size(); ++k) increasing = increasing && rows[k].sup_v > rows[k - 1].sup_v;
    ctx.check("counterexample.sup_v_increasing", increasing, "sup|v| at smallest puncture " + num(rows[cs.punctures.size() - 1].sup_v));
    double worst = 0.0;
    for (const auto& r : rows)
        if (r.p <= 2.0 + com.sigma && std::isfinite(r.relative_change)) worst = std::max(worst, r.relative_change);
    ctx.check("counterexample.norm_stability", worst <= cs.norm_tol, "largest relative change for p <= 2 + sigma " + num(worst));
}

// ---------------------------------------------------------------- semilinear

inline void cmd_semilinear(Context& ctx, const Common& com) {
    const auto& c = ctx.cfg;
    const auto spec = VectorFieldSpec::model(com.sigma);
    const double a = c.get_double("semilinear.a", 0.1);
    const double b = c.get_double("semilinear.b", 0.0);
    const auto f = read_rhs(c, "semilinear.rhs", "constant", spec);
    PicardOptions po;
    po.relax = c.get_double("semilinear.relax", po.relax);
    po.tol = c.get_double("semilinear.tol", po.tol);
    po.max_iter = static_cast<std::size_t>(c.get_int("semilinear.max_iter", long(po.max_iter)));
    const auto n = static_cast<std::size_t>(c.get_int("semilinear.n", long(com.sizes.back())));
    const double max_ratio = c.get_double("semilinear.max_ratio", 0.2);
    const double max_res = c.get_double("semilinear.max_residual", 1e-3);
    const auto max_its = static_cast<std::size_t>(c.get_int("semilinear.max_iterations", 30));
    const bool need_cert = c.get_bool("semilinear.require_certificate", true);
    ctx.reject_unused();
    const auto exps = make_exponents(com.sigma, com.p);
    const auto g = com.grid(n, com.sigma);
    const CauchyOperator op(spec, g, com.quad);
    const auto fg = GridFunction::sample(g, f.eval);
    if (f.jump) po.jumps.push_back(*f.jump);
    const auto F = linear_rhs(GridFunction(g, a), GridFunction(g, b), fg, exps);
    const auto cert = ctx.timed("certificate", [&] { return contraction_certificate(F, op, exps); });
    po.m_emp = cert.m_emp;
    const auto out = ctx.timed("picard", [&] { return picard_solve(F, op, exps, po); });
    CsvWriter it({"iteration", "update", "ratio"});
    double worst = 0.0;
    for (std::size_t k = 0; k < out.updates.size(); ++k) {
        const double r = k == 0 ? std::numeric_limits<double>::quiet_NaN() : out.updates[k] / out.updates[k - 1];
        if (k > 0 && out.updates[k - 1] > 0.0) worst = std::max(worst, r);
        it.add(k + 1).add(out.updates[k]).add(r).end_row();
    }
    ctx.save(it, "semilinear_iterations.csv");
    CsvWriter sm({"n", "a", "b", "m_emp", "psi_norm", "product", "certified", "iterations", "converged",
                  "final_update", "residual", "relax", "bound_violations"});
    sm.add(n).add(a).add(b).add(cert.m_emp).add(cert.psi_norm).add(cert.product).add(cert.certified);
    sm.add(out.iterations).add(out.converged).add(out.final_update).add(out.residual).add(out.relax);
    sm.add(out.bound_violations).end_row();
    ctx.save(sm, "semilinear.csv");
    if (need_cert) ctx.check("semilinear.certified", cert.certified, "M_emp ||Psi||_p = " + num(cert.product));
    ctx.check("semilinear.converged", out.converged && out.iterations < max_its && out.quadrature_converged,
              std::to_string(out.iterations) + " iterations");
    ctx.check("semilinear.update_ratio", worst <= max_ratio, "largest update ratio " + num(worst));
    ctx.check("semilinear.residual", out.residual <= max_res, "residual " + num(out.residual));
    ctx.check("semilinear.a_priori_bound", out.bound_violations == 0,
              std::to_string(out.bound_violations) + " violations");
}

// ---------------------------------------------------------------- similarity

[[nodiscard]] inline Polynomial read_polynomial(const Config& c, const std::string& key, const std::string& def) {
    std::vector<cplx> co;
    for (const auto& s : c.get_list(key, {def})) {
        const auto colon = s.find(':');
        const auto p = Config::parse_string("re=" + s.substr(0, colon) +
                                            (colon == std::string::npos ? "" : "\nim=" + s.substr(colon + 1)));
        co.emplace_back(p.get_double("re", 0.0), p.get_double("im", 0.0));
    }
    return Polynomial(std::move(co));
}

inline void cmd_similarity(Context& ctx, const Common& com) {
    const auto& c = ctx.cfg;
    const auto spec = VectorFieldSpec::model(com.sigma);
    const auto n = static_cast<std::size_t>(c.get_int("similarity.n", long(com.sizes.back())));
    const auto u_f = read_rhs(c, "similarity.decompose.u", "exp_t", spec);
    const double da = c.get_double("similarity.decompose.a", 1.0);
    const double db = c.get_double("similarity.decompose.b", 0.0);
    const double zero_tol = c.get_double("similarity.zero_tol", -1.0);
    const auto h = read_polynomial(c, "similarity.construct.h", "0, 1");
    const double ca = c.get_double("similarity.construct.a", 0.0);
    const double cb = c.get_double("similarity.construct.b", 0.1);
    PicardOptions po;
    po.relax = c.get_double("similarity.relax", po.relax);
    po.tol = c.get_double("similarity.tol", po.tol);
    po.max_iter = static_cast<std::size_t>(c.get_int("similarity.max_iter", long(po.max_iter)));
    const double witness_tol = c.get_double("similarity.witness_tol", 1e-2);
    const double residual_tol = c.get_double("similarity.residual_tol", 1e-2);
    const double unimodular_tol = c.get_double("similarity.unimodular_tol", 1e-12);
    ctx.reject_unused();
    if (h.is_zero()) throw ConfigError("similarity.construct.h must not be the zero polynomial");
    const auto g = com.grid(n, com.sigma);
    const CauchyOperator op(spec, g, com.quad);
    const auto u = GridFunction::sample(g, u_f.eval);
    const auto d = ctx.timed("decompose", [&] { return decompose(u, GridFunction(g, da), GridFunction(g, db), op, zero_tol); });
    const auto k = ctx.timed("construct", [&] { return construct(h, GridFunction(g, ca), GridFunction(g, cb), op, po); });
    CsvWriter w({"operation", "metric", "value"});
    w.add("decompose").add("witness").add(d.witness).end_row();
    w.add("decompose").add("residual_Lv").add(d.residual_Lv).end_row();
    w.add("decompose").add("thresholded_fraction").add(d.thresholded_fraction).end_row();
    w.add("construct").add("iterations").add(double(k.solve.iterations)).end_row();
    w.add("construct").add("converged").add(k.solve.converged ? 1.0 : 0.0).end_row();
    w.add("construct").add("residual").add(k.residual).end_row();
    w.add("construct").add("unimodular_error").add(k.unimodular_error).end_row();
    ctx.save(w, "similarity.csv");
    if (d.many_thresholded) std::cerr << "warning: more than 20% of nodes thresholded in decompose\n";
    ctx.check("similarity.decompose_witness", d.witness <= witness_tol && d.quadrature_converged, "witness " + num(d.witness));
    ctx.check("similarity.construct_converged", k.solve.converged, std::to_string(k.solve.iterations) + " iterations");
    ctx.check("similarity.construct_residual", k.residual <= residual_tol, "residual " + num(k.residual));
    ctx.check("similarity.unimodular", k.unimodular_error <= unimodular_tol, "max error " + num(k.unimodular_error));
}

inline void write_manifest(const std::filesystem::path& out, const RunOptions& opt, const Config* cfg,
                           const Context* ctx, int code, const std::string& error, double total) {
    nlohmann::ordered_json m;
    m["tool"] = "hypocx";
    m["version"] = version;
    m["subcommand"] = opt.subcommand;
    m["config_path"] = opt.config_path;
    m["threads"] = opt.threads;
    m["seed"] = opt.seed;
    m["config"] = nlohmann::ordered_json::object();
    if (cfg)
        for (const auto& [k, v] : cfg->entries()) m["config"][k] = v;
    m["exit_code"] = code;
    if (!error.empty()) m["error"] = error;
    m["assertions"] = nlohmann::ordered_json::array();
    m["outputs"] = nlohmann::ordered_json::array();
    m["timings_seconds"] = nlohmann::ordered_json::object();
    if (ctx) {
        for (const auto& a : ctx->assertions) m["assertions"].push_back({{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
        for (const auto& o : ctx->outputs) m["outputs"].push_back(o);
        for (const auto& [k, v] : ctx->timings) m["timings_seconds"][k] = v;
    }
    m["timings_seconds"]["total"] = total;
    std::ofstream os(out / "manifest.json");
    os << m.dump(2) << '\n';
}

} // namespace detail

/// Runs one subcommand. Exit codes: 0 all assertions pass, 1 an assertion
/// failed (inconclusive quadrature counts as failed), 2 config or IO error.
/// manifest.json is written to the output directory whenever it can be
/// created.
inline int run(const RunOptions& opt, std::ostream& err = std::cerr) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    const std::filesystem::path out(opt.out_dir);
    bool out_ok = false;
    try {
        std::filesystem::create_directories(out);
        out_ok = std::filesystem::is_directory(out);
    } catch (const std::exception& e) {
        err << "error: cannot create output directory '" << opt.out_dir << "': " << e.what() << '\n';
        return 2;
    }
    if (!out_ok) {
        err << "error: output path '" << opt.out_dir << "' is not a directory\n";
        return 2;
    }
    std::unique_ptr<Config> cfg;
    std::unique_ptr<detail::Context> ctx;
    int code = 0;
    std::string error;
    try {
        if (std::find(subcommands().begin(), subcommands().end(), opt.subcommand) == subcommands().end())
            throw ConfigError("unknown subcommand '" + opt.subcommand + "'");
        cfg = std::make_unique<Config>(Config::load(opt.config_path));
        set_thread_count(opt.threads);
        ctx = std::make_unique<detail::Context>(detail::Context{*cfg, out, opt.seed, {}, {}, {}});
        detail::Common com;
        try {
            com = detail::read_common(*cfg);
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
        const std::map<std::string, std::function<void(detail::Context&, const detail::Common&)>> table{
            {"lemmas", detail::cmd_lemmas},
            {"apply", detail::cmd_apply},
            {"verify", detail::cmd_verify},
            {"representation", detail::cmd_representation},
            {"holder", detail::cmd_holder},
            {"counterexample", detail::cmd_counterexample},
            {"semilinear", detail::cmd_semilinear},
            {"similarity", detail::cmd_similarity},
        };
        table.at(opt.subcommand)(*ctx, com);
        for (const auto& a : ctx->assertions) {
            if (!a.pass) code = 1;
            err << (a.pass ? "PASS " : "FAIL ") << a.name << ": " << a.detail << '\n';
        }
    } catch (const ConfigError& e) {
        error = e.what();
        err << "error: " << error << '\n';
        code = 2;
    } catch (const InvalidArgument& e) {
        error = e.what();
        err << "error: " << error << '\n';
        code = 2;
    } catch (const std::ios_base::failure& e) {
        error = e.what();
        err << "error: " << error << '\n';
        code = 2;
    } catch (const std::runtime_error& e) {
        error = e.what();
        err << "error: " << error << '\n';
        code = 2;
    }
    try {
        detail::write_manifest(out, opt, cfg.get(), ctx.get(), code, error, elapsed());
    } catch (const std::exception& e) {
        err << "error: cannot write manifest: " << e.what() << '\n';
        return 2;
    }
    return code;
}

} // namespace hypocx::cli
