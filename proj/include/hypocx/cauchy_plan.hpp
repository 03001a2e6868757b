#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "hypocx/cauchy_kernel.hpp"
#include "hypocx/fft.hpp"
#include "hypocx/grid.hpp"
#include "hypocx/parallel.hpp"
#include "hypocx/quadrature.hpp"

namespace hypocx {

/// Precomputed discrete model operator on every node of a grid with uniform
/// x-spacing. The weights are those of the per-target rule in
/// cauchy_kernel.hpp; because they depend on x only through xi - x0, each
/// pair (target row, source row) is a Toeplitz matrix applied by FFT, with
/// explicit corrections for the two boundary columns. On t-symmetric grids
/// only the rows with t >= 0 are stored and the others follow by reflection.
class CauchyPlan {
public:
    struct RowDiagnostics {
        std::size_t cells = 0;
        double weight_error = 0.0;  // sum of |m-point - (m+2)-point| weights
        bool converged = true;
    };

    /// Bytes a plan would occupy for this grid.
    [[nodiscard]] static std::size_t memory_bytes(const Grid& g) {
        const std::size_t nfft = detail::fft_friendly_size(2 * g.nx() - 1);
        const std::size_t rows = g.t_symmetric() ? g.nt() - g.nt() / 2 : g.nt();
        return rows * g.nt() * (nfft + 2 * g.nx()) * sizeof(cplx);
    }

    /// Builds the plan for the model field with exponent sigma. The graded
    /// coordinate is s(t) = s_of(eta(t)).
    static std::shared_ptr<const CauchyPlan> build(const GridPtr& grid, double sigma, const QuadratureConfig& cfg) {
        cfg.validate();
        require(grid->x_uniform(), "CauchyPlan: uniform x spacing required");
        auto plan = std::shared_ptr<CauchyPlan>(new CauchyPlan(grid, sigma, cfg));
        plan->assemble();
        return plan;
    }

    [[nodiscard]] const GridPtr& grid() const noexcept { return grid_; }
    [[nodiscard]] double sigma() const noexcept { return sigma_; }
    [[nodiscard]] const QuadratureConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const RowDiagnostics& row_diagnostics(std::size_t k) const { return diag_[k]; }

    /// raw(i0, k) = int int f / (Z_sigma - Z_sigma(x_i0, t_k)) dxi jac ds for
    /// every node, f bilinear in (xi, s).
    [[nodiscard]] std::vector<cplx> apply_raw(std::span<const cplx> f) const {
        const auto& g = *grid_;
        require(f.size() == g.size(), "CauchyPlan::apply_raw: size mismatch");
        const std::size_t nx = g.nx();
        const std::size_t nt = g.nt();
        std::vector<cplx> out(g.size());

        auto transform_rows = [&](bool mirrored) {
            std::vector<std::vector<cplx>> hat(nt, std::vector<cplx>(nfft_));
            parallel_for(nt, [&](std::size_t j) {
                detail::FftBuffer in(nfft_);
                detail::FftBuffer res(nfft_);
                const std::size_t src = mirrored ? g.mirror_row(j) : j;
                for (std::size_t n = 0; n < nfft_; ++n) in[n] = cplx{};
                for (std::size_t i = 0; i < nx; ++i) {
                    const cplx v = f[g.index(i, src)];
                    in[i] = mirrored ? std::conj(v) : v;
                }
                fft_->forward(in, res);
                std::copy(res.data(), res.data() + nfft_, hat[j].begin());
            });
            return hat;
        };
        const auto fhat = transform_rows(false);
        std::vector<std::vector<cplx>> ghat;
        if (symmetric_) ghat = transform_rows(true);

        parallel_for(nt, [&](std::size_t k) {
            const bool mirrored = symmetric_ && k < first_stored_;
            const std::size_t kk = mirrored ? g.mirror_row(k) : k;
            const std::size_t slot = kk - first_stored_;
            const auto& hat = mirrored ? ghat : fhat;
            detail::FftBuffer acc(nfft_);
            detail::FftBuffer res(nfft_);
            for (std::size_t n = 0; n < nfft_; ++n) acc[n] = cplx{};
            for (std::size_t j = 0; j < nt; ++j) {
                const cplx* kh = kernel(slot, j);
                const cplx* fh = hat[j].data();
                for (std::size_t n = 0; n < nfft_; ++n) acc[n] += kh[n] * fh[n];
            }
            fft_->backward(acc, res);
            const double inv = 1.0 / static_cast<double>(nfft_);
            for (std::size_t i0 = 0; i0 < nx; ++i0) {
                cplx u = res[i0] * inv;
                for (std::size_t j = 0; j < nt; ++j) {
                    const std::size_t src = mirrored ? g.mirror_row(j) : j;
                    cplx f0 = f[g.index(0, src)];
                    cplx fn = f[g.index(nx - 1, src)];
                    if (mirrored) {
                        f0 = std::conj(f0);
                        fn = std::conj(fn);
                    }
                    u -= corr_q(slot, j)[i0] * f0 + corr_p(slot, j)[i0] * fn;
                }
                out[g.index(i0, k)] = mirrored ? std::conj(u) : u;
            }
        });
        return out;
    }

private:
    CauchyPlan(const GridPtr& grid, double sigma, const QuadratureConfig& cfg)
        : grid_(grid), sigma_(sigma), cfg_(cfg) {
        const double tau = sigma / (sigma + 1.0);
        axis_ = detail::GradedAxis{tau, cfg.grading_for(tau)};
        const auto& g = *grid_;
        nfft_ = detail::fft_friendly_size(2 * g.nx() - 1);
        fft_ = std::make_unique<detail::FftPair>(nfft_);
        s_.resize(g.nt());
        for (std::size_t j = 0; j < g.nt(); ++j) {
            const double t = g.t()[j];
            const double eta = t * (sigma == 0.0 ? 1.0 : std::pow(std::abs(t), sigma)) / (sigma + 1.0);
            s_[j] = axis_.s_of(eta);
        }
        symmetric_ = g.t_symmetric();
        first_stored_ = symmetric_ ? g.nt() / 2 : 0;
        stored_ = g.nt() - first_stored_;
        const std::size_t blocks = stored_ * g.nt();
        kernels_.assign(blocks * nfft_, cplx{});
        corrections_.assign(blocks * 2 * g.nx(), cplx{});
        diag_.resize(g.nt());
    }

    [[nodiscard]] cplx* kernel(std::size_t slot, std::size_t j) { return kernels_.data() + (slot * grid_->nt() + j) * nfft_; }
    [[nodiscard]] const cplx* kernel(std::size_t slot, std::size_t j) const {
        return kernels_.data() + (slot * grid_->nt() + j) * nfft_;
    }
    [[nodiscard]] cplx* corr_q(std::size_t slot, std::size_t j) {
        return corrections_.data() + (slot * grid_->nt() + j) * 2 * grid_->nx();
    }
    [[nodiscard]] const cplx* corr_q(std::size_t slot, std::size_t j) const {
        return corrections_.data() + (slot * grid_->nt() + j) * 2 * grid_->nx();
    }
    [[nodiscard]] cplx* corr_p(std::size_t slot, std::size_t j) { return corr_q(slot, j) + grid_->nx(); }
    [[nodiscard]] const cplx* corr_p(std::size_t slot, std::size_t j) const { return corr_q(slot, j) + grid_->nx(); }

    void assemble() {
        const auto& g = *grid_;
        const std::size_t nx = g.nx();
        const std::size_t nt = g.nt();
        const double hx = g.hx();
        const detail::RowRuleBuilder rb(axis_, cfg_);
        parallel_for(stored_, [&](std::size_t slot) {
            const std::size_t k = slot + first_stored_;
            const double s0 = s_[k];
            const double eta0 = axis_.eta(s0);
            // Cell moments for left-node offsets e in [-nx, nx-1], stored at e + nx.
            std::vector<cplx> left(2 * nx);
            std::vector<cplx> right(2 * nx);
            std::vector<cplx> toe(2 * nx - 1);  // N(d) at d + nx - 1
            std::vector<std::vector<cplx>> real_k(nt, std::vector<cplx>(2 * nx - 1));
            std::vector<cplx> near_lo(2 * nx - 1);
            std::vector<cplx> near_hi(2 * nx - 1);
            RowDiagnostics diag;

            auto moments = [&](double delta) {
                for (std::size_t idx = 0; idx < 2 * nx; ++idx) {
                    const double e = static_cast<double>(static_cast<long>(idx) - static_cast<long>(nx));
                    const auto cm = detail::cell_moments(e * hx, hx, delta);
                    left[idx] = cm.left;
                    right[idx] = cm.right;
                }
                for (std::size_t di = 0; di < 2 * nx - 1; ++di) {
                    // d = di - (nx - 1); L(d) at d + nx, R(d - 1) at d - 1 + nx
                    toe[di] = left[di + 1] + right[di];
                }
            };
            for (std::size_t b = 0; b + 1 < nt; ++b) {
                const auto rule = rb.build(s_[b], s_[b + 1], s0, eta0);
                diag.cells += rule.pieces * (nx - 1);
                diag.converged = diag.converged && rule.converged;
                bool any_near = false;
                std::fill(near_lo.begin(), near_lo.end(), cplx{});
                std::fill(near_hi.begin(), near_hi.end(), cplx{});
                auto accumulate = [&](const detail::RowPoint& p, bool into_plan, std::vector<cplx>* near_acc) {
                    const double delta = detail::safe_delta(eta0, axis_.eta(p.s), p.s, s0);
                    moments(delta);
                    if (into_plan) {
                        const double w0 = p.weight * (1.0 - p.lambda);
                        const double w1 = p.weight * p.lambda;
                        auto& r0 = real_k[b];
                        auto& r1 = real_k[b + 1];
                        for (std::size_t di = 0; di < 2 * nx - 1; ++di) {
                            r0[di] += w0 * toe[di];
                            r1[di] += w1 * toe[di];
                        }
                        cplx* q0 = corr_q(slot, b);
                        cplx* q1 = corr_q(slot, b + 1);
                        cplx* p0 = corr_p(slot, b);
                        cplx* p1 = corr_p(slot, b + 1);
                        for (std::size_t i0 = 0; i0 < nx; ++i0) {
                            // Q[i0] = R(-1 - i0), P[i0] = L(nx - 1 - i0)
                            const cplx rq = right[nx - 1 - i0];
                            const cplx lp = left[2 * nx - 1 - i0];
                            q0[i0] += w0 * rq;
                            q1[i0] += w1 * rq;
                            p0[i0] += w0 * lp;
                            p1[i0] += w1 * lp;
                        }
                    }
                    if (near_acc) {
                        for (std::size_t di = 0; di < 2 * nx - 1; ++di) (*near_acc)[di] += p.weight * toe[di];
                    }
                };
                for (const auto& p : rule.points) {
                    accumulate(p, true, p.near ? &near_lo : nullptr);
                    any_near = any_near || p.near;
                }
                for (const auto& p : rule.check) accumulate(p, false, &near_hi);
                if (any_near) {
                    for (std::size_t di = 0; di < 2 * nx - 1; ++di) diag.weight_error += std::abs(near_lo[di] - near_hi[di]);
                }
            }
            detail::FftBuffer in(nfft_);
            detail::FftBuffer res(nfft_);
            for (std::size_t j = 0; j < nt; ++j) {
                for (std::size_t n = 0; n < nfft_; ++n) in[n] = cplx{};
                // G[n mod nfft] = N(-n), n in [-(nx-1), nx-1]
                for (std::size_t di = 0; di < 2 * nx - 1; ++di) {
                    const long d = static_cast<long>(di) - static_cast<long>(nx - 1);
                    const long n = -d;
                    const std::size_t pos = static_cast<std::size_t>(n < 0 ? n + static_cast<long>(nfft_) : n);
                    in[pos] = real_k[j][di];
                }
                fft_->forward(in, res);
                std::copy(res.data(), res.data() + nfft_, kernel(slot, j));
            }
            diag_[k] = diag;
            if (symmetric_ && k != g.mirror_row(k)) diag_[g.mirror_row(k)] = diag;
        });
    }

    GridPtr grid_;
    double sigma_;
    QuadratureConfig cfg_;
    detail::GradedAxis axis_{};
    std::size_t nfft_ = 0;
    std::unique_ptr<detail::FftPair> fft_;
    std::vector<double> s_;
    bool symmetric_ = false;
    std::size_t first_stored_ = 0;
    std::size_t stored_ = 0;
    std::vector<cplx> kernels_;
    std::vector<cplx> corrections_;
    std::vector<RowDiagnostics> diag_;
};

} // namespace hypocx
