#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "hypocx/common.hpp"

namespace hypocx {

/// Axis-parallel rectangle crossed by the characteristic line t = 0.
struct Domain {
    double x_min = -1.0;
    double x_max = 1.0;
    double t_min = -1.0;
    double t_max = 1.0;

    static Domain make(double x_min, double x_max, double t_min, double t_max) {
        require(x_min < x_max, "Domain: x_min < x_max required");
        require(t_min < 0.0 && 0.0 < t_max, "Domain: t_min < 0 < t_max required");
        return Domain{x_min, x_max, t_min, t_max};
    }

    [[nodiscard]] double width() const noexcept { return x_max - x_min; }
    [[nodiscard]] double height() const noexcept { return t_max - t_min; }
    [[nodiscard]] double area() const noexcept { return width() * height(); }
};

/// Tensor grid: uniform in x, graded toward t = 0 in t. The row t = 0 is
/// always present; on each side t_k = t_side * (k / n_side)^grading.
class Grid {
public:
    static std::shared_ptr<const Grid> make(const Domain& dom, std::size_t x_cells, std::size_t t_cells,
                                            double grading) {
        require(x_cells >= 2 && t_cells >= 2, "Grid: need at least 2 cells per axis");
        require(grading >= 1.0, "Grid: grading exponent must be >= 1");
        auto g = std::shared_ptr<Grid>(new Grid());
        g->domain_ = dom;
        g->grading_ = grading;
        g->x_.resize(x_cells + 1);
        g->hx_ = dom.width() / static_cast<double>(x_cells);
        for (std::size_t i = 0; i <= x_cells; ++i) {
            g->x_[i] = dom.x_min + g->hx_ * static_cast<double>(i);
        }
        g->x_[x_cells] = dom.x_max;

        const double frac = -dom.t_min / dom.height();
        auto n_neg = static_cast<std::size_t>(std::lround(frac * static_cast<double>(t_cells)));
        n_neg = std::clamp<std::size_t>(n_neg, 1, t_cells - 1);
        const std::size_t n_pos = t_cells - n_neg;
        g->t_.resize(t_cells + 1);
        for (std::size_t k = 0; k <= n_neg; ++k) {
            const double u = static_cast<double>(n_neg - k) / static_cast<double>(n_neg);
            g->t_[k] = dom.t_min * std::pow(u, grading);
        }
        for (std::size_t k = 1; k <= n_pos; ++k) {
            const double u = static_cast<double>(k) / static_cast<double>(n_pos);
            g->t_[n_neg + k] = dom.t_max * std::pow(u, grading);
        }
        g->t_[n_neg] = 0.0;
        g->sigma_row_ = n_neg;
        g->symmetric_ = (n_neg == n_pos) && (dom.t_min == -dom.t_max);
        g->wx_ = trapezoid_weights(g->x_);
        g->wt_ = trapezoid_weights(g->t_);
        return g;
    }

    /// Grid with explicit, strictly increasing node coordinates. The second
    /// axis need not contain 0 (sigma_row() is then npos).
    static std::shared_ptr<const Grid> from_nodes(std::vector<double> xs, std::vector<double> ts) {
        require(xs.size() >= 3 && ts.size() >= 3, "Grid: need at least 3 nodes per axis");
        require(std::adjacent_find(xs.begin(), xs.end(), std::greater_equal<>()) == xs.end(),
                "Grid: x nodes must be strictly increasing");
        require(std::adjacent_find(ts.begin(), ts.end(), std::greater_equal<>()) == ts.end(),
                "Grid: t nodes must be strictly increasing");
        auto g = std::shared_ptr<Grid>(new Grid());
        g->domain_ = Domain{xs.front(), xs.back(), ts.front(), ts.back()};
        g->grading_ = 0.0;
        g->hx_ = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
        g->sigma_row_ = npos;
        for (std::size_t k = 0; k < ts.size(); ++k)
            if (ts[k] == 0.0) g->sigma_row_ = k;
        g->symmetric_ = true;
        for (std::size_t k = 0; k < ts.size(); ++k)
            if (ts[k] != -ts[ts.size() - 1 - k]) g->symmetric_ = false;
        g->x_ = std::move(xs);
        g->t_ = std::move(ts);
        g->x_uniform_ = true;
        for (std::size_t i = 0; i < g->x_.size(); ++i)
            if (std::abs(g->x_[i] - (g->x_.front() + g->hx_ * static_cast<double>(i))) > 1e-12 * (1.0 + std::abs(g->x_[i])))
                g->x_uniform_ = false;
        g->wx_ = trapezoid_weights(g->x_);
        g->wt_ = trapezoid_weights(g->t_);
        return g;
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    [[nodiscard]] std::size_t nx() const noexcept { return x_.size(); }
    [[nodiscard]] std::size_t nt() const noexcept { return t_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return x_.size() * t_.size(); }
    [[nodiscard]] std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * x_.size() + i; }
    [[nodiscard]] std::span<const double> x() const noexcept { return x_; }
    [[nodiscard]] std::span<const double> t() const noexcept { return t_; }
    [[nodiscard]] double hx() const noexcept { return hx_; }
    [[nodiscard]] bool x_uniform() const noexcept { return x_uniform_; }
    [[nodiscard]] double grading() const noexcept { return grading_; }
    [[nodiscard]] const Domain& domain() const noexcept { return domain_; }
    /// Row index of t = 0.
    [[nodiscard]] std::size_t sigma_row() const noexcept { return sigma_row_; }
    /// True when t_{mirror(j)} == -t_j exactly for every row.
    [[nodiscard]] bool t_symmetric() const noexcept { return symmetric_; }
    [[nodiscard]] std::size_t mirror_row(std::size_t j) const noexcept { return nt() - 1 - j; }
    [[nodiscard]] std::span<const double> weights_x() const noexcept { return wx_; }
    [[nodiscard]] std::span<const double> weights_t() const noexcept { return wt_; }
    [[nodiscard]] bool on_boundary(std::size_t i, std::size_t j) const noexcept {
        return i == 0 || j == 0 || i + 1 == nx() || j + 1 == nt();
    }

private:
    Grid() = default;

    static std::vector<double> trapezoid_weights(const std::vector<double>& nodes) {
        std::vector<double> w(nodes.size(), 0.0);
        for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
            const double h = 0.5 * (nodes[k + 1] - nodes[k]);
            w[k] += h;
            w[k + 1] += h;
        }
        return w;
    }

    Domain domain_{};
    std::vector<double> x_;
    std::vector<double> t_;
    std::vector<double> wx_;
    std::vector<double> wt_;
    double hx_ = 0.0;
    double grading_ = 1.0;
    std::size_t sigma_row_ = 0;
    bool symmetric_ = false;
    bool x_uniform_ = true;
};

using GridPtr = std::shared_ptr<const Grid>;

/// t-grading used when none is configured: 1 + sigma, and at least 2/sigma so
/// the three-point t-stencil keeps second order against the |t|^sigma factor
/// in u_t near t = 0. sigma = 0 gives a uniform grid.
[[nodiscard]] inline double default_grading(double sigma) noexcept {
    if (sigma <= 0.0) return 1.0;
    return std::max(1.0 + sigma, 2.0 / sigma);
}

/// Complex samples at every node of a grid, stored row-major in t.
class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(GridPtr grid, cplx fill = 0.0) : grid_(std::move(grid)) {
        require(grid_ != nullptr, "GridFunction: null grid");
        values_.assign(grid_->size(), fill);
    }
    GridFunction(GridPtr grid, std::vector<cplx> values) : grid_(std::move(grid)), values_(std::move(values)) {
        require(grid_ != nullptr, "GridFunction: null grid");
        require(values_.size() == grid_->size(), "GridFunction: value count must equal nx*nt");
    }

    template <class F>
    static GridFunction sample(GridPtr grid, F&& f) {
        GridFunction g(grid);
        const auto xs = grid->x();
        const auto ts = grid->t();
        for (std::size_t j = 0; j < ts.size(); ++j) {
            for (std::size_t i = 0; i < xs.size(); ++i) {
                g.values_[grid->index(i, j)] = cplx(f(xs[i], ts[j]));
            }
        }
        return g;
    }

    [[nodiscard]] const GridPtr& grid() const noexcept { return grid_; }
    [[nodiscard]] std::span<const cplx> values() const noexcept { return values_; }
    [[nodiscard]] std::span<cplx> values() noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] cplx& operator[](std::size_t k) noexcept { return values_[k]; }
    [[nodiscard]] const cplx& operator[](std::size_t k) const noexcept { return values_[k]; }
    [[nodiscard]] cplx& at(std::size_t i, std::size_t j) noexcept { return values_[grid_->index(i, j)]; }
    [[nodiscard]] const cplx& at(std::size_t i, std::size_t j) const noexcept { return values_[grid_->index(i, j)]; }

    template <class F>
    [[nodiscard]] GridFunction map(F&& f) const {
        GridFunction out(grid_);
        for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] = f(values_[k]);
        return out;
    }

    GridFunction& operator+=(const GridFunction& o) {
        check_same(o);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
        return *this;
    }
    GridFunction& operator-=(const GridFunction& o) {
        check_same(o);
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
        return *this;
    }
    GridFunction& operator*=(cplx c) {
        for (auto& v : values_) v *= c;
        return *this;
    }
    friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
    friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
    friend GridFunction operator*(cplx c, GridFunction a) { return a *= c; }
    friend GridFunction operator*(GridFunction a, cplx c) { return a *= c; }

    /// Pointwise product.
    [[nodiscard]] friend GridFunction hadamard(const GridFunction& a, const GridFunction& b) {
        a.check_same(b);
        GridFunction out(a.grid_);
        for (std::size_t k = 0; k < a.values_.size(); ++k) out.values_[k] = a.values_[k] * b.values_[k];
        return out;
    }

private:
    void check_same(const GridFunction& o) const {
        require(grid_ == o.grid_ || (grid_ && o.grid_ && grid_->size() == o.grid_->size()),
                "GridFunction: grids differ");
    }

    GridPtr grid_;
    std::vector<cplx> values_;
};

/// Per-node boolean selection (1 = included).
using NodeMask = std::vector<unsigned char>;

} // namespace hypocx
