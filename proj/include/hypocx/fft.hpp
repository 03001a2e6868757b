#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

#include "hypocx/common.hpp"

namespace hypocx::detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// fftw_malloc'd complex buffer (every buffer shares FFTW's alignment, so
/// plans may be executed on any of them).
class FftBuffer {
public:
    explicit FftBuffer(std::size_t n) : n_(n), p_(static_cast<cplx*>(fftw_malloc(sizeof(cplx) * n))) {
        if (!p_) throw std::bad_alloc();
    }
    FftBuffer(const FftBuffer&) = delete;
    FftBuffer& operator=(const FftBuffer&) = delete;
    ~FftBuffer() { fftw_free(p_); }

    [[nodiscard]] cplx* data() noexcept { return p_; }
    [[nodiscard]] const cplx* data() const noexcept { return p_; }
    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    cplx& operator[](std::size_t k) noexcept { return p_[k]; }
    const cplx& operator[](std::size_t k) const noexcept { return p_[k]; }

private:
    std::size_t n_;
    cplx* p_;
};

inline fftw_complex* as_fftw(cplx* p) noexcept { return reinterpret_cast<fftw_complex*>(p); }

/// Forward and unnormalized backward 1-d transforms of a fixed length,
/// planned with FFTW_ESTIMATE so the result does not depend on timing.
class FftPair {
public:
    explicit FftPair(std::size_t n) : n_(n) {
        FftBuffer a(n);
        FftBuffer b(n);
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fwd_ = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(a.data()), as_fftw(b.data()), FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(static_cast<int>(n), as_fftw(a.data()), as_fftw(b.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw std::runtime_error("FFTW planning failed");
    }
    FftPair(const FftPair&) = delete;
    FftPair& operator=(const FftPair&) = delete;
    ~FftPair() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    void forward(FftBuffer& in, FftBuffer& out) const { fftw_execute_dft(fwd_, as_fftw(in.data()), as_fftw(out.data())); }
    void backward(FftBuffer& in, FftBuffer& out) const { fftw_execute_dft(bwd_, as_fftw(in.data()), as_fftw(out.data())); }

private:
    std::size_t n_;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

/// Smallest n >= target whose prime factors are all in {2, 3, 5, 7}.
[[nodiscard]] inline std::size_t fft_friendly_size(std::size_t target) {
    for (std::size_t n = std::max<std::size_t>(target, 1);; ++n) {
        std::size_t m = n;
        for (std::size_t p : {2u, 3u, 5u, 7u})
            while (m % p == 0) m /= p;
        if (m == 1) return n;
    }
}

} // namespace hypocx::detail
