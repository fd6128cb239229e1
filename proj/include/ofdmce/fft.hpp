#pragma once

#include <cmath>
#include <span>
#include <unordered_map>
#include <vector>

#include "ofdmce/common.hpp"

namespace ofdmce {

inline bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

namespace detail {

// Twiddle table for one size: w[k] = exp(-i 2 pi k / n), k < n/2.
struct FftPlan {
    std::size_t n = 0;
    std::vector<cplx> twiddle;

    explicit FftPlan(std::size_t size) : n(size), twiddle(size / 2) {
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double ang = -2.0 * pi * static_cast<double>(k) / static_cast<double>(n);
            twiddle[k] = cplx(std::cos(ang), std::sin(ang));
        }
    }
};

inline const FftPlan& fft_plan(std::size_t n) {
    thread_local std::unordered_map<std::size_t, FftPlan> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, FftPlan(n)).first;
    return it->second;
}

// In-place radix-2 decimation-in-time. inverse=true conjugates the twiddles.
// No scaling here; callers apply the unitary 1/sqrt(n) factor.
inline void fft_radix2(std::vector<cplx>& x, bool inverse) {
    const std::size_t n = x.size();
    if (n == 1) return;
    const FftPlan& plan = fft_plan(n);

    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len >> 1;
        const std::size_t stride = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                cplx w = plan.twiddle[k * stride];
                if (inverse) w = std::conj(w);
                const cplx odd = x[start + k + half] * w;
                const cplx even = x[start + k];
                x[start + k] = even + odd;
                x[start + k + half] = even - odd;
            }
        }
    }
}

}  // namespace detail

// Unitary DFT: X[m] = (1/sqrt(n)) sum_k x[k] exp(-i 2 pi m k / n).
inline std::vector<cplx> dft(std::span<const cplx> x) {
    require(is_power_of_two(x.size()), "dft: length must be a power of two");
    std::vector<cplx> out(x.begin(), x.end());
    detail::fft_radix2(out, false);
    const double scale = 1.0 / std::sqrt(static_cast<double>(out.size()));
    for (auto& v : out) v *= scale;
    return out;
}

// Unitary inverse DFT: x[k] = (1/sqrt(n)) sum_m X[m] exp(+i 2 pi m k / n).
inline std::vector<cplx> idft(std::span<const cplx> x) {
    require(is_power_of_two(x.size()), "idft: length must be a power of two");
    std::vector<cplx> out(x.begin(), x.end());
    detail::fft_radix2(out, true);
    const double scale = 1.0 / std::sqrt(static_cast<double>(out.size()));
    for (auto& v : out) v *= scale;
    return out;
}

inline std::vector<cplx> dft(const std::vector<cplx>& x) { return dft(std::span<const cplx>(x)); }
inline std::vector<cplx> idft(const std::vector<cplx>& x) { return idft(std::span<const cplx>(x)); }

}  // namespace ofdmce
