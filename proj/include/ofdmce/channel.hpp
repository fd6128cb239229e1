#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ofdmce/common.hpp"
#include "ofdmce/ofdm.hpp"

namespace ofdmce {

struct PowerDelayProfile {
    std::vector<int> delays;    // tap delays in samples, strictly increasing, first = 0
    std::vector<double> powers; // linear per-tap powers, normalized to sum 1
    std::string name;

    std::size_t n_taps() const { return delays.size(); }

    void validate() const {
        require(!delays.empty() && delays.size() == powers.size(),
                "pdp: need matching non-empty delay/power lists");
        require(delays.front() == 0, "pdp: first tap delay must be 0");
        for (std::size_t i = 1; i < delays.size(); ++i)
            require(delays[i] > delays[i - 1], "pdp: delays must be strictly increasing");
        double sum = 0.0;
        for (double p : powers) {
            require(p > 0.0, "pdp: tap powers must be positive");
            sum += p;
        }
        require(std::abs(sum - 1.0) <= 1e-9, "pdp: tap powers must sum to 1");
    }

    void validate_against_guard(int n_guard) const {
        validate();
        require(delays.back() <= n_guard, "pdp: max tap delay must not exceed the cyclic prefix");
    }

    // Four strongest TDL-A clusters (0, -2.2, -4.0, -6.0 dB), renormalized and
    // quantized to the sample grid.
    static PowerDelayProfile tdl_a4() {
        PowerDelayProfile pdp;
        pdp.name = "TDL-A-4";
        pdp.delays = {0, 1, 3, 6};
        pdp.powers = {0.4440782476966436, 0.2675836051167157, 0.1767907346948659,
                      0.1115474124917750};
        return pdp;
    }
};

struct DopplerConfig {
    double f_d_max = 36.0;  // Hz
    int n_harmonics = 32;
    std::uint64_t seed = 1;

    void validate() const {
        require(f_d_max >= 0.0, "doppler: f_d_max must be >= 0");
        require(n_harmonics >= 1, "doppler: need at least one harmonic");
    }
};

// Sum-of-sinusoids realization of the 2x2 tapped-delay-line channel.
//
//   g_{a,b,i}(n) = (rho_i / sqrt(M)) * sum_l exp(j(2 pi f_{a,b,l,i} n / fs + theta_{a,b,l,i}))
//
// with f = f_d_max * sin(2 pi u) and theta = 2 pi u from a single uniform
// draw u per (a,b,l,i). Gains are materialized over the window
// [t0, t0 + n_samples); gain_at evaluates the closed form at any index.
struct ChannelRealization {
    PowerDelayProfile pdp;
    DopplerConfig doppler;
    double sample_rate = 0.0;
    std::int64_t t0 = 0;
    std::size_t n_samples = 0;
    std::vector<double> freqs;   // [((a*2 + b)*L + i)*M + l]
    std::vector<double> phases;  // same layout
    std::vector<std::vector<cplx>> gains;  // [(a*2 + b)*L + i] -> window series

    std::size_t tap_index(int a, int b, int i) const {
        return (static_cast<std::size_t>(a) * n_antennas + b) * pdp.n_taps() + i;
    }

    const std::vector<cplx>& tap_series(int a, int b, int i) const {
        return gains[tap_index(a, b, i)];
    }

    // Closed-form evaluation at absolute sample index n.
    cplx gain_at(int a, int b, int i, std::int64_t n) const {
        const std::size_t m = static_cast<std::size_t>(doppler.n_harmonics);
        const std::size_t base = tap_index(a, b, i) * m;
        const double t = static_cast<double>(n) / sample_rate;
        cplx acc(0.0, 0.0);
        for (std::size_t l = 0; l < m; ++l)
            acc += std::polar(1.0, 2.0 * pi * freqs[base + l] * t + phases[base + l]);
        return acc * (std::sqrt(pdp.powers[i]) / std::sqrt(static_cast<double>(m)));
    }

    void materialize() {
        const std::size_t m = static_cast<std::size_t>(doppler.n_harmonics);
        const std::size_t n_series = n_antennas * n_antennas * pdp.n_taps();
        gains.assign(n_series, {});
        std::vector<cplx> rot(m), step(m);
        for (std::size_t s = 0; s < n_series; ++s) {
            const int i = static_cast<int>(s % pdp.n_taps());
            const double amp = std::sqrt(pdp.powers[i]) / std::sqrt(static_cast<double>(m));
            auto& series = gains[s];
            series.resize(n_samples);
            const std::size_t base = s * m;
            for (std::size_t l = 0; l < m; ++l) {
                const double w = 2.0 * pi * freqs[base + l] / sample_rate;
                rot[l] = std::polar(1.0, w * static_cast<double>(t0) + phases[base + l]);
                step[l] = std::polar(1.0, w);
            }
            for (std::size_t n = 0; n < n_samples; ++n) {
                // Resynchronize the rotators periodically to bound drift.
                if ((n & 0xfff) == 0 && n > 0) {
                    for (std::size_t l = 0; l < m; ++l) {
                        const double w = 2.0 * pi * freqs[base + l] / sample_rate;
                        rot[l] = std::polar(1.0, w * static_cast<double>(t0 + static_cast<std::int64_t>(n)) +
                                                     phases[base + l]);
                    }
                }
                cplx acc(0.0, 0.0);
                for (std::size_t l = 0; l < m; ++l) {
                    acc += rot[l];
                    rot[l] *= step[l];
                }
                series[n] = acc * amp;
            }
        }
    }
};

// Draw order: for a, for b, for tap i, for harmonic l — one uniform per tuple.
inline ChannelRealization generate_taps(const PowerDelayProfile& pdp, const DopplerConfig& dop,
                                        std::size_t n_samples, double sample_rate,
                                        std::int64_t t0 = 0) {
    pdp.validate();
    dop.validate();
    require(n_samples >= 1, "generate_taps: need at least one sample");
    require(sample_rate > 0.0, "generate_taps: sample_rate must be positive");

    ChannelRealization ch;
    ch.pdp = pdp;
    ch.doppler = dop;
    ch.sample_rate = sample_rate;
    ch.t0 = t0;
    ch.n_samples = n_samples;

    const std::size_t m = static_cast<std::size_t>(dop.n_harmonics);
    const std::size_t total = n_antennas * n_antennas * pdp.n_taps() * m;
    ch.freqs.resize(total);
    ch.phases.resize(total);
    std::mt19937_64 rng(dop.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t idx = 0; idx < total; ++idx) {
        const double u = unif(rng);
        ch.freqs[idx] = dop.f_d_max * std::sin(2.0 * pi * u);
        ch.phases[idx] = 2.0 * pi * u;
    }
    ch.materialize();
    return ch;
}

// Time-variant tapped-delay-line convolution:
//   y_b(n) = sum_a sum_i g_{a,b,i}(n) * x_a(n - delay_i)
// Samples before the stream start are zero; output length equals input length.
inline TimeSignal apply_channel(const TimeSignal& tx, const ChannelRealization& ch) {
    const std::size_t len = tx.samples[0].size();
    require(tx.samples[1].size() == len, "apply_channel: antenna streams must match in length");
    require(tx.t0 >= ch.t0 &&
                tx.t0 + static_cast<std::int64_t>(len) <= ch.t0 + static_cast<std::int64_t>(ch.n_samples),
            "apply_channel: channel realization does not cover the signal window");

    TimeSignal rx;
    rx.t0 = tx.t0;
    const std::size_t off = static_cast<std::size_t>(tx.t0 - ch.t0);
    for (int b = 0; b < n_antennas; ++b) {
        auto& y = rx.samples[b];
        y.assign(len, cplx(0.0, 0.0));
        for (int a = 0; a < n_antennas; ++a) {
            for (std::size_t i = 0; i < ch.pdp.n_taps(); ++i) {
                const int d = ch.pdp.delays[i];
                const auto& g = ch.tap_series(a, b, static_cast<int>(i));
                const auto& x = tx.samples[a];
                for (std::size_t n = static_cast<std::size_t>(d); n < len; ++n)
                    y[n] += g[off + n] * x[n - d];
            }
        }
    }
    return rx;
}

// Circularly symmetric complex Gaussian noise, total variance sigma_w^2 per
// complex sample (variance/2 per real dimension).
inline TimeSignal add_awgn(const TimeSignal& sig, double noise_variance, std::mt19937_64& rng) {
    require(noise_variance >= 0.0, "add_awgn: noise variance must be >= 0");
    TimeSignal out = sig;
    if (noise_variance == 0.0) return out;
    std::normal_distribution<double> gauss(0.0, std::sqrt(noise_variance / 2.0));
    for (int a = 0; a < n_antennas; ++a)
        for (auto& v : out.samples[a]) v += cplx(gauss(rng), gauss(rng));
    return out;
}

inline double snr_to_noise_variance(double snr_db, double signal_power) {
    require(signal_power > 0.0, "snr_to_noise_variance: signal power must be positive");
    return signal_power / std::pow(10.0, snr_db / 10.0);
}

inline double mean_power(const TimeSignal& sig) {
    double acc = 0.0;
    std::size_t count = 0;
    for (int a = 0; a < n_antennas; ++a) {
        for (const cplx& v : sig.samples[a]) acc += std::norm(v);
        count += sig.samples[a].size();
    }
    return count ? acc / static_cast<double>(count) : 0.0;
}

// Effective per-symbol channel taps: the average of g over the FFT window of
// each OFDM symbol. This is exactly the ICI-free diagonal of the time-variant
// channel, so it is the reference for perfect CSI and estimator MSE.
// Returns [pair(a,b)][symbol][tap].
inline std::vector<std::vector<std::array<cplx, 8>>> effective_taps(
    const ChannelRealization& ch, const OfdmParams& p, int n_symbols, std::int64_t t0) {
    require(ch.pdp.n_taps() <= 8, "effective_taps: at most 8 taps supported");
    const std::size_t sym_len = static_cast<std::size_t>(p.symbol_len());
    require(t0 >= ch.t0 && t0 + static_cast<std::int64_t>(sym_len) * n_symbols <=
                               ch.t0 + static_cast<std::int64_t>(ch.n_samples),
            "effective_taps: realization does not cover the symbols");
    std::vector<std::vector<std::array<cplx, 8>>> out(
        n_antennas * n_antennas, std::vector<std::array<cplx, 8>>(n_symbols));
    const std::size_t base_off = static_cast<std::size_t>(t0 - ch.t0);
    for (int a = 0; a < n_antennas; ++a) {
        for (int b = 0; b < n_antennas; ++b) {
            for (std::size_t i = 0; i < ch.pdp.n_taps(); ++i) {
                const auto& g = ch.tap_series(a, b, static_cast<int>(i));
                for (int t = 0; t < n_symbols; ++t) {
                    const std::size_t w0 = base_off + static_cast<std::size_t>(t) * sym_len +
                                           static_cast<std::size_t>(p.n_guard);
                    cplx acc(0.0, 0.0);
                    for (int n = 0; n < p.n_fft; ++n) acc += g[w0 + n];
                    out[a * n_antennas + b][t][i] = acc / static_cast<double>(p.n_fft);
                }
            }
        }
    }
    return out;
}

// Frequency response of integer-delay taps: H[k] = sum_i g_i e^{-j 2 pi k d_i / N}.
inline void taps_to_response(const std::array<cplx, 8>& taps, const PowerDelayProfile& pdp,
                             int n_fft, cplx* out) {
    for (int k = 0; k < n_fft; ++k) out[k] = cplx(0.0, 0.0);
    for (std::size_t i = 0; i < pdp.n_taps(); ++i) {
        const double w = -2.0 * pi * static_cast<double>(pdp.delays[i]) / n_fft;
        const cplx step = std::polar(1.0, w);
        cplx rot(1.0, 0.0);
        for (int k = 0; k < n_fft; ++k) {
            out[k] += taps[i] * rot;
            rot *= step;
        }
    }
}

// True effective frequency response on the full grid, [pair(a,b)][k + t*n_fft].
inline std::vector<std::vector<cplx>> effective_grid(const ChannelRealization& ch,
                                                     const OfdmParams& p, int n_symbols,
                                                     std::int64_t t0) {
    const auto taps = effective_taps(ch, p, n_symbols, t0);
    std::vector<std::vector<cplx>> out(n_antennas * n_antennas);
    for (int pair = 0; pair < n_antennas * n_antennas; ++pair) {
        out[pair].resize(static_cast<std::size_t>(p.n_fft) * n_symbols);
        for (int t = 0; t < n_symbols; ++t)
            taps_to_response(taps[pair][t], ch.pdp, p.n_fft,
                             out[pair].data() + static_cast<std::size_t>(t) * p.n_fft);
    }
    return out;
}

}  // namespace ofdmce
