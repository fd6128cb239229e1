#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ofdmce/common.hpp"
#include "ofdmce/resource_grid.hpp"

namespace ofdmce {

enum class EstimatorKind { ls, lmmse, dnn1, dnn2, perfect };

inline std::string estimator_name(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::ls: return "ls";
        case EstimatorKind::lmmse: return "lmmse";
        case EstimatorKind::dnn1: return "dnn1";
        case EstimatorKind::dnn2: return "dnn2";
        case EstimatorKind::perfect: return "perfect";
    }
    return "?";
}

inline EstimatorKind estimator_from_name(const std::string& s) {
    if (s == "ls") return EstimatorKind::ls;
    if (s == "lmmse") return EstimatorKind::lmmse;
    if (s == "dnn1") return EstimatorKind::dnn1;
    if (s == "dnn2") return EstimatorKind::dnn2;
    if (s == "perfect") return EstimatorKind::perfect;
    throw std::invalid_argument("unknown estimator: " + s);
}

// Channel estimate restricted to pilot cells, per (tx a, rx b), stored
// frequency-major per pilot symbol (same order as extract_pilots).
struct PilotEstimate {
    PilotPattern pattern;
    int n_fft = 0;
    int n_symbols = 0;
    std::vector<int> symbols;
    std::array<std::vector<int>, n_antennas> subcarriers;
    std::array<std::array<std::vector<cplx>, n_antennas>, n_antennas> h;
};

// Full-grid estimate per (tx a, rx b); plane index = a * 2 + b.
struct ChannelEstimate {
    int n_fft = 0;
    int n_symbols = 0;
    EstimatorKind method = EstimatorKind::ls;
    std::array<std::vector<cplx>, n_antennas * n_antennas> h;

    ChannelEstimate() = default;
    ChannelEstimate(int nfft, int nsym, EstimatorKind m) : n_fft(nfft), n_symbols(nsym), method(m) {
        for (auto& plane : h) plane.assign(static_cast<std::size_t>(nfft) * nsym, cplx(0.0, 0.0));
    }

    cplx& at(int a, int b, int k, int t) {
        return h[a * n_antennas + b][static_cast<std::size_t>(t) * n_fft + k];
    }
    const cplx& at(int a, int b, int k, int t) const {
        return h[a * n_antennas + b][static_cast<std::size_t>(t) * n_fft + k];
    }
};

// Decoupled per-antenna scalar LS on the disjoint combs: each pilot cell is
// excited by exactly one tx antenna, so h_hat = y / pilot_value.
inline PilotEstimate ls_estimate(const PilotCells& rx_pilots, const PilotPattern& p, int n_fft,
                                 int n_symbols) {
    require(std::abs(p.pilot_value) > 1e-15, "ls_estimate: pilot value must be nonzero");
    PilotEstimate pe;
    pe.pattern = p;
    pe.n_fft = n_fft;
    pe.n_symbols = n_symbols;
    pe.symbols = rx_pilots.symbols;
    pe.subcarriers = rx_pilots.subcarriers;
    const cplx inv = cplx(1.0, 0.0) / p.pilot_value;
    for (int a = 0; a < n_antennas; ++a)
        for (int b = 0; b < n_antennas; ++b) {
            pe.h[a][b].resize(rx_pilots.values[a][b].size());
            for (std::size_t i = 0; i < pe.h[a][b].size(); ++i)
                pe.h[a][b][i] = rx_pilots.values[a][b][i] * inv;
        }
    return pe;
}

// Linear interpolation along frequency between comb points; edges held.
inline std::vector<cplx> interp_freq(std::span<const cplx> values, std::span<const int> comb,
                                     int n_fft) {
    require(comb.size() >= 2, "interpolate: need at least 2 pilot subcarriers");
    require(values.size() == comb.size(), "interpolate: value/comb size mismatch");
    std::vector<cplx> out(static_cast<std::size_t>(n_fft));
    std::size_t seg = 0;
    for (int k = 0; k < n_fft; ++k) {
        if (k <= comb.front()) {
            out[k] = values.front();
        } else if (k >= comb.back()) {
            out[k] = values.back();
        } else {
            while (comb[seg + 1] < k) ++seg;
            const double span_len = static_cast<double>(comb[seg + 1] - comb[seg]);
            const double w = (k - comb[seg]) / span_len;
            out[k] = values[seg] * (1.0 - w) + values[seg + 1] * w;
        }
    }
    return out;
}

// Linear interpolation along time between pilot symbols; edges held.
// columns[j] is the full-frequency estimate at pilot symbol symbols[j].
inline std::vector<cplx> interp_time(const std::vector<std::vector<cplx>>& columns,
                                     std::span<const int> symbols, int n_fft, int n_symbols) {
    require(!columns.empty() && columns.size() == symbols.size(),
            "interpolate: need at least 1 pilot symbol");
    std::vector<cplx> out(static_cast<std::size_t>(n_fft) * n_symbols);
    std::size_t seg = 0;
    for (int t = 0; t < n_symbols; ++t) {
        cplx* dst = out.data() + static_cast<std::size_t>(t) * n_fft;
        if (t <= symbols.front() || symbols.size() == 1) {
            const auto& c = columns.front();
            std::copy(c.begin(), c.end(), dst);
        } else if (t >= symbols.back()) {
            const auto& c = columns.back();
            std::copy(c.begin(), c.end(), dst);
        } else {
            while (symbols[seg + 1] < t) ++seg;
            const double w = static_cast<double>(t - symbols[seg]) /
                             static_cast<double>(symbols[seg + 1] - symbols[seg]);
            const auto& c0 = columns[seg];
            const auto& c1 = columns[seg + 1];
            for (int k = 0; k < n_fft; ++k) dst[k] = c0[k] * (1.0 - w) + c1[k] * w;
        }
    }
    return out;
}

// Frequency then time interpolation of pilot-cell estimates to the full grid.
inline ChannelEstimate interpolate(const PilotEstimate& pe) {
    ChannelEstimate est(pe.n_fft, pe.n_symbols, EstimatorKind::ls);
    const std::size_t n_sym_p = pe.symbols.size();
    for (int a = 0; a < n_antennas; ++a) {
        const auto& comb = pe.subcarriers[a];
        for (int b = 0; b < n_antennas; ++b) {
            std::vector<std::vector<cplx>> columns(n_sym_p);
            for (std::size_t j = 0; j < n_sym_p; ++j) {
                std::span<const cplx> v(pe.h[a][b].data() + j * comb.size(), comb.size());
                columns[j] = interp_freq(v, comb, pe.n_fft);
            }
            est.h[a * n_antennas + b] = interp_time(columns, pe.symbols, pe.n_fft, pe.n_symbols);
        }
    }
    return est;
}

// Second-order channel statistics on the comb-aligned frame (comb offset 0):
// r_hh over pilot subcarriers, r_h_hls from full grid to pilot subcarriers.
struct ChannelStatistics {
    int n_fft = 0;
    int n_pilot = 0;
    int d_f = 0;
    Eigen::MatrixXcd r_hh;
    Eigen::MatrixXcd r_h_hls;
    double sigma_x2 = 1.0;
    std::size_t sample_count = 0;

    void validate() const {
        require(n_fft > 0 && n_pilot >= 2 && d_f >= 1, "statistics: invalid geometry");
        require(r_hh.rows() == n_pilot && r_hh.cols() == n_pilot, "statistics: r_hh shape");
        require(r_h_hls.rows() == n_fft && r_h_hls.cols() == n_pilot, "statistics: r_h_hls shape");
        require(sigma_x2 > 0.0, "statistics: sigma_x2 must be positive");
        const double asym = (r_hh - r_hh.adjoint()).norm();
        require(asym <= 1e-10 * std::max(1.0, r_hh.norm()), "statistics: r_hh must be Hermitian");
    }
};

// Sample averages of h h^H (pilot restriction) and h_full h_ls^H, with
// Hermitian symmetrization of r_hh.
inline ChannelStatistics estimate_statistics(
    const std::vector<std::pair<Eigen::VectorXcd, Eigen::VectorXcd>>& realizations,
    std::span<const int> pilot_indices, int d_f, double sigma_x2) {
    require(realizations.size() >= 2, "estimate_statistics: need at least 2 realizations");
    const int n_fft = static_cast<int>(realizations.front().first.size());
    const int n_pilot = static_cast<int>(pilot_indices.size());
    ChannelStatistics st;
    st.n_fft = n_fft;
    st.n_pilot = n_pilot;
    st.d_f = d_f;
    st.sigma_x2 = sigma_x2;
    st.sample_count = realizations.size();
    st.r_hh = Eigen::MatrixXcd::Zero(n_pilot, n_pilot);
    st.r_h_hls = Eigen::MatrixXcd::Zero(n_fft, n_pilot);
    Eigen::VectorXcd hp(n_pilot);
    for (const auto& [h_full, h_ls] : realizations) {
        require(static_cast<int>(h_full.size()) == n_fft &&
                    static_cast<int>(h_ls.size()) == n_pilot,
                "estimate_statistics: inconsistent realization dimensions");
        for (int m = 0; m < n_pilot; ++m) hp(m) = h_full(pilot_indices[m]);
        st.r_hh.noalias() += hp * hp.adjoint();
        st.r_h_hls.noalias() += h_full * h_ls.adjoint();
    }
    const double inv = 1.0 / static_cast<double>(realizations.size());
    st.r_hh *= inv;
    st.r_h_hls *= inv;
    st.r_hh = ((st.r_hh + st.r_hh.adjoint()) * 0.5).eval();
    return st;
}

// LMMSE filter h_hat = R_{h hls} (R_hh + (sigma_w^2/sigma_x^2) I)^{-1} h_ls,
// cached through the eigendecomposition of R_hh so per-frame noise levels
// only rescale the eigenvalue denominators.
class LmmseFilter {
  public:
    explicit LmmseFilter(ChannelStatistics stats) : stats_(std::move(stats)) {
        stats_.validate();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(stats_.r_hh);
        require(eig.info() == Eigen::Success, "lmmse: eigendecomposition of r_hh failed");
        eigenvalues_ = eig.eigenvalues();
        u_ = eig.eigenvectors();
        w1_ = stats_.r_h_hls * u_;
    }

    const ChannelStatistics& stats() const { return stats_; }

    // One pilot-symbol column in the comb-aligned frame.
    Eigen::VectorXcd apply(const Eigen::VectorXcd& h_ls, double noise_variance) const {
        require(h_ls.size() == stats_.n_pilot, "lmmse: pilot vector size mismatch");
        require(noise_variance >= 0.0, "lmmse: negative noise variance");
        const double ratio = noise_variance / stats_.sigma_x2;
        const double lo = eigenvalues_.minCoeff() + ratio;
        const double hi = eigenvalues_.maxCoeff() + ratio;
        double ridge = 0.0;
        if (lo <= 0.0 || hi / lo > 1e12) ridge = 1e-12;
        const double lo_r = lo + ridge;
        if (!(lo_r > 0.0) || !std::isfinite(hi)) {
            throw std::runtime_error(
                "lmmse: regularized matrix numerically singular, condition estimate " +
                std::to_string(hi / (lo_r > 0.0 ? lo_r : 1e-300)));
        }
        Eigen::VectorXcd z = u_.adjoint() * h_ls;
        for (int i = 0; i < z.size(); ++i) z(i) /= (eigenvalues_(i) + ratio + ridge);
        return w1_ * z;
    }

  private:
    ChannelStatistics stats_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXcd u_;
    Eigen::MatrixXcd w1_;
};

// Full-grid LMMSE: filter each pilot-symbol column per antenna pair (rows
// circularly shifted by the antenna's comb offset), then interpolate in time.
inline ChannelEstimate lmmse_estimate(const PilotEstimate& pe, const LmmseFilter& filter,
                                      double noise_variance) {
    const auto& st = filter.stats();
    require(st.n_fft == pe.n_fft, "lmmse_estimate: statistics grid size mismatch");
    ChannelEstimate est(pe.n_fft, pe.n_symbols, EstimatorKind::lmmse);
    const std::size_t n_sym_p = pe.symbols.size();
    for (int a = 0; a < n_antennas; ++a) {
        const auto& comb = pe.subcarriers[a];
        require(static_cast<int>(comb.size()) == st.n_pilot,
                "lmmse_estimate: statistics pilot count mismatch");
        const int offset = pe.pattern.comb_offset(a);
        for (int b = 0; b < n_antennas; ++b) {
            std::vector<std::vector<cplx>> columns(n_sym_p);
            Eigen::VectorXcd v(st.n_pilot);
            for (std::size_t j = 0; j < n_sym_p; ++j) {
                for (int m = 0; m < st.n_pilot; ++m) v(m) = pe.h[a][b][j * comb.size() + m];
                const Eigen::VectorXcd aligned = filter.apply(v, noise_variance);
                auto& col = columns[j];
                col.resize(pe.n_fft);
                for (int k = 0; k < pe.n_fft; ++k)
                    col[k] = aligned(((k - offset) % pe.n_fft + pe.n_fft) % pe.n_fft);
            }
            est.h[a * n_antennas + b] = interp_time(columns, pe.symbols, pe.n_fft, pe.n_symbols);
        }
    }
    return est;
}

struct EqualizedSymbols {
    std::array<std::vector<cplx>, n_antennas> symbols;  // deterministic data-cell order
    std::size_t erasures = 0;
};

// Per-cell zero forcing of the 2x2 system; near-singular cells are flagged
// as erasures and decoded as zero symbols.
inline EqualizedSymbols equalize(const ResourceGrid& rx, const ChannelEstimate& est,
                                 const ResourceGrid& layout) {
    require(rx.n_fft == est.n_fft && rx.n_symbols == est.n_symbols,
            "equalize: estimate does not cover the grid");
    require(rx.n_fft == layout.n_fft && rx.n_symbols == layout.n_symbols,
            "equalize: layout mismatch");
    EqualizedSymbols out;
    for (int t = 0; t < rx.n_symbols; ++t) {
        for (int k = 0; k < rx.n_fft; ++k) {
            if (layout.kind[0][layout.at(k, t)] != CellKind::data) continue;
            const cplx h00 = est.at(0, 0, k, t);  // row rx0: tx0, tx1
            const cplx h01 = est.at(1, 0, k, t);
            const cplx h10 = est.at(0, 1, k, t);  // row rx1
            const cplx h11 = est.at(1, 1, k, t);
            const cplx det = h00 * h11 - h01 * h10;
            const cplx y0 = rx(0, k, t);
            const cplx y1 = rx(1, k, t);
            if (std::abs(det) < 1e-12) {
                out.symbols[0].push_back(cplx(0.0, 0.0));
                out.symbols[1].push_back(cplx(0.0, 0.0));
                ++out.erasures;
            } else {
                out.symbols[0].push_back((h11 * y0 - h01 * y1) / det);
                out.symbols[1].push_back((h00 * y1 - h10 * y0) / det);
            }
        }
    }
    return out;
}

inline double mse(const ChannelEstimate& est, const std::vector<std::vector<cplx>>& truth) {
    require(truth.size() == est.h.size(), "mse: plane count mismatch");
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t p = 0; p < truth.size(); ++p) {
        require(truth[p].size() == est.h[p].size(), "mse: dimension mismatch");
        for (std::size_t i = 0; i < truth[p].size(); ++i) acc += std::norm(est.h[p][i] - truth[p][i]);
        count += truth[p].size();
    }
    return count ? acc / static_cast<double>(count) : 0.0;
}

}  // namespace ofdmce
