#pragma once

#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ofdmce/channel.hpp"
#include "ofdmce/config.hpp"
#include "ofdmce/constellation.hpp"
#include "ofdmce/dnn_estimate.hpp"
#include "ofdmce/estimate.hpp"
#include "ofdmce/ofdm.hpp"
#include "ofdmce/resource_grid.hpp"

namespace ofdmce {

// Artifacts an estimator path may need. Loading (and the error naming the
// missing file) is the caller's job; run_frame only checks presence.
struct EstimatorBundle {
    std::optional<MlpModel> dnn1;
    std::optional<MlpModel> dnn2;
    std::shared_ptr<const LmmseFilter> lmmse;
};

struct FrameSeeds {
    std::uint64_t data = 0, channel = 0, noise = 0;
};

// Per-frame seeds depend only on (config seeds, frame index): every estimator
// and SNR point sees identical bits, channel, and noise draws.
inline FrameSeeds derive_frame_seeds(const ScenarioConfig& cfg, std::uint64_t frame) {
    FrameSeeds s;
    s.data = derive_seed(cfg.seeds.data, seed_stream::frame_data, frame);
    s.channel = derive_seed(cfg.seeds.channel, seed_stream::frame_channel, frame);
    s.noise = derive_seed(cfg.seeds.noise, seed_stream::frame_noise, frame);
    return s;
}

struct FrameResult {
    double mse = 0.0;
    std::uint64_t bit_errors = 0;
    std::uint64_t bit_count = 0;
    std::size_t erasures = 0;
};

// One slot through the TX -> channel -> RX pipeline, evaluated once and
// estimated with every requested estimator (paired comparison).
inline std::vector<FrameResult> run_frame_multi(const ScenarioConfig& cfg,
                                                const EstimatorBundle& bundle, double snr_db,
                                                std::span<const EstimatorKind> estimators,
                                                std::uint64_t frame_index) {
    const FrameSeeds seeds = derive_frame_seeds(cfg, frame_index);
    const Constellation cst = Constellation::by_name(cfg.modulation);

    // data bits -> symbols -> layers -> grid
    const std::size_t cap = data_capacity(cfg.pilot, cfg.ofdm.n_fft, cfg.n_symbols);
    const std::size_t n_bits = cap * n_antennas * cst.bits_per_symbol;
    BitVec bits(n_bits);
    {
        std::mt19937_64 rng(seeds.data);
        std::uniform_int_distribution<int> bit(0, 1);
        for (auto& b : bits) b = static_cast<std::uint8_t>(bit(rng));
    }
    const std::vector<cplx> symbols = modulate(bits, cst);
    auto [x0, x1] = layer_map(symbols);
    const ResourceGrid grid =
        insert_pilots({std::move(x0), std::move(x1)}, cfg.pilot, cfg.ofdm.n_fft, cfg.n_symbols);

    TimeSignal tx = ofdm_modulate(grid, cfg.ofdm);
    tx.t0 = 0;
    DopplerConfig dop = cfg.doppler;
    dop.seed = seeds.channel;
    const std::size_t n_samples = static_cast<std::size_t>(cfg.n_symbols) * cfg.ofdm.symbol_len();
    const ChannelRealization ch = generate_taps(cfg.pdp, dop, n_samples, cfg.ofdm.sample_rate, 0);

    const TimeSignal rx_clean = apply_channel(tx, ch);
    const double power = mean_power(rx_clean);
    const double noise_var = snr_to_noise_variance(snr_db, power);
    std::mt19937_64 noise_rng(seeds.noise);
    const TimeSignal rx = add_awgn(rx_clean, noise_var, noise_rng);
    const ResourceGrid rx_grid = ofdm_demodulate(rx, cfg.ofdm, cfg.n_symbols);

    const std::vector<std::vector<cplx>> truth = effective_grid(ch, cfg.ofdm, cfg.n_symbols, 0);
    const PilotCells cells = extract_pilots(rx_grid, cfg.pilot);
    const PilotEstimate pe = ls_estimate(cells, cfg.pilot, cfg.ofdm.n_fft, cfg.n_symbols);

    std::vector<FrameResult> out;
    out.reserve(estimators.size());
    for (EstimatorKind kind : estimators) {
        ChannelEstimate est;
        switch (kind) {
            case EstimatorKind::perfect: {
                est = ChannelEstimate(cfg.ofdm.n_fft, cfg.n_symbols, EstimatorKind::perfect);
                est.h[0] = truth[0];
                est.h[1] = truth[1];
                est.h[2] = truth[2];
                est.h[3] = truth[3];
                break;
            }
            case EstimatorKind::ls:
                est = interpolate(pe);
                break;
            case EstimatorKind::lmmse:
                require(bundle.lmmse != nullptr,
                        "run_frame: lmmse estimator needs loaded channel statistics");
                est = lmmse_estimate(pe, *bundle.lmmse, noise_var);
                break;
            case EstimatorKind::dnn1:
                require(bundle.dnn1.has_value(), "run_frame: dnn1 estimator needs a loaded model");
                est = dnn_estimate(*bundle.dnn1, pe, cfg.pdp, EstimatorKind::dnn1);
                break;
            case EstimatorKind::dnn2:
                require(bundle.dnn2.has_value(), "run_frame: dnn2 estimator needs a loaded model");
                est = dnn_estimate(*bundle.dnn2, pe, cfg.pdp, EstimatorKind::dnn2);
                break;
        }
        FrameResult fr;
        fr.mse = mse(est, truth);
        const EqualizedSymbols eq = equalize(rx_grid, est, grid);
        const std::vector<cplx> serial = layer_demap(eq.symbols[0], eq.symbols[1]);
        const BitVec rx_bits = demodulate(serial, cst);
        fr.bit_count = n_bits;
        fr.erasures = eq.erasures;
        for (std::size_t i = 0; i < n_bits; ++i)
            fr.bit_errors += (bits[i] != rx_bits[i]) ? 1 : 0;
        out.push_back(fr);
    }
    return out;
}

inline FrameResult run_frame(const ScenarioConfig& cfg, const EstimatorBundle& bundle,
                             double snr_db, EstimatorKind estimator, std::uint64_t frame_index) {
    const EstimatorKind kinds[1] = {estimator};
    return run_frame_multi(cfg, bundle, snr_db, kinds, frame_index).front();
}

struct SweepRow {
    std::string scenario;
    std::string estimator;
    double snr_db = 0.0;
    double mse_mean = 0.0;
    double mse_stderr = 0.0;
    double ber = 0.0;
    std::uint64_t bit_count = 0;
    std::uint64_t frames = 0;
    std::string seed_fingerprint;

    bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::string config_fingerprint;
    double wall_seconds = 0.0;
    unsigned threads = 1;
};

// Monte-Carlo sweep over (estimator, SNR). Frames run in parallel but are
// reduced in frame order, so output is identical for any thread count.
inline SweepResult run_sweep(const ScenarioConfig& cfg, const EstimatorBundle& bundle,
                             std::span<const EstimatorKind> estimators, unsigned n_threads = 0) {
    cfg.validate();
    require(!estimators.empty(), "run_sweep: need at least one estimator");
    const auto t_start = std::chrono::steady_clock::now();
    const std::size_t n_snr = cfg.snr_grid.size();
    const std::size_t n_frames = static_cast<std::size_t>(cfg.n_frames);
    const std::size_t n_est = estimators.size();

    // job = (snr index, frame index); results indexed [job][estimator]
    std::vector<std::vector<FrameResult>> results(n_snr * n_frames);
    parallel_for(n_snr * n_frames, n_threads, [&](std::size_t job) {
        const std::size_t si = job / n_frames;
        const std::uint64_t frame = job % n_frames;
        results[job] = run_frame_multi(cfg, bundle, cfg.snr_grid[si], estimators, frame);
    });

    const std::string fp = config_fingerprint(cfg);
    SweepResult sweep;
    sweep.config_fingerprint = fp;
    sweep.threads = resolve_threads(n_threads);
    for (std::size_t e = 0; e < n_est; ++e) {
        for (std::size_t si = 0; si < n_snr; ++si) {
            SweepRow row;
            row.scenario = cfg.name;
            row.estimator = estimator_name(estimators[e]);
            row.snr_db = cfg.snr_grid[si];
            row.seed_fingerprint = fp;
            row.frames = n_frames;
            double mean = 0.0;
            std::uint64_t errs = 0;
            for (std::size_t f = 0; f < n_frames; ++f) {
                const FrameResult& fr = results[si * n_frames + f][e];
                mean += fr.mse;
                errs += fr.bit_errors;
                row.bit_count += fr.bit_count;
            }
            mean /= static_cast<double>(n_frames);
            double var = 0.0;
            for (std::size_t f = 0; f < n_frames; ++f) {
                const double d = results[si * n_frames + f][e].mse - mean;
                var += d * d;
            }
            row.mse_mean = mean;
            row.mse_stderr = n_frames > 1 ? std::sqrt(var / static_cast<double>(n_frames - 1) /
                                                      static_cast<double>(n_frames))
                                          : 0.0;
            row.ber = row.bit_count ? static_cast<double>(errs) / static_cast<double>(row.bit_count)
                                    : 0.0;
            sweep.rows.push_back(std::move(row));
        }
    }
    sweep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return sweep;
}

inline constexpr const char* results_header =
    "scenario,estimator,snr_db,mse_mean,mse_stderr,ber,bit_count,frames,seed_fingerprint";

inline std::string format_results(const SweepResult& r) {
    std::string out = results_header;
    out += '\n';
    char buf[256];
    for (const SweepRow& row : r.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.17e,%.17e,%.17e,%.17e,%llu,%llu,%s\n",
                      row.scenario.c_str(), row.estimator.c_str(), row.snr_db, row.mse_mean,
                      row.mse_stderr, row.ber, static_cast<unsigned long long>(row.bit_count),
                      static_cast<unsigned long long>(row.frames), row.seed_fingerprint.c_str());
        out += buf;
    }
    return out;
}

inline void write_results(const SweepResult& r, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_results: cannot open " + path);
    f << format_results(r);
    if (!f) throw std::runtime_error("write_results: write failed for " + path);
}

inline SweepResult read_results(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_results: cannot open " + path);
    std::string line;
    require(static_cast<bool>(std::getline(f, line)), "read_results: empty file " + path);
    require(line == results_header, "read_results: unexpected header in " + path);
    SweepResult r;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) fields.push_back(tok);
        require(fields.size() == 9, "read_results: malformed row in " + path);
        SweepRow row;
        row.scenario = fields[0];
        row.estimator = fields[1];
        row.snr_db = std::stod(fields[2]);
        row.mse_mean = std::stod(fields[3]);
        row.mse_stderr = std::stod(fields[4]);
        row.ber = std::stod(fields[5]);
        row.bit_count = std::stoull(fields[6]);
        row.frames = std::stoull(fields[7]);
        row.seed_fingerprint = fields[8];
        if (!r.rows.empty())
            require(row.seed_fingerprint == r.rows.front().seed_fingerprint,
                    "read_results: mixed fingerprints in " + path);
        r.rows.push_back(std::move(row));
    }
    if (!r.rows.empty()) r.config_fingerprint = r.rows.front().seed_fingerprint;
    return r;
}

// Channel second-order statistics from noiseless realizations. The LS pilot
// observation at zero noise is the channel at the pilot cells (intercarrier
// leakage at these Doppler rates is far below the estimation floors), so the
// pairs are formed analytically from the effective channel. Every (a,b) pair
// is circularly shifted to comb offset 0 before averaging.
inline ChannelStatistics collect_statistics(const ScenarioConfig& cfg, int n_stat_frames,
                                            unsigned n_threads = 0) {
    cfg.validate();
    require(n_stat_frames >= 2, "collect_statistics: need at least 2 frames");
    const int n_fft = cfg.ofdm.n_fft;
    const std::vector<int> psyms = pilot_symbol_indices(cfg.pilot, cfg.n_symbols);
    std::vector<int> comb0;  // offset-0 comb
    for (int k = 0; k < n_fft; k += cfg.pilot.d_f) comb0.push_back(k);
    const int n_pilot = static_cast<int>(comb0.size());

    const std::size_t per_frame = static_cast<std::size_t>(n_antennas * n_antennas) * psyms.size();
    std::vector<std::pair<Eigen::VectorXcd, Eigen::VectorXcd>> pairs(
        static_cast<std::size_t>(n_stat_frames) * per_frame);

    parallel_for(static_cast<std::size_t>(n_stat_frames), n_threads, [&](std::size_t f) {
        DopplerConfig dop = cfg.doppler;
        dop.seed = derive_seed(cfg.seeds.channel, seed_stream::stats_channel, f);
        const std::size_t n_samples =
            static_cast<std::size_t>(cfg.n_symbols) * cfg.ofdm.symbol_len();
        const ChannelRealization ch =
            generate_taps(cfg.pdp, dop, n_samples, cfg.ofdm.sample_rate, 0);
        const auto truth = effective_grid(ch, cfg.ofdm, cfg.n_symbols, 0);
        std::size_t slot = f * per_frame;
        for (int a = 0; a < n_antennas; ++a) {
            const int offset = cfg.pilot.comb_offset(a);
            for (int b = 0; b < n_antennas; ++b) {
                const auto& plane = truth[a * n_antennas + b];
                for (int t : psyms) {
                    Eigen::VectorXcd full(n_fft), pil(n_pilot);
                    const cplx* col = plane.data() + static_cast<std::size_t>(t) * n_fft;
                    for (int k = 0; k < n_fft; ++k) full(k) = col[(k + offset) % n_fft];
                    for (int m = 0; m < n_pilot; ++m) pil(m) = full(comb0[m]);
                    pairs[slot].first = std::move(full);
                    pairs[slot].second = std::move(pil);
                    ++slot;
                }
            }
        }
    });

    ChannelStatistics st = estimate_statistics(pairs, comb0, cfg.pilot.d_f,
                                               std::norm(cfg.pilot.pilot_value));
    return st;
}

}  // namespace ofdmce
