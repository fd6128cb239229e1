#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ofdmce/channel.hpp"
#include "ofdmce/common.hpp"
#include "ofdmce/ofdm.hpp"
#include "ofdmce/resource_grid.hpp"
#include "ofdmce/train.hpp"

namespace ofdmce {

struct Seeds {
    std::uint64_t channel = 1001;
    std::uint64_t noise = 2002;
    std::uint64_t data = 3003;
    std::uint64_t shuffle = 4004;
};

struct DatasetConfig {
    std::size_t n_realizations = 50000;
    double snr_lo = 0.0;
    double snr_hi = 13.0;
};

struct ScenarioConfig {
    std::string name = "scenario1";
    int scenario_id = 1;
    OfdmParams ofdm;
    double subcarrier_spacing = 15000.0;
    std::string modulation = "QPSK";
    PilotPattern pilot;
    PowerDelayProfile pdp = PowerDelayProfile::tdl_a4();
    DopplerConfig doppler;
    int n_symbols = 14;  // one slot
    std::vector<double> snr_grid;
    int n_frames = 200;
    int stats_frames = 600;
    Seeds seeds;
    DatasetConfig dataset;
    TrainConfig training;

    void validate() const {
        ofdm.validate();
        pilot.validate();
        pdp.validate_against_guard(ofdm.n_guard);
        doppler.validate();
        training.validate();
        require(subcarrier_spacing > 0, "config: subcarrier spacing must be positive");
        require(n_symbols >= 1, "config: n_symbols must be >= 1");
        require(!snr_grid.empty(), "config: snr_grid must be non-empty");
        for (std::size_t i = 1; i < snr_grid.size(); ++i)
            require(snr_grid[i] > snr_grid[i - 1], "config: snr_grid must be strictly increasing");
        require(n_frames >= 1, "config: n_frames must be >= 1");
        require(stats_frames >= 2, "config: stats_frames must be >= 2");
        require(modulation == "QPSK" || modulation == "QAM16", "config: unknown modulation");
        require(dataset.snr_hi >= dataset.snr_lo, "config: dataset SNR range");
    }

    static ScenarioConfig defaults(int scenario) {
        require(scenario == 1 || scenario == 2, "config: scenario must be 1 or 2");
        ScenarioConfig c;
        c.scenario_id = scenario;
        c.ofdm.n_fft = 512;
        c.ofdm.n_guard = 64;
        c.subcarrier_spacing = 15000.0;
        c.ofdm.sample_rate = c.subcarrier_spacing * c.ofdm.n_fft;
        c.doppler.n_harmonics = 32;
        c.snr_grid.clear();
        for (int i = 0; i <= 8; ++i) c.snr_grid.push_back(2.5 * i);  // 0 .. 20 dB
        if (scenario == 1) {
            c.name = "scenario1";
            c.doppler.f_d_max = 36.0;  // low mobility
            c.pilot.d_t = 4;
            c.pilot.d_f = 2;
            c.dataset.n_realizations = 50000;
        } else {
            c.name = "scenario2";
            c.doppler.f_d_max = 200.0;  // high mobility
            c.pilot.d_t = 2;
            c.pilot.d_f = 2;
            c.dataset.n_realizations = 20000;
        }
        return c;
    }
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::string& where,
                       const std::set<std::string>& required,
                       const std::set<std::string>& optional = {}) {
    require(j.is_object(), "config: " + where + " must be an object");
    for (const auto& k : required)
        require(j.contains(k), "config: " + where + " is missing key '" + k + "'");
    for (const auto& [k, v] : j.items())
        require(required.count(k) || optional.count(k),
                "config: " + where + " has unknown key '" + k + "'");
}

}  // namespace detail

inline nlohmann::json config_to_json(const ScenarioConfig& c) {
    nlohmann::json j;
    j["name"] = c.name;
    j["scenario"] = c.scenario_id;
    j["ofdm"] = {{"fft_size", c.ofdm.n_fft},
                 {"cyclic_prefix", c.ofdm.n_guard},
                 {"subcarrier_spacing_hz", c.subcarrier_spacing}};
    j["modulation"] = c.modulation;
    j["pilot"] = {{"d_t", c.pilot.d_t},
                  {"d_f", c.pilot.d_f},
                  {"antenna_offset", c.pilot.antenna_offset},
                  {"value", {c.pilot.pilot_value.real(), c.pilot.pilot_value.imag()}}};
    nlohmann::json taps = nlohmann::json::array();
    for (std::size_t i = 0; i < c.pdp.n_taps(); ++i)
        taps.push_back({{"delay_samples", c.pdp.delays[i]}, {"power_linear", c.pdp.powers[i]}});
    j["pdp"] = {{"name", c.pdp.name}, {"taps", std::move(taps)}};
    j["doppler"] = {{"f_d_max_hz", c.doppler.f_d_max}, {"harmonics", c.doppler.n_harmonics}};
    j["slot_symbols"] = c.n_symbols;
    j["snr_grid_db"] = c.snr_grid;
    j["frames_per_snr"] = c.n_frames;
    j["stats_frames"] = c.stats_frames;
    j["seeds"] = {{"channel", c.seeds.channel},
                  {"noise", c.seeds.noise},
                  {"data", c.seeds.data},
                  {"shuffle", c.seeds.shuffle}};
    j["dataset"] = {{"realizations", c.dataset.n_realizations},
                    {"snr_range_db", {c.dataset.snr_lo, c.dataset.snr_hi}}};
    j["training"] = {{"algorithm", c.training.algorithm == TrainAlgorithm::lm ? "lm" : "gd"},
                     {"max_epochs", c.training.max_epochs},
                     {"minibatch", c.training.minibatch},
                     {"target_loss", c.training.target_loss},
                     {"min_gradient", c.training.min_gradient},
                     {"learning_rate", c.training.learning_rate},
                     {"initial_damping", c.training.initial_damping},
                     {"max_validation_failures", c.training.max_validation_failures},
                     {"seed", c.training.seed}};
    return j;
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
    detail::check_keys(j, "root",
                       {"name", "scenario", "ofdm", "modulation", "pilot", "pdp", "doppler",
                        "slot_symbols", "snr_grid_db", "frames_per_snr", "seeds"},
                       {"stats_frames", "dataset", "training"});
    ScenarioConfig c;
    c.name = j.at("name").get<std::string>();
    c.scenario_id = j.at("scenario").get<int>();
    const auto& jo = j.at("ofdm");
    detail::check_keys(jo, "ofdm", {"fft_size", "cyclic_prefix", "subcarrier_spacing_hz"});
    c.ofdm.n_fft = jo.at("fft_size").get<int>();
    c.ofdm.n_guard = jo.at("cyclic_prefix").get<int>();
    c.subcarrier_spacing = jo.at("subcarrier_spacing_hz").get<double>();
    c.ofdm.sample_rate = c.subcarrier_spacing * c.ofdm.n_fft;
    c.modulation = j.at("modulation").get<std::string>();
    const auto& jp = j.at("pilot");
    detail::check_keys(jp, "pilot", {"d_t", "d_f"}, {"antenna_offset", "value"});
    c.pilot.d_t = jp.at("d_t").get<int>();
    c.pilot.d_f = jp.at("d_f").get<int>();
    if (jp.contains("antenna_offset")) c.pilot.antenna_offset = jp.at("antenna_offset").get<int>();
    if (jp.contains("value")) {
        const auto& v = jp.at("value");
        require(v.is_array() && v.size() == 2, "config: pilot.value must be [re, im]");
        c.pilot.pilot_value = cplx(v[0].get<double>(), v[1].get<double>());
    }
    const auto& jd = j.at("pdp");
    detail::check_keys(jd, "pdp", {"name", "taps"});
    c.pdp.name = jd.at("name").get<std::string>();
    c.pdp.delays.clear();
    c.pdp.powers.clear();
    for (const auto& tap : jd.at("taps")) {
        detail::check_keys(tap, "pdp.taps[]", {"delay_samples", "power_linear"});
        c.pdp.delays.push_back(tap.at("delay_samples").get<int>());
        c.pdp.powers.push_back(tap.at("power_linear").get<double>());
    }
    const auto& jdo = j.at("doppler");
    detail::check_keys(jdo, "doppler", {"f_d_max_hz"}, {"harmonics"});
    c.doppler.f_d_max = jdo.at("f_d_max_hz").get<double>();
    if (jdo.contains("harmonics")) c.doppler.n_harmonics = jdo.at("harmonics").get<int>();
    c.n_symbols = j.at("slot_symbols").get<int>();
    c.snr_grid = j.at("snr_grid_db").get<std::vector<double>>();
    c.n_frames = j.at("frames_per_snr").get<int>();
    if (j.contains("stats_frames")) c.stats_frames = j.at("stats_frames").get<int>();
    const auto& js = j.at("seeds");
    detail::check_keys(js, "seeds", {"channel", "noise", "data", "shuffle"});
    c.seeds.channel = js.at("channel").get<std::uint64_t>();
    c.seeds.noise = js.at("noise").get<std::uint64_t>();
    c.seeds.data = js.at("data").get<std::uint64_t>();
    c.seeds.shuffle = js.at("shuffle").get<std::uint64_t>();
    if (j.contains("dataset")) {
        const auto& jds = j.at("dataset");
        detail::check_keys(jds, "dataset", {"realizations", "snr_range_db"});
        c.dataset.n_realizations = jds.at("realizations").get<std::size_t>();
        const auto& r = jds.at("snr_range_db");
        require(r.is_array() && r.size() == 2, "config: dataset.snr_range_db must be [lo, hi]");
        c.dataset.snr_lo = r[0].get<double>();
        c.dataset.snr_hi = r[1].get<double>();
    }
    if (j.contains("training")) {
        const auto& jt = j.at("training");
        detail::check_keys(jt, "training", {},
                           {"algorithm", "max_epochs", "minibatch", "target_loss", "min_gradient",
                            "learning_rate", "initial_damping", "max_validation_failures", "seed"});
        if (jt.contains("algorithm")) {
            const std::string alg = jt.at("algorithm").get<std::string>();
            require(alg == "lm" || alg == "gd", "config: training.algorithm must be lm or gd");
            c.training.algorithm = alg == "lm" ? TrainAlgorithm::lm : TrainAlgorithm::gd;
        }
        if (jt.contains("max_epochs")) c.training.max_epochs = jt.at("max_epochs").get<int>();
        if (jt.contains("minibatch")) c.training.minibatch = jt.at("minibatch").get<int>();
        if (jt.contains("target_loss")) c.training.target_loss = jt.at("target_loss").get<double>();
        if (jt.contains("min_gradient"))
            c.training.min_gradient = jt.at("min_gradient").get<double>();
        if (jt.contains("learning_rate"))
            c.training.learning_rate = jt.at("learning_rate").get<double>();
        if (jt.contains("initial_damping"))
            c.training.initial_damping = jt.at("initial_damping").get<double>();
        if (jt.contains("max_validation_failures"))
            c.training.max_validation_failures = jt.at("max_validation_failures").get<int>();
        if (jt.contains("seed")) c.training.seed = jt.at("seed").get<std::uint64_t>();
    }
    c.validate();
    return c;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_config: cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_config: " + path + ": " + e.what());
    }
    return config_from_json(j);
}

inline void save_config(const ScenarioConfig& c, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_config: cannot open " + path);
    f << config_to_json(c).dump(2) << '\n';
}

// Stable hex fingerprint of the configuration and master seeds; recorded in
// every results row so paired sweeps can be traced to their inputs.
inline std::string config_fingerprint(const ScenarioConfig& c) {
    const std::string s = config_to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) h = (h ^ ch) * 0x100000001b3ULL;
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace ofdmce
