#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "ofdmce/estimate.hpp"
#include "ofdmce/mlp.hpp"
#include "ofdmce/train.hpp"

namespace ofdmce {

namespace detail {

inline nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Eigen::VectorXd vec_from_json(const nlohmann::json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

inline nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {  // row-major flat
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
    return a;
}

inline Eigen::MatrixXd mat_from_json(const nlohmann::json& a, Eigen::Index rows,
                                     Eigen::Index cols) {
    require(static_cast<Eigen::Index>(a.size()) == rows * cols,
            "model io: matrix payload size mismatch");
    Eigen::MatrixXd m(rows, cols);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = a[i++].get<double>();
    return m;
}

inline nlohmann::json cmat_to_json(const Eigen::MatrixXcd& m) {
    nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            re.push_back(m(r, c).real());
            im.push_back(m(r, c).imag());
        }
    return nlohmann::json{{"re", std::move(re)}, {"im", std::move(im)}};
}

inline Eigen::MatrixXcd cmat_from_json(const nlohmann::json& j, Eigen::Index rows,
                                       Eigen::Index cols) {
    const auto& re = j.at("re");
    const auto& im = j.at("im");
    require(static_cast<Eigen::Index>(re.size()) == rows * cols && re.size() == im.size(),
            "model io: complex matrix payload size mismatch");
    Eigen::MatrixXcd m(rows, cols);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = cplx(re[i].get<double>(), im[i].get<double>());
            ++i;
        }
    return m;
}

}  // namespace detail

inline nlohmann::json report_to_json(const TrainReport& rep) {
    return nlohmann::json{{"epochs_run", rep.epochs_run},
                          {"best_epoch", rep.best_epoch},
                          {"final_train_loss", rep.final_train_loss},
                          {"best_val_loss", rep.best_val_loss},
                          {"stop_reason", stop_reason_name(rep.stop)},
                          {"val_failure_streak", rep.val_failure_streak},
                          {"final_damping", rep.final_damping}};
}

inline nlohmann::json model_to_json(const MlpModel& m) {
    m.validate();
    nlohmann::json j;
    j["format"] = "ofdmce-mlp-1";
    j["layer_sizes"] = m.layer_sizes;
    nlohmann::json ws = nlohmann::json::array(), bs = nlohmann::json::array();
    for (int l = 0; l < m.n_layers(); ++l) {
        ws.push_back(detail::mat_to_json(m.weights[l]));
        bs.push_back(detail::vec_to_json(m.biases[l]));
    }
    j["weights"] = std::move(ws);
    j["biases"] = std::move(bs);
    j["in_mean"] = detail::vec_to_json(m.in_mean);
    j["in_std"] = detail::vec_to_json(m.in_std);
    j["out_mean"] = detail::vec_to_json(m.out_mean);
    j["out_std"] = detail::vec_to_json(m.out_std);
    return j;
}

inline MlpModel model_from_json(const nlohmann::json& j) {
    require(j.at("format").get<std::string>() == "ofdmce-mlp-1", "model io: unknown format");
    MlpModel m = make_mlp(j.at("layer_sizes").get<std::vector<int>>());
    const auto& ws = j.at("weights");
    const auto& bs = j.at("biases");
    require(ws.size() == m.weights.size() && bs.size() == m.biases.size(),
            "model io: layer payload count mismatch");
    for (int l = 0; l < m.n_layers(); ++l) {
        m.weights[l] = detail::mat_from_json(ws[l], m.layer_sizes[l + 1], m.layer_sizes[l]);
        m.biases[l] = detail::vec_from_json(bs[l]);
    }
    m.in_mean = detail::vec_from_json(j.at("in_mean"));
    m.in_std = detail::vec_from_json(j.at("in_std"));
    m.out_mean = detail::vec_from_json(j.at("out_mean"));
    m.out_std = detail::vec_from_json(j.at("out_std"));
    m.validate();
    return m;
}

inline void save_model(const MlpModel& m, const std::string& path,
                       const nlohmann::json& metadata = nlohmann::json::object()) {
    nlohmann::json j = model_to_json(m);
    if (!metadata.empty()) j["metadata"] = metadata;
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_model: cannot open " + path);
    f << j.dump(1) << '\n';
    if (!f) throw std::runtime_error("save_model: write failed for " + path);
}

inline MlpModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_model: cannot open " + path);
    nlohmann::json j;
    f >> j;
    return model_from_json(j);
}

inline void save_statistics(const ChannelStatistics& st, const std::string& path) {
    st.validate();
    nlohmann::json j;
    j["format"] = "ofdmce-stats-1";
    j["n_fft"] = st.n_fft;
    j["n_pilot"] = st.n_pilot;
    j["d_f"] = st.d_f;
    j["sigma_x2"] = st.sigma_x2;
    j["sample_count"] = st.sample_count;
    j["r_hh"] = detail::cmat_to_json(st.r_hh);
    j["r_h_hls"] = detail::cmat_to_json(st.r_h_hls);
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_statistics: cannot open " + path);
    f << j.dump() << '\n';
    if (!f) throw std::runtime_error("save_statistics: write failed for " + path);
}

inline ChannelStatistics load_statistics(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_statistics: cannot open " + path);
    nlohmann::json j;
    f >> j;
    require(j.at("format").get<std::string>() == "ofdmce-stats-1", "statistics io: unknown format");
    ChannelStatistics st;
    st.n_fft = j.at("n_fft").get<int>();
    st.n_pilot = j.at("n_pilot").get<int>();
    st.d_f = j.at("d_f").get<int>();
    st.sigma_x2 = j.at("sigma_x2").get<double>();
    st.sample_count = j.at("sample_count").get<std::size_t>();
    st.r_hh = detail::cmat_from_json(j.at("r_hh"), st.n_pilot, st.n_pilot);
    st.r_h_hls = detail::cmat_from_json(j.at("r_h_hls"), st.n_fft, st.n_pilot);
    st.validate();
    return st;
}

}  // namespace ofdmce
