#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ofdmce/common.hpp"

namespace ofdmce {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Fully connected network, tanh on hidden layers, identity output layer.
// Feature normalization (train-split statistics) is stored with the model and
// applied by infer(); forward() is the raw network.
struct MlpModel {
    std::vector<int> layer_sizes;
    std::vector<Eigen::MatrixXd> weights;  // [l]: layer_sizes[l+1] x layer_sizes[l]
    std::vector<Eigen::VectorXd> biases;
    Eigen::VectorXd in_mean, in_std, out_mean, out_std;

    int n_layers() const { return static_cast<int>(weights.size()); }
    int n_in() const { return layer_sizes.front(); }
    int n_out() const { return layer_sizes.back(); }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (int l = 0; l < n_layers(); ++l)
            n += static_cast<std::size_t>(weights[l].size()) + biases[l].size();
        return n;
    }

    void validate() const {
        require(layer_sizes.size() >= 2, "mlp: need at least input and output layers");
        require(weights.size() == layer_sizes.size() - 1 && biases.size() == weights.size(),
                "mlp: layer count mismatch");
        for (std::size_t l = 0; l < weights.size(); ++l) {
            require(weights[l].rows() == layer_sizes[l + 1] && weights[l].cols() == layer_sizes[l],
                    "mlp: weight shape inconsistent with layer sizes");
            require(biases[l].size() == layer_sizes[l + 1], "mlp: bias size mismatch");
        }
        require(in_mean.size() == n_in() && in_std.size() == n_in() &&
                    out_mean.size() == n_out() && out_std.size() == n_out(),
                "mlp: normalization vector sizes");
    }

    // Parameter vector layout: per layer, weights row-major then biases.
    Eigen::VectorXd get_params() const {
        Eigen::VectorXd p(param_count());
        std::size_t o = 0;
        for (int l = 0; l < n_layers(); ++l) {
            for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
                for (Eigen::Index c = 0; c < weights[l].cols(); ++c) p(o++) = weights[l](r, c);
            for (Eigen::Index r = 0; r < biases[l].size(); ++r) p(o++) = biases[l](r);
        }
        return p;
    }

    void set_params(const Eigen::VectorXd& p) {
        require(static_cast<std::size_t>(p.size()) == param_count(), "mlp: parameter size mismatch");
        std::size_t o = 0;
        for (int l = 0; l < n_layers(); ++l) {
            for (Eigen::Index r = 0; r < weights[l].rows(); ++r)
                for (Eigen::Index c = 0; c < weights[l].cols(); ++c) weights[l](r, c) = p(o++);
            for (Eigen::Index r = 0; r < biases[l].size(); ++r) biases[l](r) = p(o++);
        }
    }
};

inline MlpModel make_mlp(const std::vector<int>& layer_sizes) {
    require(layer_sizes.size() >= 2, "mlp: need at least two layers");
    MlpModel m;
    m.layer_sizes = layer_sizes;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        m.weights.emplace_back(Eigen::MatrixXd::Zero(layer_sizes[l + 1], layer_sizes[l]));
        m.biases.emplace_back(Eigen::VectorXd::Zero(layer_sizes[l + 1]));
    }
    m.in_mean = Eigen::VectorXd::Zero(layer_sizes.front());
    m.in_std = Eigen::VectorXd::Ones(layer_sizes.front());
    m.out_mean = Eigen::VectorXd::Zero(layer_sizes.back());
    m.out_std = Eigen::VectorXd::Ones(layer_sizes.back());
    return m;
}

inline MlpModel make_dnn1() { return make_mlp({8, 16, 16, 16, 8}); }
inline MlpModel make_dnn2() { return make_mlp({8, 32, 32, 32, 8}); }

// Glorot-uniform weights, zero biases; keeps tanh pre-activations small.
inline void init_weights(MlpModel& m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (int l = 0; l < m.n_layers(); ++l) {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(m.layer_sizes[l] + m.layer_sizes[l + 1]));
        std::uniform_real_distribution<double> unif(-bound, bound);
        for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r)
            for (Eigen::Index c = 0; c < m.weights[l].cols(); ++c) m.weights[l](r, c) = unif(rng);
        m.biases[l].setZero();
    }
}

struct MlpWorkspace {
    std::vector<Eigen::VectorXd> act;   // act[0] = input, act[L] = output
    Eigen::MatrixXd sens;               // n_out x layer size, reused backward
    Eigen::MatrixXd sens_next;
};

// Raw network evaluation; records activations in ws.
inline const Eigen::VectorXd& forward_ws(const MlpModel& m, const Eigen::VectorXd& x,
                                         MlpWorkspace& ws) {
    const int L = m.n_layers();
    if (ws.act.size() != static_cast<std::size_t>(L) + 1) ws.act.resize(L + 1);
    ws.act[0] = x;
    for (int l = 0; l < L; ++l) {
        ws.act[l + 1].noalias() = m.weights[l] * ws.act[l];
        ws.act[l + 1] += m.biases[l];
        if (l + 1 < L) ws.act[l + 1] = ws.act[l + 1].array().tanh();
    }
    return ws.act[L];
}

inline Eigen::VectorXd forward(const MlpModel& m, const Eigen::VectorXd& x) {
    require(x.size() == m.n_in(), "forward: input size mismatch");
    MlpWorkspace ws;
    return forward_ws(m, x, ws);
}

// Normalized inference: standardize input, run the network, de-standardize.
inline Eigen::VectorXd infer(const MlpModel& m, const Eigen::VectorXd& x) {
    require(x.size() == m.n_in(), "infer: input size mismatch");
    MlpWorkspace ws;
    const Eigen::VectorXd xn = (x - m.in_mean).cwiseQuotient(m.in_std);
    const Eigen::VectorXd yn = forward_ws(m, xn, ws);
    return yn.cwiseProduct(m.out_std) + m.out_mean;
}

// Exact reverse-accumulation derivatives of every output w.r.t. every
// parameter. Rows [row0, row0 + n_out) of jac are filled; jac must have
// param_count() columns. Requires a preceding forward_ws on the same ws.
inline void jacobian_rows(const MlpModel& m, MlpWorkspace& ws, RowMat& jac, Eigen::Index row0) {
    const int L = m.n_layers();
    const int n_out = m.n_out();
    // Column offset of each layer's parameter block.
    std::size_t offset_end = m.param_count();
    ws.sens = Eigen::MatrixXd::Identity(n_out, n_out);  // d y / d z_L
    for (int l = L - 1; l >= 0; --l) {
        const Eigen::Index n_w = m.weights[l].size();
        const Eigen::Index n_b = m.biases[l].size();
        const std::size_t b0 = offset_end - static_cast<std::size_t>(n_b);
        const std::size_t w0 = b0 - static_cast<std::size_t>(n_w);
        const Eigen::VectorXd& a_prev = ws.act[l];
        const Eigen::Index n_in_l = m.weights[l].cols();
        for (int o = 0; o < n_out; ++o) {
            double* wrow = jac.data() + (row0 + o) * jac.cols() + w0;
            for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r) {
                const double s = ws.sens(o, r);
                double* dst = wrow + r * n_in_l;
                for (Eigen::Index c = 0; c < n_in_l; ++c) dst[c] = s * a_prev(c);
            }
            double* brow = jac.data() + (row0 + o) * jac.cols() + b0;
            for (Eigen::Index r = 0; r < n_b; ++r) brow[r] = ws.sens(o, r);
        }
        if (l > 0) {
            ws.sens_next.noalias() = ws.sens * m.weights[l];
            // tanh'(z) = 1 - a^2 at the hidden activation
            for (Eigen::Index c = 0; c < ws.sens_next.cols(); ++c)
                ws.sens_next.col(c) *= (1.0 - ws.act[l](c) * ws.act[l](c));
            ws.sens.swap(ws.sens_next);
        }
        offset_end = w0;
    }
}

inline RowMat jacobian(const MlpModel& m, const Eigen::VectorXd& x) {
    require(x.size() == m.n_in(), "jacobian: input size mismatch");
    MlpWorkspace ws;
    forward_ws(m, x, ws);
    RowMat jac(m.n_out(), m.param_count());
    jacobian_rows(m, ws, jac, 0);
    return jac;
}

// Accumulates the gradient of ||net(x) - y||^2 into grad (raw network space).
inline void gradient_accumulate(const MlpModel& m, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& y, MlpWorkspace& ws,
                                Eigen::VectorXd& grad) {
    const int L = m.n_layers();
    forward_ws(m, x, ws);
    Eigen::VectorXd delta = 2.0 * (ws.act[L] - y);  // d loss / d z_L
    std::size_t offset_end = m.param_count();
    for (int l = L - 1; l >= 0; --l) {
        const Eigen::Index n_w = m.weights[l].size();
        const Eigen::Index n_b = m.biases[l].size();
        const std::size_t b0 = offset_end - static_cast<std::size_t>(n_b);
        const std::size_t w0 = b0 - static_cast<std::size_t>(n_w);
        const Eigen::VectorXd& a_prev = ws.act[l];
        const Eigen::Index n_in_l = m.weights[l].cols();
        for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r) {
            const double d = delta(r);
            double* dst = grad.data() + w0 + r * n_in_l;
            for (Eigen::Index c = 0; c < n_in_l; ++c) dst[c] += d * a_prev(c);
        }
        for (Eigen::Index r = 0; r < n_b; ++r) grad(b0 + r) += delta(r);
        if (l > 0) {
            Eigen::VectorXd next = m.weights[l].transpose() * delta;
            for (Eigen::Index c = 0; c < next.size(); ++c)
                next(c) *= (1.0 - ws.act[l](c) * ws.act[l](c));
            delta.swap(next);
        }
        offset_end = w0;
    }
}

// Batched network evaluation on row-major sample matrices (rows = samples).
inline RowMat forward_batch(const MlpModel& m, const Eigen::Ref<const RowMat>& x) {
    RowMat a = x;
    for (int l = 0; l < m.n_layers(); ++l) {
        RowMat z = a * m.weights[l].transpose();
        z.rowwise() += m.biases[l].transpose();
        if (l + 1 < m.n_layers()) z = z.array().tanh();
        a.swap(z);
    }
    return a;
}

// Mean of ||net(x_i) - y_i||^2 over rows. Fixed-size chunk partials summed in
// order, so the value is independent of the thread count.
inline double batch_loss(const MlpModel& m, const Eigen::Ref<const RowMat>& x,
                         const Eigen::Ref<const RowMat>& y, unsigned n_threads = 1) {
    require(x.rows() == y.rows(), "batch_loss: row count mismatch");
    const Eigen::Index n = x.rows();
    if (n == 0) return 0.0;
    const Eigen::Index chunk = 4096;
    const std::size_t n_chunks = static_cast<std::size_t>((n + chunk - 1) / chunk);
    std::vector<double> partial(n_chunks, 0.0);
    parallel_for(n_chunks, n_threads, [&](std::size_t ci) {
        const Eigen::Index lo = static_cast<Eigen::Index>(ci) * chunk;
        const Eigen::Index len = std::min<Eigen::Index>(chunk, n - lo);
        const RowMat out = forward_batch(m, x.middleRows(lo, len));
        partial[ci] = (out - y.middleRows(lo, len)).squaredNorm();
    });
    double acc = 0.0;
    for (double p : partial) acc += p;
    return acc / static_cast<double>(n);
}

}  // namespace ofdmce
