#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ofdmce/common.hpp"
#include "ofdmce/dataset.hpp"
#include "ofdmce/mlp.hpp"

namespace ofdmce {

enum class TrainAlgorithm { lm, gd };

struct TrainConfig {
    TrainAlgorithm algorithm = TrainAlgorithm::lm;
    int max_epochs = 300;
    double target_loss = 1e-5;
    double min_gradient = 1e-7;
    double initial_damping = 1e-2;
    int max_validation_failures = 6;
    int minibatch = 8;           // gradient-descent trainer only
    double learning_rate = 0.01; // gradient-descent trainer only
    std::uint64_t seed = 1;
    unsigned n_threads = 0;

    void validate() const {
        require(max_epochs >= 1, "train config: max_epochs must be >= 1");
        require(target_loss > 0 && min_gradient > 0 && initial_damping > 0,
                "train config: thresholds must be positive");
        require(max_validation_failures >= 1, "train config: max_validation_failures >= 1");
        require(minibatch >= 1 && learning_rate > 0, "train config: gd parameters");
    }
};

enum class StopReason { max_epochs, target_loss, min_gradient, validation_failures };

inline std::string stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::max_epochs: return "max_epochs";
        case StopReason::target_loss: return "target_loss";
        case StopReason::min_gradient: return "min_gradient";
        case StopReason::validation_failures: return "validation_failures";
    }
    return "?";
}

// Losses are in the normalized feature space the trainer optimizes.
struct TrainReport {
    int epochs_run = 0;
    int best_epoch = 0;
    double final_train_loss = 0.0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    StopReason stop = StopReason::max_epochs;
    int val_failure_streak = 0;
    double final_damping = 0.0;
    std::vector<double> train_curve, val_curve;
};

namespace detail {

// Standardization statistics from the train split, floored to avoid
// degenerate divisions on constant features.
inline void fit_normalization(MlpModel& m, const Eigen::Ref<const RowMat>& x,
                              const Eigen::Ref<const RowMat>& y) {
    const double n = static_cast<double>(x.rows());
    m.in_mean = x.colwise().sum().transpose() / n;
    m.out_mean = y.colwise().sum().transpose() / n;
    Eigen::VectorXd vx = (x.rowwise() - m.in_mean.transpose()).array().square().colwise().sum() / n;
    Eigen::VectorXd vy = (y.rowwise() - m.out_mean.transpose()).array().square().colwise().sum() / n;
    m.in_std = vx.array().sqrt().max(1e-12);
    m.out_std = vy.array().sqrt().max(1e-12);
}

inline RowMat normalize_rows(const Eigen::Ref<const RowMat>& x, const Eigen::VectorXd& mean,
                             const Eigen::VectorXd& std) {
    RowMat out = x;
    out.rowwise() -= mean.transpose();
    out.array().rowwise() /= std.transpose().array();
    return out;
}

// Accumulates A = (1/N) sum J_i^T J_i (lower triangle), g = (1/N) sum J_i^T r_i
// and the mean squared residual. Fixed 512-sample blocks and fixed 128-column
// tiles keep every float reduction in the same order for any thread count.
struct GaussNewtonAccumulator {
    static constexpr Eigen::Index block_samples = 512;
    static constexpr Eigen::Index tile_cols = 128;

    Eigen::MatrixXd a;  // P x P, lower triangle valid
    Eigen::VectorXd g;  // P
    double loss = 0.0;

    void compute(const MlpModel& m, const Eigen::Ref<const RowMat>& x,
                 const Eigen::Ref<const RowMat>& y, unsigned n_threads) {
        const Eigen::Index n = x.rows();
        const Eigen::Index n_out = m.n_out();
        const Eigen::Index p = static_cast<Eigen::Index>(m.param_count());
        a = Eigen::MatrixXd::Zero(p, p);
        g = Eigen::VectorXd::Zero(p);
        loss = 0.0;

        RowMat jac(block_samples * n_out, p);
        Eigen::VectorXd res(block_samples * n_out);
        const Eigen::Index n_tiles = (p + tile_cols - 1) / tile_cols;

        for (Eigen::Index b0 = 0; b0 < n; b0 += block_samples) {
            const Eigen::Index bs = std::min<Eigen::Index>(block_samples, n - b0);
            const Eigen::Index rows = bs * n_out;
            parallel_for(static_cast<std::size_t>(bs), n_threads, [&](std::size_t si) {
                thread_local MlpWorkspace ws;
                thread_local Eigen::VectorXd xi, yi;
                const Eigen::Index s = b0 + static_cast<Eigen::Index>(si);
                xi = x.row(s).transpose();
                yi = y.row(s).transpose();
                const Eigen::VectorXd& out = forward_ws(m, xi, ws);
                jacobian_rows(m, ws, jac, static_cast<Eigen::Index>(si) * n_out);
                res.segment(static_cast<Eigen::Index>(si) * n_out, n_out) = out - yi;
            });
            const auto jblk = jac.topRows(rows);
            const auto rblk = res.head(rows);
            parallel_for(static_cast<std::size_t>(n_tiles), n_threads, [&](std::size_t ti) {
                const Eigen::Index c0 = static_cast<Eigen::Index>(ti) * tile_cols;
                const Eigen::Index w = std::min<Eigen::Index>(tile_cols, p - c0);
                a.block(c0, c0, p - c0, w).noalias() +=
                    jblk.middleCols(c0, p - c0).transpose() * jblk.middleCols(c0, w);
            });
            g.noalias() += jblk.transpose() * rblk;
            loss += rblk.squaredNorm();
        }
        const double inv = 1.0 / static_cast<double>(n);
        a *= inv;
        g *= inv;
        loss *= inv;
    }
};

}  // namespace detail

// Full-batch Levenberg-Marquardt on the normalized train split. Damping is
// multiplied by 10 on a rejected trial step, divided by 10 (floored at 1e-10)
// on an accepted one; exceeding 1e10 aborts with a diagnostic. Returns the
// weights observed at the best validation loss.
inline TrainReport train_lm(MlpModel& model, const TapDataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    ds.validate();
    require(ds.n_train >= 1 && ds.n_val >= 1, "train: need non-empty train and validation splits");
    require(model.n_in() == tap_features && model.n_out() == tap_features,
            "train: model i/o must match the 8-feature dataset rows");

    detail::fit_normalization(model, ds.train_inputs(), ds.train_targets());
    const RowMat xt = detail::normalize_rows(ds.train_inputs(), model.in_mean, model.in_std);
    const RowMat yt = detail::normalize_rows(ds.train_targets(), model.out_mean, model.out_std);
    const RowMat xv = detail::normalize_rows(ds.val_inputs(), model.in_mean, model.in_std);
    const RowMat yv = detail::normalize_rows(ds.val_targets(), model.out_mean, model.out_std);

    TrainReport rep;
    double lambda = cfg.initial_damping;
    Eigen::VectorXd params = model.get_params();
    Eigen::VectorXd best_params = params;
    detail::GaussNewtonAccumulator acc;
    const Eigen::Index p = static_cast<Eigen::Index>(model.param_count());
    Eigen::MatrixXd damped(p, p);

    double train_loss = batch_loss(model, xt, yt, cfg.n_threads);
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        if (!std::isfinite(train_loss))
            throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                     std::to_string(epoch));
        if (train_loss <= cfg.target_loss) {
            rep.stop = StopReason::target_loss;
            break;
        }
        acc.compute(model, xt, yt, cfg.n_threads);
        if ((2.0 * acc.g).lpNorm<Eigen::Infinity>() <= cfg.min_gradient) {
            rep.stop = StopReason::min_gradient;
            break;
        }

        // Trial loop: escalate damping until a step lowers the train loss.
        bool accepted = false;
        while (!accepted) {
            damped = acc.a;
            damped.diagonal().array() += lambda;
            const Eigen::VectorXd step =
                damped.selfadjointView<Eigen::Lower>().ldlt().solve(-acc.g);
            model.set_params(params + step);
            const double trial = batch_loss(model, xt, yt, cfg.n_threads);
            if (std::isfinite(trial) && trial < train_loss) {
                accepted = true;
                params += step;
                train_loss = trial;
                lambda = std::max(lambda / 10.0, 1e-10);
            } else {
                lambda *= 10.0;
                if (lambda > 1e10) {
                    model.set_params(best_params);
                    throw std::runtime_error(
                        "train: Levenberg-Marquardt damping exceeded 1e10 at epoch " +
                        std::to_string(epoch) + " (train loss " + std::to_string(train_loss) + ")");
                }
            }
        }

        rep.epochs_run = epoch;
        const double val_loss = batch_loss(model, xv, yv, cfg.n_threads);
        rep.train_curve.push_back(train_loss);
        rep.val_curve.push_back(val_loss);
        if (val_loss < rep.best_val_loss) {
            rep.best_val_loss = val_loss;
            rep.best_epoch = epoch;
            best_params = params;
            rep.val_failure_streak = 0;
        } else {
            ++rep.val_failure_streak;
            if (rep.val_failure_streak >= cfg.max_validation_failures) {
                rep.stop = StopReason::validation_failures;
                rep.final_train_loss = train_loss;
                rep.final_damping = lambda;
                model.set_params(best_params);
                return rep;
            }
        }
        rep.stop = StopReason::max_epochs;
    }
    rep.final_train_loss = train_loss;
    rep.final_damping = lambda;
    model.set_params(best_params);
    return rep;
}

// Mini-batch gradient descent fallback with the same stopping rules.
inline TrainReport train_gd(MlpModel& model, const TapDataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    ds.validate();
    require(ds.n_train >= 1 && ds.n_val >= 1, "train: need non-empty train and validation splits");

    detail::fit_normalization(model, ds.train_inputs(), ds.train_targets());
    const RowMat xt = detail::normalize_rows(ds.train_inputs(), model.in_mean, model.in_std);
    const RowMat yt = detail::normalize_rows(ds.train_targets(), model.out_mean, model.out_std);
    const RowMat xv = detail::normalize_rows(ds.val_inputs(), model.in_mean, model.in_std);
    const RowMat yv = detail::normalize_rows(ds.val_targets(), model.out_mean, model.out_std);

    TrainReport rep;
    const Eigen::Index n = xt.rows();
    Eigen::VectorXd params = model.get_params();
    Eigen::VectorXd best_params = params;
    Eigen::VectorXd grad(params.size());
    std::mt19937_64 rng(cfg.seed);
    std::vector<Eigen::Index> order(n);
    MlpWorkspace ws;
    Eigen::VectorXd xi, yi;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const double train_loss_pre = batch_loss(model, xt, yt, cfg.n_threads);
        if (!std::isfinite(train_loss_pre))
            throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                     std::to_string(epoch));
        if (train_loss_pre <= cfg.target_loss) {
            rep.stop = StopReason::target_loss;
            break;
        }
        grad.setZero();
        for (Eigen::Index s = 0; s < n; ++s) {
            xi = xt.row(s).transpose();
            yi = yt.row(s).transpose();
            gradient_accumulate(model, xi, yi, ws, grad);
        }
        grad /= static_cast<double>(n);
        if (grad.lpNorm<Eigen::Infinity>() <= cfg.min_gradient) {
            rep.stop = StopReason::min_gradient;
            break;
        }

        for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
        for (Eigen::Index i = n; i > 1; --i) {
            std::uniform_int_distribution<Eigen::Index> pick(0, i - 1);
            std::swap(order[i - 1], order[pick(rng)]);
        }
        for (Eigen::Index lo = 0; lo < n; lo += cfg.minibatch) {
            const Eigen::Index len = std::min<Eigen::Index>(cfg.minibatch, n - lo);
            grad.setZero();
            for (Eigen::Index j = 0; j < len; ++j) {
                xi = xt.row(order[lo + j]).transpose();
                yi = yt.row(order[lo + j]).transpose();
                gradient_accumulate(model, xi, yi, ws, grad);
            }
            params -= (cfg.learning_rate / static_cast<double>(len)) * grad;
            model.set_params(params);
        }

        rep.epochs_run = epoch;
        const double train_loss = batch_loss(model, xt, yt, cfg.n_threads);
        const double val_loss = batch_loss(model, xv, yv, cfg.n_threads);
        rep.train_curve.push_back(train_loss);
        rep.val_curve.push_back(val_loss);
        rep.final_train_loss = train_loss;
        if (val_loss < rep.best_val_loss) {
            rep.best_val_loss = val_loss;
            rep.best_epoch = epoch;
            best_params = params;
            rep.val_failure_streak = 0;
        } else {
            ++rep.val_failure_streak;
            if (rep.val_failure_streak >= cfg.max_validation_failures) {
                rep.stop = StopReason::validation_failures;
                break;
            }
        }
        rep.stop = StopReason::max_epochs;
    }
    model.set_params(best_params);
    return rep;
}

inline TrainReport train(MlpModel& model, const TapDataset& ds, const TrainConfig& cfg) {
    return cfg.algorithm == TrainAlgorithm::lm ? train_lm(model, ds, cfg)
                                               : train_gd(model, ds, cfg);
}

}  // namespace ofdmce
