#include "mosie/mlp.hpp"

#include <cmath>
#include <numeric>

#include "mosie/rng.hpp"

namespace mosie {

namespace {

Eigen::MatrixXd softmax_cols(Eigen::MatrixXd z) {
    for (long j = 0; j < z.cols(); ++j) {
        const double m = z.col(j).maxCoeff();
        z.col(j) = (z.col(j).array() - m).exp();
        z.col(j) /= z.col(j).sum();
    }
    return z;
}

struct Forward {
    std::vector<Eigen::MatrixXd> act; // act[0] = input, act.back() = posteriors
    std::vector<Eigen::MatrixXd> pre; // pre-activations of the hidden layers
};

Forward forward_pass(const MlpModel& m, const Eigen::MatrixXd& x) {
    Forward f;
    f.act.push_back(x);
    for (size_t i = 0; i < m.weights.size(); ++i) {
        Eigen::MatrixXd z = (m.weights[i] * f.act.back()).colwise() + m.biases[i];
        if (i + 1 < m.weights.size()) {
            f.pre.push_back(z);
            f.act.push_back(z.cwiseMax(0.0)); // ReLU
        } else {
            f.act.push_back(softmax_cols(std::move(z)));
        }
    }
    return f;
}

double cross_entropy(const Eigen::MatrixXd& post, const std::vector<int>& y,
                     const std::vector<long>& idx) {
    double loss = 0.0;
    for (long j = 0; j < post.cols(); ++j)
        loss -= std::log(std::max(post(y[idx[j]], j), 1e-300));
    return loss / post.cols();
}

} // namespace

Eigen::MatrixXd mlp_posteriors(const MlpModel& model, const Eigen::MatrixXd& features) {
    if (features.rows() != model.input_dim())
        throw Error(Err::geometry, "mlp_posteriors: feature dimension mismatch");
    return forward_pass(model, features).act.back();
}

MlpTrainResult train_mlp(const Eigen::MatrixXd& train_x, const std::vector<int>& train_y,
                         const Eigen::MatrixXd& held_x, const std::vector<int>& held_y,
                         int n_classes, const MlpTrainConfig& cfg, std::uint64_t seed) {
    if (train_x.cols() != static_cast<long>(train_y.size()) ||
        held_x.cols() != static_cast<long>(held_y.size()))
        throw Error(Err::geometry, "train_mlp: label count does not match frames");
    if (train_x.cols() == 0 || held_x.cols() == 0)
        throw Error(Err::degenerate_input, "train_mlp: empty training or held-out set");
    std::vector<char> seen(n_classes, 0);
    for (int y : train_y) {
        if (y < 0 || y >= n_classes) throw Error(Err::domain, "train_mlp: label out of range");
        seen[y] = 1;
    }
    for (int c = 0; c < n_classes; ++c)
        if (!seen[c]) throw Error(Err::degenerate_input, "train_mlp: class missing from corpus");

    Rng rng(seed);
    MlpModel m;
    std::vector<long> dims;
    dims.push_back(train_x.rows());
    for (int h : cfg.hidden) dims.push_back(h);
    dims.push_back(n_classes);
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        // Glorot uniform for every layer
        const double limit = std::sqrt(6.0 / static_cast<double>(dims[i] + dims[i + 1]));
        Eigen::MatrixXd w(dims[i + 1], dims[i]);
        for (long c = 0; c < w.cols(); ++c)
            for (long r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-limit, limit);
        m.weights.push_back(std::move(w));
        m.biases.push_back(Eigen::VectorXd::Zero(dims[i + 1]));
    }

    std::vector<Eigen::MatrixXd> vel_w;
    std::vector<Eigen::VectorXd> vel_b;
    for (size_t i = 0; i < m.weights.size(); ++i) {
        vel_w.push_back(Eigen::MatrixXd::Zero(m.weights[i].rows(), m.weights[i].cols()));
        vel_b.push_back(Eigen::VectorXd::Zero(m.biases[i].size()));
    }

    const long n = train_x.cols();
    std::vector<long> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<long> held_idx(held_y.size());
    std::iota(held_idx.begin(), held_idx.end(), 0);

    MlpTrainResult res;
    double best_held = 1e300;
    double lr = cfg.learn_rate;
    int since_improve = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        // deterministic Fisher-Yates shuffle
        for (long i = n - 1; i > 0; --i)
            std::swap(order[i], order[rng.uniform_int(static_cast<std::uint64_t>(i) + 1)]);

        double epoch_loss = 0.0;
        long batches = 0;
        for (long start = 0; start < n; start += cfg.batch_size) {
            const long bs = std::min<long>(cfg.batch_size, n - start);
            Eigen::MatrixXd xb(train_x.rows(), bs);
            std::vector<long> idx(bs);
            for (long j = 0; j < bs; ++j) {
                idx[j] = order[start + j];
                xb.col(j) = train_x.col(idx[j]);
            }

            Forward f = forward_pass(m, xb);
            epoch_loss += cross_entropy(f.act.back(), train_y, idx);
            ++batches;

            // output delta: softmax + cross-entropy
            Eigen::MatrixXd delta = f.act.back();
            for (long j = 0; j < bs; ++j) delta(train_y[idx[j]], j) -= 1.0;
            delta /= static_cast<double>(bs);

            for (int layer = static_cast<int>(m.weights.size()) - 1; layer >= 0; --layer) {
                const Eigen::MatrixXd grad_w = delta * f.act[layer].transpose();
                const Eigen::VectorXd grad_b = delta.rowwise().sum();
                if (layer > 0) {
                    delta = m.weights[layer].transpose() * delta;
                    delta = delta.cwiseProduct(
                        (f.pre[layer - 1].array() > 0.0).cast<double>().matrix());
                }
                vel_w[layer] = cfg.momentum * vel_w[layer] - lr * grad_w;
                vel_b[layer] = cfg.momentum * vel_b[layer] - lr * grad_b;
                m.weights[layer] += vel_w[layer];
                m.biases[layer] += vel_b[layer];
            }
        }
        res.train_loss.push_back(epoch_loss / batches);

        const Eigen::MatrixXd held_post = forward_pass(m, held_x).act.back();
        const double held_loss = cross_entropy(held_post, held_y, held_idx);
        res.heldout_loss.push_back(held_loss);

        if (held_loss < best_held - cfg.plateau_eps) {
            best_held = held_loss;
            res.best_epoch = epoch;
            res.model = m;
            since_improve = 0;
        } else if (++since_improve >= cfg.plateau_patience) {
            lr *= 0.5;
            since_improve = 0;
            if (lr < cfg.min_learn_rate) break;
        }
    }
    if (res.best_epoch < 0) {
        res.model = m;
        res.best_epoch = static_cast<int>(res.train_loss.size()) - 1;
    }

    const Eigen::MatrixXd post = forward_pass(res.model, held_x).act.back();
    long correct = 0;
    for (long j = 0; j < post.cols(); ++j) {
        long arg = 0;
        post.col(j).maxCoeff(&arg);
        if (arg == held_y[j]) ++correct;
    }
    res.heldout_accuracy = static_cast<double>(correct) / post.cols();
    return res;
}

} // namespace mosie
