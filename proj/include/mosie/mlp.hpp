#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mosie/error.hpp"

namespace mosie {

// Fully connected ReLU network with a softmax output, trained by mini-batch
// gradient descent with momentum. Single-threaded and bit-reproducible under
// a fixed seed.
struct MlpModel {
    std::vector<Eigen::MatrixXd> weights; // layer i maps in -> out, weights[i] is out x in
    std::vector<Eigen::VectorXd> biases;

    long input_dim() const { return weights.empty() ? 0 : weights.front().cols(); }
    long output_dim() const { return weights.empty() ? 0 : weights.back().rows(); }
};

// Class posteriors per column; columns sum to 1.
Eigen::MatrixXd mlp_posteriors(const MlpModel& model, const Eigen::MatrixXd& features);

struct MlpTrainConfig {
    std::vector<int> hidden = {512, 512};
    int batch_size = 128;
    double learn_rate = 1e-2;
    double momentum = 0.9;
    int max_epochs = 100;
    int plateau_patience = 3;  // epochs without held-out improvement before halving
    double plateau_eps = 1e-4; // minimum improvement that counts
    double min_learn_rate = 1e-5;
};

struct MlpTrainResult {
    MlpModel model; // parameters at the best held-out cross-entropy
    std::vector<double> train_loss;
    std::vector<double> heldout_loss;
    int best_epoch = -1;
    double heldout_accuracy = 0.0;
};

// features: dim x frames, labels in [0, n_classes). The held-out set drives
// early stopping, learning-rate plateau halving, and the reported accuracy.
MlpTrainResult train_mlp(const Eigen::MatrixXd& train_x, const std::vector<int>& train_y,
                         const Eigen::MatrixXd& held_x, const std::vector<int>& held_y,
                         int n_classes, const MlpTrainConfig& cfg, std::uint64_t seed);

} // namespace mosie
