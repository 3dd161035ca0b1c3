#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mosie/audio.hpp"
#include "mosie/estimator.hpp"
#include "mosie/features.hpp"
#include "mosie/mlp.hpp"
#include "mosie/stft.hpp"

namespace mosie {

// Phoneme-posterior envelope scheme: an MLP classifies each noisy frame into
// phone classes, a per-class clean-speech PSD table supplies the a priori SNR,
// and the per-class amplitude estimates are blended by the posteriors.
struct DnnModelConfig {
    StftConfig stft;
    MfccConfig mfcc;
    int delta_window = 2;
    int context = 7;
    std::vector<int> hidden = {512, 512};
    int classes = 8;

    int feature_dim() const { return mfcc.n_ceps * 3 * context; }
};

struct DnnModel {
    MlpModel mlp;
    Eigen::MatrixXd phoneme_psd; // bins x classes
    DnnModelConfig cfg;
};

// Phone label per frame, decided at the frame's center sample (-1 if no label
// covers it).
std::vector<int> frame_labels(const AnnotatedUtterance& utt, const StftConfig& stft);

// Mean clean periodogram per class; corpus is expected peak-normalized.
Eigen::MatrixXd build_phoneme_psd_table(const std::vector<AnnotatedUtterance>& corpus,
                                        const StftConfig& stft, int n_classes);

// 13 MFCCs + deltas + context + per-utterance CMVN: the classifier input.
Eigen::MatrixXd dnn_features(const Spectrogram& spec, const DnnModelConfig& cfg);

struct DnnTrainResult {
    DnnModel model;
    MlpTrainResult mlp;
};

// Trains classifier and PSD table from clean speech only. Every 5th utterance
// is held out for early stopping and the reported frame accuracy. Optimizer
// settings beyond the layer sizes come from train_cfg when given.
DnnTrainResult train_dnn(const std::vector<AnnotatedUtterance>& corpus, const DnnModelConfig& cfg,
                         std::uint64_t seed, const MlpTrainConfig* train_cfg = nullptr);

// Alg.: posteriors from the noisy features, one amplitude estimate per class
// through the estimator (unclamped), convex combination by the posteriors,
// then a single floor/ceiling clamp on the combined gain.
EstimateResult dnn_enhance(const Spectrogram& noisy, const DnnModel& model,
                           const Eigen::MatrixXd& noise_psd, const MosieParams& p);

void save_dnn_model(const std::string& path, const DnnModel& model);
DnnModel load_dnn_model(const std::string& path);

} // namespace mosie
