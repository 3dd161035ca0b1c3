#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "mosie/psd_track.hpp"
#include "mosie/stft.hpp"

namespace mosie {

// Supervised sparse NMF on context-stacked noisy periodograms with the
// Itakura-Saito divergence. Bases are trained offline per source; at run time
// only the activations are inferred, with the basis matrix held fixed.
struct NmfConfig {
    int speech_bases = 30;
    int noise_bases = 30;
    int context = 7; // odd; three past and three future frames
    double sparsity = 10.0;
    int max_iters = 200;
    double rel_tol = 1e-6; // stop when the relative cost change drops below
    double floor = kPsdFloor;
};

struct NmfModel {
    Eigen::MatrixXd speech_basis; // (bins*context) x speech_bases, columns L1-normalized
    Eigen::MatrixXd noise_basis;  // (bins*context) x noise_bases
    int context = 7;
    double sparsity = 10.0;
    int max_iters = 200;
    double rel_tol = 1e-6;
    StftConfig stft;
    std::string noise_name;

    int bins() const { return stft.bins(); }
};

// Column l concatenates frames l-(C-1)/2 .. l+(C-1)/2, edges replicated.
Eigen::MatrixXd stack_context(const Eigen::MatrixXd& power_spec, int context);

// nu*|H|_1 + sum_ij d_IS(Y_ij || (WH)_ij), d_IS(y||x) = y/x - log(y/x) - 1.
double is_cost(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& W, const Eigen::MatrixXd& H,
               double nu);

// One multiplicative step on the activations, basis fixed:
//   H <- H .* [W^T((WH).^-2 .* Y)] ./ [W^T (WH).^-1 + nu]
Eigen::MatrixXd update_activations(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& W,
                                   const Eigen::MatrixXd& H, double nu);

// Full activation inference from a seeded positive random init. The data is
// normalized to unit mean internally (and H rescaled back), which anchors the
// sparsity weight to the data scale and keeps the scheme scale-independent.
// Each column runs independently; a column stops counting once its own cost
// change falls below rel_tol. Optionally records the global cost trace.
Eigen::MatrixXd infer_activations(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& W, double nu,
                                  int max_iters, double rel_tol, std::uint64_t seed,
                                  std::vector<double>* cost_trace = nullptr);

// Alternating W/H training on context-stacked spectra; W columns are rescaled
// to unit L1 after every sweep with the inverse scale folded into H.
Eigen::MatrixXd train_bases(const Eigen::MatrixXd& power_spectra, int n_bases,
                            const NmfConfig& cfg, std::uint64_t seed,
                            std::vector<double>* cost_trace = nullptr);

// Per-frame inference on the stacked noisy periodogram; only the center-frame
// rows of the reconstruction feed the returned PSDs.
PsdTrack nmf_psd(const Spectrogram& noisy, const NmfModel& model, std::uint64_t seed);

void save_nmf_model(const std::string& path, const NmfModel& model);
NmfModel load_nmf_model(const std::string& path);

} // namespace mosie
