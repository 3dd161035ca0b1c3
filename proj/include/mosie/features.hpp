#pragma once

#include <Eigen/Dense>

#include "mosie/stft.hpp"

namespace mosie {

// MFCC recipe, fully pinned: 26 triangular mel filters between 0 and 8 kHz
// (HTK mel scale, unit peak), natural log of the filter energies, orthonormal
// DCT-II, coefficients 0..12 kept.
struct MfccConfig {
    int n_mels = 26;
    int n_ceps = 13;
    double f_lo = 0.0;
    double f_hi = 8000.0;
    double log_floor = 1e-12;
};

Eigen::MatrixXd extract_mfcc(const AudioBuffer& buf, const StftConfig& stft,
                             const MfccConfig& mfcc = {});

// Same recipe applied to an existing one-sided power spectrum (bins x frames).
Eigen::MatrixXd mfcc_from_power(const Eigen::MatrixXd& power_spec, const StftConfig& stft,
                                const MfccConfig& mfcc = {});

// Appends delta (2-frame symmetric regression) and delta-delta rows, then
// stacks +-(context-1)/2 neighbouring frames with edge replication:
// 13 -> 39 -> 39*context rows (273 for the canonical 7-frame context).
Eigen::MatrixXd add_deltas_and_context(const Eigen::MatrixXd& mfcc, int delta_window = 2,
                                       int context = 7);

// Per-utterance cepstral mean and variance normalization. Rows with zero
// variance are left at zero. Needs at least 2 frames.
Eigen::MatrixXd cmvn(const Eigen::MatrixXd& features);

} // namespace mosie
