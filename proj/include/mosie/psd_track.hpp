#pragma once

#include <Eigen/Dense>
#include <string>

#include "mosie/stft.hpp"

namespace mosie {

inline constexpr double kPsdFloor = 1e-12;

// Per-bin speech/noise PSD estimates plus the derived SNRs feeding the
// amplitude estimator. xi == speech_psd/noise_psd, gamma == |Y|^2/noise_psd.
struct PsdTrack {
    Eigen::MatrixXd speech_psd;
    Eigen::MatrixXd noise_psd;
    Eigen::MatrixXd xi;
    Eigen::MatrixXd gamma;

    static PsdTrack from_psds(const Spectrogram& noisy, Eigen::MatrixXd speech,
                              Eigen::MatrixXd noise, double floor = kPsdFloor);
};

// Speech-presence-probability weighted recursive noise averaging. Causal:
// frame l uses frames <= l only.
struct NoiseTrackerConfig {
    double xi_h1_db = 15.0;    // fixed a priori SNR hypothesis for the SPP
    double spp_prior = 0.5;    // P(speech present)
    double time_const_s = 0.2; // smoothing time constant of the PSD recursion
    double spp_smooth = 0.9;   // temporal smoothing of the SPP
    double spp_max = 0.99;     // stagnation guard
    double psd_floor = kPsdFloor;
};

Eigen::MatrixXd track_noise_psd(const Spectrogram& noisy, const NoiseTrackerConfig& cfg = {});

// Decision-directed a priori SNR: xi_l = a*(A_{l-1}^2/noise_l) + (1-a)*max(gamma_l - 1, 0),
// first frame uses the maximum-likelihood term only. prev_clean_amps holds the
// clean amplitude estimates per frame; column l-1 feeds frame l. Returns the
// speech PSD (xi * noise_psd).
Eigen::MatrixXd estimate_speech_psd_dd(const Spectrogram& noisy, const Eigen::MatrixXd& noise_psd,
                                       const Eigen::MatrixXd& prev_clean_amps, double alpha_dd);

// Diagnostic dump, one row per coefficient: bin<TAB>frame<TAB>xi_db
void dump_xi_tsv(const std::string& path, const PsdTrack& track);

} // namespace mosie
