#pragma once

#include <Eigen/Dense>
#include <string>

#include "mosie/audio.hpp"
#include "mosie/stft.hpp"

namespace mosie {

// Segmental measures over 32 ms half-overlapped segments. Segments starting
// inside the initialization period are excluded everywhere; the speech-energy
// gate applies to the reference-based measures only.
struct SegSnrConfig {
    double seg_len_s = 0.032;
    double overlap = 0.5;
    double clamp_lo_db = -10.0;
    double clamp_hi_db = 35.0;
    double active_threshold_db = 40.0; // segment active within this of the max
    double init_period_s = 2.0;
};

// Mean over active non-init segments of clamp(10 log10(sum ref^2 / sum err^2)).
double seg_snr(const AudioBuffer& reference, const AudioBuffer& test,
               const SegSnrConfig& cfg = {});

struct ShadowComponents {
    AudioBuffer filtered_speech;
    AudioBuffer filtered_noise;
};

// Applies the mixture-derived gains separately to the clean and noise
// spectrograms: linearity makes filtered_speech + filtered_noise match the
// enhanced mixture to floating-point accuracy.
ShadowComponents shadow_filter_components(const Spectrogram& clean,
                                          const Spectrogram& scaled_noise,
                                          const Eigen::MatrixXd& gains);

// Speech distortion: seg_snr of clean vs shadow-filtered speech.
double seg_ssnr(const AudioBuffer& clean, const AudioBuffer& filtered_speech,
                const SegSnrConfig& cfg = {});

// Noise reduction: mean over all non-init segments of
// clamp(10 log10(sum noise^2 / sum filtered_noise^2), 0, clamp_hi).
double seg_nr(const AudioBuffer& scaled_noise, const AudioBuffer& filtered_noise,
              const SegSnrConfig& cfg = {});

struct EvalReport {
    double dseg_snr_db = 0.0; // seg_snr(enhanced) - seg_snr(noisy), same mask
    double seg_ssnr_db = 0.0;
    double seg_nr_db = 0.0;
    std::string scheme;
    std::string preset;
    std::string noise_type;
    double snr_db = 0.0;
};

} // namespace mosie
