#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mosie/audio.hpp"
#include "mosie/dnn_mlse.hpp"
#include "mosie/estimator.hpp"
#include "mosie/metrics.hpp"
#include "mosie/nmf.hpp"
#include "mosie/psd_track.hpp"

namespace mosie {

enum class Scheme { non_mlse, nmf, dnn };

std::optional<Scheme> scheme_from_name(std::string_view name);
std::string scheme_name(Scheme s);

struct PipelineConfig {
    StftConfig stft;
    MosieParams params;
    std::string preset;  // set when params came from a named preset
    double alpha_dd = 0.9;
    NoiseTrackerConfig tracker;
    double target_peak = 0.5;
    std::uint64_t seed = 0;
};

// Flat key = value text (# comments). Returned map feeds apply_config;
// unknown keys are a usage error so typos cannot silently pass.
std::map<std::string, std::string> read_config_file(const std::string& path);
void apply_config(PipelineConfig& cfg, const std::map<std::string, std::string>& kv);

struct EnhanceOutput {
    AudioBuffer enhanced;
    Spectrogram enhanced_spec;
    Eigen::MatrixXd gains;
    PsdTrack psd;
};

// Blind front-end: SPP noise tracking plus decision-directed speech PSD, the
// decision-directed term fed by the previous frame's estimated amplitudes.
EnhanceOutput enhance_non_mlse(const AudioBuffer& noisy, const MosieParams& params,
                               double alpha_dd, const NoiseTrackerConfig& tracker,
                               const StftConfig& stft);

// Both PSDs from the supervised factorization of the stacked periodogram.
EnhanceOutput enhance_nmf(const AudioBuffer& noisy, const NmfModel& model,
                          const MosieParams& params, std::uint64_t seed);

// Noise PSD from the tracker, speech PSD from the phoneme table blended by
// the classifier posteriors.
EnhanceOutput enhance_dnn(const AudioBuffer& noisy, const DnnModel& model,
                          const MosieParams& params, const NoiseTrackerConfig& tracker);

struct NamedNoise {
    std::string name;
    AudioBuffer audio;
};

struct EvalModels {
    std::map<std::string, NmfModel> nmf_by_noise; // keyed by noise name
    std::optional<DnnModel> dnn;
};

struct EvalOptions {
    std::vector<double> snrs_db;
    std::vector<Scheme> schemes;
    std::vector<std::string> presets;
    std::uint64_t seed = 0;
    int threads = 1;
    PipelineConfig pipeline;
    SegSnrConfig seg;
};

struct EvalRow {
    std::string scheme, preset, noise;
    double snr_db;
    double dseg_snr, seg_ssnr, seg_nr;
    int n_utts;
};

struct EvalResult {
    std::vector<EvalRow> rows;           // aggregated per condition
    double max_decomposition_err = 0.0;  // |enhanced - (speech + noise)| peak, all runs
};

// Full factorial grid: utterances x noises x SNRs x schemes x presets, noise
// offsets drawn per task from the second half of each noise file (the first
// half is the training split). Deterministic for a fixed seed regardless of
// the thread count.
EvalResult evaluate_grid(const std::vector<AnnotatedUtterance>& corpus,
                         const std::vector<NamedNoise>& noises, const EvalModels& models,
                         const EvalOptions& opts);

void write_results_tsv(const std::string& path, const std::vector<EvalRow>& rows);

} // namespace mosie
