#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mosie/psd_track.hpp"
#include "mosie/stft.hpp"

namespace mosie {

// Parameterized short-time amplitude estimator. shape_mu < 1 selects a
// heavy-tailed (super-Gaussian) speech prior, compression_beta the amplitude
// compression of the error criterion. (mu=1, beta=1) is the classic Gaussian
// STSA, (mu=1, beta->0) approximates the Gaussian LSA.
struct MosieParams {
    double shape_mu = 0.2;
    double compression_beta = 1.0;
    double gain_floor_db = -12.0;  // limits the maximum attenuation
    double gain_ceiling = 10.0;    // guards near-silent bins against blow-up
    double max_post_snr_db = 40.0; // clamp on gamma before the estimator

    double floor_gain() const;
};

struct SnrPair {
    double xi;    // a priori SNR, linear
    double gamma; // a posteriori SNR, linear
};

// Named operating points: gauss-stsa, gauss-lsa, sg-stsa, sg-lsa.
std::optional<MosieParams> preset_params(std::string_view name);
std::vector<std::string> preset_names();

// Spectral gain G = estimated amplitude / |Y|, computed in the log domain so
// compressions as small as beta = 0.001 stay stable. mosie_gain clamps to
// [floor, ceiling] and maps gamma == 0 to the floor; the raw variant leaves
// the value unclamped (gain-curve sweeps) and requires gamma > 0.
double mosie_gain(const SnrPair& snr, const MosieParams& p);
double mosie_gain_raw(const SnrPair& snr, const MosieParams& p);

struct EstimateResult {
    Spectrogram enhanced;
    Eigen::MatrixXd gains; // bins x frames, the multiplicative gain applied
};

// Multiplies each coefficient by its (real, positive) gain: noisy phase kept.
Spectrogram apply_gains(const Spectrogram& spec, const Eigen::MatrixXd& gains);

EstimateResult apply_estimator(const Spectrogram& noisy, const PsdTrack& psd,
                               const MosieParams& p);

enum class SweepAxis { posterior, prior }; // which SNR is swept, the other fixed

struct SweepPoint {
    double snr_db;
    double gain;
};

// Unclamped gain over a SNR grid; matches the published gain-curve axes.
std::vector<SweepPoint> gain_curve_sweep(const MosieParams& p, SweepAxis axis, double fixed_db,
                                         double from_db, double to_db, double step_db);

// TSV with header snr_db<TAB>gain.
void write_sweep_tsv(const std::string& path, const std::vector<SweepPoint>& sweep);

} // namespace mosie
