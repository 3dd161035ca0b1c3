#include "mosie/psd_track.hpp"

#include <cmath>
#include <fstream>

namespace mosie {

PsdTrack PsdTrack::from_psds(const Spectrogram& noisy, Eigen::MatrixXd speech,
                             Eigen::MatrixXd noise, double floor) {
    if (speech.rows() != noisy.bins() || speech.cols() != noisy.frames() ||
        noise.rows() != noisy.bins() || noise.cols() != noisy.frames())
        throw Error(Err::geometry, "PsdTrack: PSD dimensions do not match spectrogram");
    PsdTrack t;
    t.speech_psd = speech.cwiseMax(floor);
    t.noise_psd = noise.cwiseMax(floor);
    t.xi = t.speech_psd.cwiseQuotient(t.noise_psd);
    t.gamma = power_spectrum(noisy).cwiseQuotient(t.noise_psd);
    return t;
}

Eigen::MatrixXd track_noise_psd(const Spectrogram& noisy, const NoiseTrackerConfig& cfg) {
    const Eigen::MatrixXd P = power_spectrum(noisy);
    const int K = noisy.bins();
    const long L = noisy.frames();
    if (L < 1) throw Error(Err::geometry, "track_noise_psd: needs at least one frame");

    const double hop_s = static_cast<double>(noisy.config.hop) / noisy.config.sample_rate;
    const double lambda = std::exp(-hop_s / cfg.time_const_s);
    const double xi_h1 = std::pow(10.0, cfg.xi_h1_db / 10.0);
    const double coef = xi_h1 / (1.0 + xi_h1);
    const double prior_odds = (1.0 - cfg.spp_prior) / cfg.spp_prior;

    Eigen::MatrixXd out(K, L);
    Eigen::VectorXd psd = P.col(0).cwiseMax(cfg.psd_floor); // init: first periodogram
    Eigen::VectorXd pbar = Eigen::VectorXd::Zero(K);
    out.col(0) = psd;
    for (long l = 1; l < L; ++l) {
        for (int k = 0; k < K; ++k) {
            const double gamma_hat = P(k, l) / psd(k);
            const double p = 1.0 / (1.0 + prior_odds * (1.0 + xi_h1) *
                                              std::exp(-std::min(coef * gamma_hat, 500.0)));
            pbar(k) = cfg.spp_smooth * pbar(k) + (1.0 - cfg.spp_smooth) * p;
            const double ps = std::min(pbar(k), cfg.spp_max); // stagnation guard
            const double est = (1.0 - ps) * P(k, l) + ps * psd(k);
            psd(k) = std::max(lambda * psd(k) + (1.0 - lambda) * est, cfg.psd_floor);
        }
        out.col(l) = psd;
    }
    return out;
}

Eigen::MatrixXd estimate_speech_psd_dd(const Spectrogram& noisy, const Eigen::MatrixXd& noise_psd,
                                       const Eigen::MatrixXd& prev_clean_amps, double alpha_dd) {
    if (!(alpha_dd >= 0.0) || alpha_dd >= 1.0)
        throw Error(Err::domain, "estimate_speech_psd_dd: alpha_dd must be in [0, 1)");
    const int K = noisy.bins();
    const long L = noisy.frames();
    if (noise_psd.rows() != K || noise_psd.cols() != L || prev_clean_amps.rows() != K ||
        prev_clean_amps.cols() != L)
        throw Error(Err::geometry, "estimate_speech_psd_dd: dimension mismatch");

    const Eigen::MatrixXd P = power_spectrum(noisy);
    Eigen::MatrixXd speech(K, L);
    for (long l = 0; l < L; ++l) {
        for (int k = 0; k < K; ++k) {
            const double npsd = std::max(noise_psd(k, l), kPsdFloor);
            const double ml = std::max(P(k, l) / npsd - 1.0, 0.0);
            double xi = ml;
            if (l > 0) {
                const double a2 = prev_clean_amps(k, l - 1) * prev_clean_amps(k, l - 1);
                xi = alpha_dd * (a2 / npsd) + (1.0 - alpha_dd) * ml;
            }
            speech(k, l) = xi * npsd;
        }
    }
    return speech;
}

void dump_xi_tsv(const std::string& path, const PsdTrack& track) {
    std::ofstream f(path);
    if (!f) throw Error(Err::io, "cannot write " + path);
    f << "bin\tframe\txi_db\n";
    char line[64];
    for (long l = 0; l < track.xi.cols(); ++l)
        for (long k = 0; k < track.xi.rows(); ++k) {
            const double db = 10.0 * std::log10(std::max(track.xi(k, l), 1e-30));
            std::snprintf(line, sizeof(line), "%ld\t%ld\t%.4f\n", k, l, db);
            f << line;
        }
}

} // namespace mosie
