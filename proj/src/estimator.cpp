#include "mosie/estimator.hpp"

#include <cmath>
#include <fstream>

#include "mosie/specfun.hpp"

namespace mosie {

namespace {

void validate_params(const MosieParams& p) {
    if (!(p.shape_mu > 0.0) || !(p.compression_beta > 0.0))
        throw Error(Err::domain, "estimator: shape_mu and compression_beta must be > 0");
    if (p.gain_floor_db > 0.0)
        throw Error(Err::domain, "estimator: gain_floor_db must be <= 0");
}

} // namespace

double MosieParams::floor_gain() const { return std::pow(10.0, gain_floor_db / 20.0); }

std::optional<MosieParams> preset_params(std::string_view name) {
    MosieParams p;
    if (name == "gauss-stsa") {
        p.shape_mu = 1.0;
        p.compression_beta = 1.0;
    } else if (name == "gauss-lsa") {
        p.shape_mu = 1.0;
        p.compression_beta = 0.001;
    } else if (name == "sg-stsa") {
        p.shape_mu = 0.2;
        p.compression_beta = 1.0;
    } else if (name == "sg-lsa") {
        p.shape_mu = 0.2;
        p.compression_beta = 0.001;
    } else {
        return std::nullopt;
    }
    return p;
}

std::vector<std::string> preset_names() {
    return {"gauss-stsa", "gauss-lsa", "sg-stsa", "sg-lsa"};
}

double mosie_gain_raw(const SnrPair& snr, const MosieParams& p) {
    validate_params(p);
    if (!std::isfinite(snr.xi) || !std::isfinite(snr.gamma) || snr.xi < 0.0)
        throw Error(Err::numeric, "mosie_gain: non-finite or negative SNR input");
    if (!(snr.gamma > 0.0))
        throw Error(Err::domain, "mosie_gain_raw: gamma must be > 0");
    if (snr.xi == 0.0) return 0.0;

    const double mu = p.shape_mu;
    const double beta = p.compression_beta;
    const double gamma = std::min(snr.gamma, std::pow(10.0, p.max_post_snr_db / 10.0));
    const double nu = gamma * snr.xi / (mu + snr.xi);

    const double log_amp = 0.5 * (std::log(snr.xi) - std::log(snr.xi + mu) - std::log(gamma));
    const double log_factor =
        (log_gamma(mu + beta / 2.0) - log_gamma(mu) + log_kummer_ratio(mu + beta / 2.0, mu, nu)) /
        beta;
    const double g = std::exp(log_amp + log_factor);
    if (!std::isfinite(g)) throw Error(Err::numeric, "mosie_gain: non-finite gain");
    return g;
}

double mosie_gain(const SnrPair& snr, const MosieParams& p) {
    validate_params(p);
    if (!std::isfinite(snr.xi) || !std::isfinite(snr.gamma) || snr.xi < 0.0 || snr.gamma < 0.0)
        throw Error(Err::numeric, "mosie_gain: non-finite or negative SNR input");
    if (snr.gamma == 0.0) return p.floor_gain(); // silent bin stays at the floor
    const double g = mosie_gain_raw(snr, p);
    return std::clamp(g, p.floor_gain(), p.gain_ceiling);
}

Spectrogram apply_gains(const Spectrogram& spec, const Eigen::MatrixXd& gains) {
    if (gains.rows() != spec.bins() || gains.cols() != spec.frames())
        throw Error(Err::geometry, "apply_gains: gain matrix dimensions mismatch");
    Spectrogram out = spec;
    out.coeffs = spec.coeffs.cwiseProduct(gains.cast<std::complex<double>>());
    return out;
}

EstimateResult apply_estimator(const Spectrogram& noisy, const PsdTrack& psd,
                               const MosieParams& p) {
    if (psd.xi.rows() != noisy.bins() || psd.xi.cols() != noisy.frames())
        throw Error(Err::geometry, "apply_estimator: PSD track dimensions mismatch");
    Eigen::MatrixXd gains(noisy.bins(), noisy.frames());
    for (long l = 0; l < noisy.frames(); ++l)
        for (int k = 0; k < noisy.bins(); ++k)
            gains(k, l) = mosie_gain({psd.xi(k, l), psd.gamma(k, l)}, p);
    return {apply_gains(noisy, gains), std::move(gains)};
}

std::vector<SweepPoint> gain_curve_sweep(const MosieParams& p, SweepAxis axis, double fixed_db,
                                         double from_db, double to_db, double step_db) {
    if (!(step_db > 0.0) || to_db < from_db)
        throw Error(Err::domain, "gain_curve_sweep: invalid range");
    std::vector<SweepPoint> sweep;
    const double fixed = std::pow(10.0, fixed_db / 10.0);
    for (double db = from_db; db <= to_db + 1e-9; db += step_db) {
        const double swept = std::pow(10.0, db / 10.0);
        const SnrPair snr = axis == SweepAxis::posterior ? SnrPair{fixed, swept}
                                                         : SnrPair{swept, fixed};
        sweep.push_back({db, mosie_gain_raw(snr, p)});
    }
    return sweep;
}

void write_sweep_tsv(const std::string& path, const std::vector<SweepPoint>& sweep) {
    std::ofstream f(path);
    if (!f) throw Error(Err::io, "cannot write " + path);
    f << "snr_db\tgain\n";
    char line[64];
    for (const auto& pt : sweep) {
        std::snprintf(line, sizeof(line), "%.6g\t%.9g\n", pt.snr_db, pt.gain);
        f << line;
    }
}

} // namespace mosie
