#include "mosie/features.hpp"

#include <cmath>

namespace mosie {

namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Triangular filterbank on the one-sided power spectrum, peak 1 per filter.
Eigen::MatrixXd mel_filterbank(const StftConfig& stft, const MfccConfig& cfg) {
    const int K = stft.bins();
    Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.n_mels, K);
    const double mel_lo = hz_to_mel(cfg.f_lo);
    const double mel_hi = hz_to_mel(std::min(cfg.f_hi, stft.sample_rate / 2.0));
    std::vector<double> edges(cfg.n_mels + 2);
    for (int i = 0; i < cfg.n_mels + 2; ++i)
        edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1));
    for (int m = 0; m < cfg.n_mels; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        for (int k = 0; k < K; ++k) {
            const double f = static_cast<double>(k) * stft.sample_rate / stft.fft_size;
            if (f > lo && f < mid)
                fb(m, k) = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi)
                fb(m, k) = (hi - f) / (hi - mid);
        }
    }
    return fb;
}

// Orthonormal DCT-II rows (basis i applied to an M-point log-energy vector).
Eigen::MatrixXd dct_matrix(int n_ceps, int n_mels) {
    Eigen::MatrixXd dct(n_ceps, n_mels);
    for (int i = 0; i < n_ceps; ++i)
        for (int m = 0; m < n_mels; ++m)
            dct(i, m) = std::cos(M_PI * i * (m + 0.5) / n_mels) *
                        std::sqrt((i == 0 ? 1.0 : 2.0) / n_mels);
    return dct;
}

} // namespace

Eigen::MatrixXd mfcc_from_power(const Eigen::MatrixXd& power_spec, const StftConfig& stft,
                                const MfccConfig& cfg) {
    if (power_spec.rows() != stft.bins())
        throw Error(Err::geometry, "mfcc_from_power: bin count does not match config");
    const Eigen::MatrixXd fb = mel_filterbank(stft, cfg);
    const Eigen::MatrixXd log_mel = (fb * power_spec).array().max(cfg.log_floor).log();
    return dct_matrix(cfg.n_ceps, cfg.n_mels) * log_mel;
}

Eigen::MatrixXd extract_mfcc(const AudioBuffer& buf, const StftConfig& stft,
                             const MfccConfig& cfg) {
    return mfcc_from_power(power_spectrum(analyze(buf, stft)), stft, cfg);
}

Eigen::MatrixXd add_deltas_and_context(const Eigen::MatrixXd& mfcc, int delta_window,
                                       int context) {
    if (delta_window < 1) throw Error(Err::domain, "add_deltas_and_context: bad delta window");
    if (context < 1 || context % 2 == 0)
        throw Error(Err::domain, "add_deltas_and_context: context must be odd");
    const long D = mfcc.rows();
    const long L = mfcc.cols();

    auto deltas = [&](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd d(x.rows(), L);
        double denom = 0;
        for (int n = 1; n <= delta_window; ++n) denom += 2.0 * n * n;
        for (long l = 0; l < L; ++l) {
            Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.rows());
            for (int n = 1; n <= delta_window; ++n) {
                const long fwd = std::min(l + n, L - 1); // edge replication
                const long bwd = std::max(l - n, 0L);
                acc += n * (x.col(fwd) - x.col(bwd));
            }
            d.col(l) = acc / denom;
        }
        return d;
    };

    const Eigen::MatrixXd d1 = deltas(mfcc);
    const Eigen::MatrixXd d2 = deltas(d1);
    Eigen::MatrixXd full(3 * D, L);
    full << mfcc, d1, d2;

    const int half = (context - 1) / 2;
    Eigen::MatrixXd out(3 * D * context, L);
    for (long l = 0; l < L; ++l)
        for (int c = 0; c < context; ++c) {
            const long src = std::clamp<long>(l + c - half, 0, L - 1);
            out.block(3 * D * c, l, 3 * D, 1) = full.col(src);
        }
    return out;
}

Eigen::MatrixXd cmvn(const Eigen::MatrixXd& features) {
    const long L = features.cols();
    if (L < 2) throw Error(Err::degenerate_input, "cmvn: needs at least 2 frames");
    Eigen::MatrixXd out(features.rows(), L);
    for (long i = 0; i < features.rows(); ++i) {
        const double mean = features.row(i).mean();
        const double var = (features.row(i).array() - mean).square().sum() / L;
        if (var <= 0.0) {
            out.row(i).setZero();
        } else {
            out.row(i) = (features.row(i).array() - mean) / std::sqrt(var);
        }
    }
    return out;
}

} // namespace mosie
