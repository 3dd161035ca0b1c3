#include "mosie/nmf.hpp"

#include <cmath>
#include <fstream>
#include <vector>

#include "mosie/model_io.hpp"
#include "mosie/rng.hpp"

namespace mosie {

namespace {

constexpr double kDivFloor = 1e-300; // keeps quotients finite, never seen in practice

Eigen::MatrixXd random_positive(long rows, long cols, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (long j = 0; j < cols; ++j)
        for (long i = 0; i < rows; ++i) m(i, j) = rng.uniform(0.1, 1.1);
    return m;
}

Eigen::VectorXd per_column_cost(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& X,
                                const Eigen::MatrixXd& H, double nu) {
    const Eigen::ArrayXXd r = Y.array() / X.array().max(kDivFloor);
    Eigen::VectorXd cost = (r - r.log() - 1.0).matrix().colwise().sum();
    cost += nu * H.colwise().sum();
    return cost;
}

} // namespace

Eigen::MatrixXd stack_context(const Eigen::MatrixXd& power_spec, int context) {
    if (context < 1 || context % 2 == 0)
        throw Error(Err::domain, "stack_context: context must be odd and >= 1");
    const long K = power_spec.rows();
    const long L = power_spec.cols();
    const int half = (context - 1) / 2;
    Eigen::MatrixXd out(K * context, L);
    for (long l = 0; l < L; ++l)
        for (int c = 0; c < context; ++c) {
            long src = l + c - half;
            src = std::clamp<long>(src, 0, L - 1); // edge replication
            out.block(c * K, l, K, 1) = power_spec.col(src);
        }
    return out;
}

double is_cost(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& W, const Eigen::MatrixXd& H,
               double nu) {
    if (W.cols() != H.rows() || Y.rows() != W.rows() || Y.cols() != H.cols())
        throw Error(Err::geometry, "is_cost: dimension mismatch");
    const Eigen::MatrixXd X = W * H;
    return per_column_cost(Y, X, H, nu).sum();
}

Eigen::MatrixXd update_activations(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& W,
                                   const Eigen::MatrixXd& H, double nu) {
    const Eigen::ArrayXXd X = (W * H).array().max(kDivFloor);
    const Eigen::MatrixXd num = W.transpose() * (Y.array() / (X * X)).matrix();
    const Eigen::MatrixXd den =
        (W.transpose() * X.inverse().matrix()).array() + nu;
    return H.array() * num.array() / den.array().max(kDivFloor);
}

Eigen::MatrixXd infer_activations(const Eigen::MatrixXd& Yraw, const Eigen::MatrixXd& W, double nu,
                                  int max_iters, double rel_tol, std::uint64_t seed,
                                  std::vector<double>* cost_trace) {
    // The IS term is scale-invariant but nu|H|_1 is not; running on mean-one
    // data makes the sparsity weight relative to the data scale and the
    // inferred H exactly covariant under Y -> c*Y.
    const double scale = Yraw.mean();
    if (!(scale > 0.0)) throw Error(Err::domain, "infer_activations: data must be positive");
    const Eigen::MatrixXd Y = Yraw / scale;
    Rng rng(seed);
    Eigen::MatrixXd H = random_positive(W.cols(), Y.cols(), rng);
    Eigen::VectorXd prev = per_column_cost(Y, W * H, H, nu);
    if (cost_trace) cost_trace->push_back(prev.sum());
    for (int it = 0; it < max_iters; ++it) {
        H = update_activations(Y, W, H, nu);
        const Eigen::VectorXd cost = per_column_cost(Y, W * H, H, nu);
        if (cost_trace) cost_trace->push_back(cost.sum());
        bool all_done = true;
        for (long j = 0; j < cost.size(); ++j) {
            const double denom = std::max(std::abs(prev(j)), 1e-12);
            if (std::abs(prev(j) - cost(j)) / denom >= rel_tol) {
                all_done = false;
                break;
            }
        }
        prev = cost;
        if (all_done) break;
    }
    return scale * H;
}

Eigen::MatrixXd train_bases(const Eigen::MatrixXd& power_spectra, int n_bases,
                            const NmfConfig& cfg, std::uint64_t seed,
                            std::vector<double>* cost_trace) {
    Eigen::MatrixXd Y = stack_context(power_spectra.cwiseMax(cfg.floor), cfg.context);
    if (n_bases > Y.cols())
        throw Error(Err::domain, "train_bases: more bases than training columns");
    Y /= Y.mean(); // same scale calibration as inference; W is scale-free anyway

    // W starts from jittered data columns picked by farthest-point selection
    // under the symmetrized IS distance: far more robust against the IS cost's
    // local minima than a blind positive init.
    Rng rng(seed);
    Eigen::MatrixXd W(Y.rows(), n_bases);
    {
        std::vector<long> chosen{static_cast<long>(rng.uniform_int(Y.cols()))};
        Eigen::VectorXd min_dist = Eigen::VectorXd::Constant(Y.cols(), 1e300);
        while (static_cast<int>(chosen.size()) < n_bases) {
            const auto& ref = Y.col(chosen.back());
            for (long j = 0; j < Y.cols(); ++j) {
                const double d =
                    (Y.col(j).array() / ref.array() + ref.array() / Y.col(j).array() - 2.0).sum();
                min_dist(j) = std::min(min_dist(j), d);
            }
            long next = 0;
            min_dist.maxCoeff(&next);
            chosen.push_back(next);
        }
        for (int b = 0; b < n_bases; ++b) {
            W.col(b) = Y.col(chosen[b]);
            for (long i = 0; i < W.rows(); ++i) W(i, b) *= rng.uniform(0.9, 1.1);
        }
    }
    Eigen::MatrixXd H = random_positive(n_bases, Y.cols(), rng);

    double prev_cost = is_cost(Y, W, H, cfg.sparsity);
    if (cost_trace) cost_trace->push_back(prev_cost);
    for (int it = 0; it < cfg.max_iters; ++it) {
        H = update_activations(Y, W, H, cfg.sparsity);

        // W step: same multiplicative rule transposed, no sparsity on W
        {
            const Eigen::ArrayXXd X = (W * H).array().max(kDivFloor);
            const Eigen::MatrixXd num = (Y.array() / (X * X)).matrix() * H.transpose();
            const Eigen::MatrixXd den = X.inverse().matrix() * H.transpose();
            W = W.array() * num.array() / den.array().max(kDivFloor);
        }

        // resolve the scale indeterminacy: unit-L1 columns, scales into H
        for (int b = 0; b < n_bases; ++b) {
            const double s = std::max(W.col(b).sum(), 1e-30);
            W.col(b) /= s;
            H.row(b) *= s;
        }

        const double cost = is_cost(Y, W, H, cfg.sparsity);
        if (cost_trace) cost_trace->push_back(cost);
        if (std::abs(prev_cost - cost) / std::max(std::abs(prev_cost), 1e-12) < cfg.rel_tol) break;
        prev_cost = cost;
    }
    return W;
}

PsdTrack nmf_psd(const Spectrogram& noisy, const NmfModel& model, std::uint64_t seed) {
    const int K = noisy.bins();
    if (model.bins() != K || model.stft.frame_len != noisy.config.frame_len)
        throw Error(Err::geometry, "nmf_psd: model STFT geometry does not match input");
    if (model.speech_basis.rows() != static_cast<long>(K) * model.context ||
        model.noise_basis.rows() != model.speech_basis.rows())
        throw Error(Err::geometry, "nmf_psd: basis row count does not match bins*context");

    const long L = noisy.frames();
    const int Bs = static_cast<int>(model.speech_basis.cols());
    const int Bn = static_cast<int>(model.noise_basis.cols());

    Eigen::MatrixXd W(model.speech_basis.rows(), Bs + Bn);
    W << model.speech_basis, model.noise_basis;

    const Eigen::MatrixXd Y =
        stack_context(power_spectrum(noisy).cwiseMax(kPsdFloor), model.context);

    // Each frame's activation column is independent; batching them into one
    // matrix update performs the identical per-frame iterations.
    const Eigen::MatrixXd H = infer_activations(Y, W, model.sparsity, model.max_iters,
                                                model.rel_tol, seed, nullptr);

    const int center = (model.context - 1) / 2;
    const auto Ws_center = model.speech_basis.middleRows(static_cast<long>(center) * K, K);
    const auto Wn_center = model.noise_basis.middleRows(static_cast<long>(center) * K, K);
    Eigen::MatrixXd speech = Ws_center * H.topRows(Bs);
    Eigen::MatrixXd noise = Wn_center * H.bottomRows(Bn);
    return PsdTrack::from_psds(noisy, std::move(speech), std::move(noise));
}

void save_nmf_model(const std::string& path, const NmfModel& model) {
    std::ofstream f(path);
    if (!f) throw Error(Err::io, "cannot write " + path);
    f << "MOSIE-NMF 1\n";
    f << "sample_rate " << model.stft.sample_rate << "\n";
    f << "frame_len " << model.stft.frame_len << "\n";
    f << "hop " << model.stft.hop << "\n";
    f << "context " << model.context << "\n";
    f << "sparsity " << io::fmt_double(model.sparsity) << "\n";
    f << "max_iters " << model.max_iters << "\n";
    f << "rel_tol " << io::fmt_double(model.rel_tol) << "\n";
    f << "noise_name " << (model.noise_name.empty() ? "-" : model.noise_name) << "\n";
    io::write_matrix(f, "speech_basis", model.speech_basis);
    io::write_matrix(f, "noise_basis", model.noise_basis);
    f << "end\n";
    if (!f) throw Error(Err::io, "write failed: " + path);
}

NmfModel load_nmf_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(Err::io, "cannot open " + path);
    io::Reader r(f, path);
    r.expect_line("MOSIE-NMF 1");
    NmfModel m;
    m.stft.sample_rate = static_cast<int>(r.read_keyed_int("sample_rate"));
    m.stft.frame_len = static_cast<int>(r.read_keyed_int("frame_len"));
    m.stft.fft_size = m.stft.frame_len;
    m.stft.hop = static_cast<int>(r.read_keyed_int("hop"));
    m.context = static_cast<int>(r.read_keyed_int("context"));
    m.sparsity = r.read_keyed_double("sparsity");
    m.max_iters = static_cast<int>(r.read_keyed_int("max_iters"));
    m.rel_tol = r.read_keyed_double("rel_tol");
    m.noise_name = r.read_keyed_string("noise_name");
    if (m.noise_name == "-") m.noise_name.clear();
    m.speech_basis = r.read_matrix("speech_basis");
    m.noise_basis = r.read_matrix("noise_basis");
    r.expect_line("end");
    return m;
}

} // namespace mosie
