#include "mosie/dnn_mlse.hpp"

#include <cmath>
#include <fstream>

#include "mosie/model_io.hpp"
#include "mosie/psd_track.hpp"
#include "mosie/specfun.hpp"

namespace mosie {

std::vector<int> frame_labels(const AnnotatedUtterance& utt, const StftConfig& stft) {
    const long L = (utt.audio.size() + stft.hop - 1) / stft.hop;
    std::vector<int> labels(L, -1);
    for (long l = 0; l < L; ++l) {
        const long center = std::min(l * stft.hop + stft.frame_len / 2, utt.audio.size() - 1);
        for (const auto& lab : utt.labels)
            if (center >= lab.start_sample && center < lab.end_sample) {
                labels[l] = lab.phone_id;
                break;
            }
    }
    return labels;
}

Eigen::MatrixXd build_phoneme_psd_table(const std::vector<AnnotatedUtterance>& corpus,
                                        const StftConfig& stft, int n_classes) {
    Eigen::MatrixXd table = Eigen::MatrixXd::Zero(stft.bins(), n_classes);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_classes);
    for (const auto& utt : corpus) {
        const auto P = power_spectrum(analyze(utt.audio, stft));
        const auto labels = frame_labels(utt, stft);
        for (long l = 0; l < P.cols(); ++l) {
            const int q = labels[l];
            if (q < 0 || q >= n_classes) continue;
            table.col(q) += P.col(l);
            counts(q) += 1.0;
        }
    }
    for (int q = 0; q < n_classes; ++q) {
        if (counts(q) == 0.0)
            throw Error(Err::degenerate_input,
                        "build_phoneme_psd_table: class " + std::to_string(q) + " has no frames");
        table.col(q) /= counts(q);
    }
    return table;
}

Eigen::MatrixXd dnn_features(const Spectrogram& spec, const DnnModelConfig& cfg) {
    const Eigen::MatrixXd ceps = mfcc_from_power(power_spectrum(spec), spec.config, cfg.mfcc);
    return cmvn(add_deltas_and_context(ceps, cfg.delta_window, cfg.context));
}

DnnTrainResult train_dnn(const std::vector<AnnotatedUtterance>& corpus, const DnnModelConfig& cfg,
                         std::uint64_t seed, const MlpTrainConfig* train_cfg) {
    if (corpus.size() < 2)
        throw Error(Err::degenerate_input, "train_dnn: need at least 2 utterances");

    std::vector<Eigen::MatrixXd> tr_x, he_x;
    std::vector<int> tr_y, he_y;
    std::vector<AnnotatedUtterance> train_utts;
    long tr_cols = 0, he_cols = 0;
    for (size_t u = 0; u < corpus.size(); ++u) {
        const auto spec = analyze(corpus[u].audio, cfg.stft);
        const auto feats = dnn_features(spec, cfg);
        const auto labels = frame_labels(corpus[u], cfg.stft);
        const bool heldout = (u % 5 == 4) || (corpus.size() < 5 && u + 1 == corpus.size());
        auto& xs = heldout ? he_x : tr_x;
        auto& ys = heldout ? he_y : tr_y;
        // keep only labelled frames
        std::vector<long> keep;
        for (long l = 0; l < feats.cols(); ++l)
            if (labels[l] >= 0 && labels[l] < cfg.classes) keep.push_back(l);
        Eigen::MatrixXd x(feats.rows(), keep.size());
        for (size_t i = 0; i < keep.size(); ++i) {
            x.col(i) = feats.col(keep[i]);
            ys.push_back(labels[keep[i]]);
        }
        (heldout ? he_cols : tr_cols) += x.cols();
        xs.push_back(std::move(x));
        if (!heldout) train_utts.push_back(corpus[u]);
    }

    auto concat = [](const std::vector<Eigen::MatrixXd>& mats, long total) {
        Eigen::MatrixXd out(mats.front().rows(), total);
        long at = 0;
        for (const auto& m : mats) {
            out.middleCols(at, m.cols()) = m;
            at += m.cols();
        }
        return out;
    };
    const Eigen::MatrixXd train_x = concat(tr_x, tr_cols);
    const Eigen::MatrixXd held_x = concat(he_x, he_cols);

    MlpTrainConfig mlp_cfg;
    if (train_cfg) mlp_cfg = *train_cfg;
    mlp_cfg.hidden = cfg.hidden;

    DnnTrainResult res;
    res.mlp = train_mlp(train_x, tr_y, held_x, he_y, cfg.classes, mlp_cfg, seed);
    res.model.mlp = res.mlp.model;
    res.model.cfg = cfg;
    res.model.phoneme_psd = build_phoneme_psd_table(train_utts, cfg.stft, cfg.classes);
    return res;
}

EstimateResult dnn_enhance(const Spectrogram& noisy, const DnnModel& model,
                           const Eigen::MatrixXd& noise_psd, const MosieParams& p) {
    const int K = noisy.bins();
    const long L = noisy.frames();
    const int Q = model.cfg.classes;
    if (model.cfg.stft.frame_len != noisy.config.frame_len ||
        model.cfg.stft.sample_rate != noisy.config.sample_rate)
        throw Error(Err::geometry, "dnn_enhance: model STFT geometry does not match input");
    if (model.phoneme_psd.rows() != K || model.phoneme_psd.cols() != Q ||
        model.mlp.output_dim() != Q)
        throw Error(Err::geometry, "dnn_enhance: class count mismatch between table and MLP");
    if (noise_psd.rows() != K || noise_psd.cols() != L)
        throw Error(Err::geometry, "dnn_enhance: noise PSD dimensions mismatch");

    const Eigen::MatrixXd feats = dnn_features(noisy, model.cfg);
    const Eigen::MatrixXd post = mlp_posteriors(model.mlp, feats);
    const Eigen::MatrixXd P = power_spectrum(noisy);

    Eigen::MatrixXd gains(K, L);
    for (long l = 0; l < L; ++l) {
        for (int k = 0; k < K; ++k) {
            const double npsd = std::max(noise_psd(k, l), kPsdFloor);
            const double gamma = P(k, l) / npsd;
            if (gamma <= 0.0) {
                gains(k, l) = p.floor_gain();
                continue;
            }
            double g = 0.0;
            for (int q = 0; q < Q; ++q) {
                const double xi = std::max(model.phoneme_psd(k, q), kPsdFloor) / npsd;
                g += post(q, l) * mosie_gain_raw({xi, gamma}, p);
            }
            gains(k, l) = std::clamp(g, p.floor_gain(), p.gain_ceiling);
        }
    }
    return {apply_gains(noisy, gains), std::move(gains)};
}

void save_dnn_model(const std::string& path, const DnnModel& model) {
    std::ofstream f(path);
    if (!f) throw Error(Err::io, "cannot write " + path);
    const auto& cfg = model.cfg;
    f << "MOSIE-DNN 1\n";
    f << "sample_rate " << cfg.stft.sample_rate << "\n";
    f << "frame_len " << cfg.stft.frame_len << "\n";
    f << "hop " << cfg.stft.hop << "\n";
    f << "n_mels " << cfg.mfcc.n_mels << "\n";
    f << "n_ceps " << cfg.mfcc.n_ceps << "\n";
    f << "f_lo " << io::fmt_double(cfg.mfcc.f_lo) << "\n";
    f << "f_hi " << io::fmt_double(cfg.mfcc.f_hi) << "\n";
    f << "delta_window " << cfg.delta_window << "\n";
    f << "context " << cfg.context << "\n";
    f << "classes " << cfg.classes << "\n";
    f << "layers " << model.mlp.weights.size() << "\n";
    for (size_t i = 0; i < model.mlp.weights.size(); ++i) {
        io::write_matrix(f, "W" + std::to_string(i), model.mlp.weights[i]);
        io::write_matrix(f, "b" + std::to_string(i), model.mlp.biases[i]);
    }
    io::write_matrix(f, "phoneme_psd", model.phoneme_psd);
    f << "end\n";
    if (!f) throw Error(Err::io, "write failed: " + path);
}

DnnModel load_dnn_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(Err::io, "cannot open " + path);
    io::Reader r(f, path);
    r.expect_line("MOSIE-DNN 1");
    DnnModel m;
    m.cfg.stft.sample_rate = static_cast<int>(r.read_keyed_int("sample_rate"));
    m.cfg.stft.frame_len = static_cast<int>(r.read_keyed_int("frame_len"));
    m.cfg.stft.fft_size = m.cfg.stft.frame_len;
    m.cfg.stft.hop = static_cast<int>(r.read_keyed_int("hop"));
    m.cfg.mfcc.n_mels = static_cast<int>(r.read_keyed_int("n_mels"));
    m.cfg.mfcc.n_ceps = static_cast<int>(r.read_keyed_int("n_ceps"));
    m.cfg.mfcc.f_lo = r.read_keyed_double("f_lo");
    m.cfg.mfcc.f_hi = r.read_keyed_double("f_hi");
    m.cfg.delta_window = static_cast<int>(r.read_keyed_int("delta_window"));
    m.cfg.context = static_cast<int>(r.read_keyed_int("context"));
    m.cfg.classes = static_cast<int>(r.read_keyed_int("classes"));
    const long layers = r.read_keyed_int("layers");
    m.cfg.hidden.clear();
    for (long i = 0; i < layers; ++i) {
        m.mlp.weights.push_back(r.read_matrix("W" + std::to_string(i)));
        Eigen::MatrixXd b = r.read_matrix("b" + std::to_string(i));
        m.mlp.biases.push_back(b.col(0));
        if (i + 1 < layers) m.cfg.hidden.push_back(static_cast<int>(m.mlp.weights.back().rows()));
    }
    m.phoneme_psd = r.read_matrix("phoneme_psd");
    r.expect_line("end");
    return m;
}

} // namespace mosie
