#include "mosie/pipeline.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "mosie/rng.hpp"

namespace mosie {

std::optional<Scheme> scheme_from_name(std::string_view name) {
    if (name == "non-mlse") return Scheme::non_mlse;
    if (name == "nmf") return Scheme::nmf;
    if (name == "dnn") return Scheme::dnn;
    return std::nullopt;
}

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::non_mlse: return "non-mlse";
        case Scheme::nmf: return "nmf";
        default: return "dnn";
    }
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(Err::io, "cannot open config " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(f, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string key, eq, value;
        if (!(ss >> key)) continue; // blank
        if (!(ss >> eq >> value) || eq != "=")
            throw Error(Err::usage, "config " + path + ": expected 'key = value', got: " + line);
        kv[key] = value;
    }
    return kv;
}

void apply_config(PipelineConfig& cfg, const std::map<std::string, std::string>& kv) {
    for (const auto& [key, value] : kv) {
        try {
            if (key == "frame_len") {
                cfg.stft.frame_len = std::stoi(value);
                cfg.stft.fft_size = cfg.stft.frame_len;
                cfg.stft.hop = cfg.stft.frame_len / 2;
            } else if (key == "sample_rate") {
                cfg.stft.sample_rate = std::stoi(value);
            } else if (key == "preset") {
                const auto p = preset_params(value);
                if (!p) throw Error(Err::usage, "unknown preset: " + value);
                const double floor = cfg.params.gain_floor_db; // presets keep clamps
                cfg.params = *p;
                cfg.params.gain_floor_db = floor;
                cfg.preset = value;
            } else if (key == "mu") {
                cfg.params.shape_mu = std::stod(value);
                cfg.preset.clear();
            } else if (key == "beta") {
                cfg.params.compression_beta = std::stod(value);
                cfg.preset.clear();
            } else if (key == "gain_floor_db") {
                cfg.params.gain_floor_db = std::stod(value);
            } else if (key == "gain_ceiling") {
                cfg.params.gain_ceiling = std::stod(value);
            } else if (key == "max_post_snr_db") {
                cfg.params.max_post_snr_db = std::stod(value);
            } else if (key == "alpha_dd") {
                cfg.alpha_dd = std::stod(value);
            } else if (key == "tracker_time_const_s") {
                cfg.tracker.time_const_s = std::stod(value);
            } else if (key == "tracker_xi_h1_db") {
                cfg.tracker.xi_h1_db = std::stod(value);
            } else if (key == "target_peak") {
                cfg.target_peak = std::stod(value);
            } else if (key == "seed") {
                cfg.seed = std::stoull(value);
            } else {
                throw Error(Err::usage, "unknown config key: " + key);
            }
        } catch (const std::invalid_argument&) {
            throw Error(Err::usage, "config value for '" + key + "' is not a number: " + value);
        }
    }
}

EnhanceOutput enhance_non_mlse(const AudioBuffer& noisy, const MosieParams& params,
                               double alpha_dd, const NoiseTrackerConfig& tracker,
                               const StftConfig& stft) {
    const auto spec = analyze(noisy, stft);
    const Eigen::MatrixXd noise_psd = track_noise_psd(spec, tracker);
    const Eigen::MatrixXd P = power_spectrum(spec);
    const int K = spec.bins();
    const long L = spec.frames();

    Eigen::MatrixXd gains(K, L), speech_psd(K, L), xi_m(K, L), gamma_m(K, L);
    Eigen::VectorXd prev_amp2 = Eigen::VectorXd::Zero(K); // A^2 of the previous frame
    for (long l = 0; l < L; ++l) {
        for (int k = 0; k < K; ++k) {
            const double npsd = noise_psd(k, l);
            const double gamma = P(k, l) / npsd;
            const double ml = std::max(gamma - 1.0, 0.0);
            const double xi = l == 0 ? ml : alpha_dd * prev_amp2(k) / npsd + (1.0 - alpha_dd) * ml;
            const double g = mosie_gain({xi, gamma}, params);
            gains(k, l) = g;
            xi_m(k, l) = xi;
            gamma_m(k, l) = gamma;
            speech_psd(k, l) = xi * npsd;
            const double amp = g * std::sqrt(P(k, l));
            prev_amp2(k) = amp * amp;
        }
    }
    EnhanceOutput out;
    out.enhanced_spec = apply_gains(spec, gains);
    out.enhanced = synthesize(out.enhanced_spec);
    out.gains = std::move(gains);
    out.psd.speech_psd = std::move(speech_psd);
    out.psd.noise_psd = noise_psd;
    out.psd.xi = std::move(xi_m);
    out.psd.gamma = std::move(gamma_m);
    return out;
}

EnhanceOutput enhance_nmf(const AudioBuffer& noisy, const NmfModel& model,
                          const MosieParams& params, std::uint64_t seed) {
    const auto spec = analyze(noisy, model.stft);
    EnhanceOutput out;
    out.psd = nmf_psd(spec, model, seed);
    auto res = apply_estimator(spec, out.psd, params);
    out.enhanced_spec = std::move(res.enhanced);
    out.gains = std::move(res.gains);
    out.enhanced = synthesize(out.enhanced_spec);
    return out;
}

EnhanceOutput enhance_dnn(const AudioBuffer& noisy, const DnnModel& model,
                          const MosieParams& params, const NoiseTrackerConfig& tracker) {
    const auto spec = analyze(noisy, model.cfg.stft);
    const Eigen::MatrixXd noise_psd = track_noise_psd(spec, tracker);
    auto res = dnn_enhance(spec, model, noise_psd, params);

    EnhanceOutput out;
    out.enhanced_spec = std::move(res.enhanced);
    out.gains = std::move(res.gains);
    out.enhanced = synthesize(out.enhanced_spec);
    // xi shown for diagnostics: posterior-blended table over tracked noise
    out.psd.noise_psd = noise_psd;
    out.psd.gamma = power_spectrum(spec).cwiseQuotient(noise_psd.cwiseMax(kPsdFloor));
    const Eigen::MatrixXd feats = dnn_features(spec, model.cfg);
    const Eigen::MatrixXd post = mlp_posteriors(model.mlp, feats);
    out.psd.speech_psd = model.phoneme_psd * post;
    out.psd.xi = out.psd.speech_psd.cwiseQuotient(noise_psd.cwiseMax(kPsdFloor));
    return out;
}

namespace {

struct TaskResult {
    // one entry per (scheme, preset): metrics for this utterance/condition
    std::vector<EvalReport> reports;
    double max_decomp_err = 0.0;
};

} // namespace

EvalResult evaluate_grid(const std::vector<AnnotatedUtterance>& corpus,
                         const std::vector<NamedNoise>& noises, const EvalModels& models,
                         const EvalOptions& opts) {
    if (corpus.empty() || noises.empty() || opts.snrs_db.empty() || opts.schemes.empty() ||
        opts.presets.empty())
        throw Error(Err::usage, "evaluate_grid: empty corpus, noises, SNRs, schemes or presets");

    // validate models and presets before any audio work
    std::vector<MosieParams> preset_params_list;
    for (const auto& name : opts.presets) {
        const auto p = preset_params(name);
        if (!p) throw Error(Err::usage, "unknown preset: " + name);
        MosieParams mp = *p;
        mp.gain_floor_db = opts.pipeline.params.gain_floor_db;
        mp.gain_ceiling = opts.pipeline.params.gain_ceiling;
        mp.max_post_snr_db = opts.pipeline.params.max_post_snr_db;
        preset_params_list.push_back(mp);
    }
    for (const Scheme s : opts.schemes) {
        if (s == Scheme::dnn && !models.dnn)
            throw Error(Err::model, "evaluate_grid: dnn scheme requested without a model");
        if (s == Scheme::nmf)
            for (const auto& n : noises)
                if (!models.nmf_by_noise.count(n.name))
                    throw Error(Err::model, "evaluate_grid: no nmf model for noise " + n.name);
    }

    struct Task {
        size_t utt, noise, snr;
    };
    std::vector<Task> tasks;
    for (size_t u = 0; u < corpus.size(); ++u)
        for (size_t n = 0; n < noises.size(); ++n)
            for (size_t s = 0; s < opts.snrs_db.size(); ++s) tasks.push_back({u, n, s});

    std::vector<TaskResult> results(tasks.size());
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        while (true) {
            const size_t t = next.fetch_add(1);
            if (t >= tasks.size() || failed.load()) break;
            try {
                const Task& task = tasks[t];
                const auto& utt = corpus[task.utt];
                const auto& noise = noises[task.noise];
                const double snr_db = opts.snrs_db[task.snr];

                const AudioBuffer clean = peak_normalize(utt.audio, opts.pipeline.target_peak);
                MixSpec ms;
                ms.snr_db = snr_db;
                ms.seed = derive_seed(opts.seed, t);
                ms.min_offset = noise.audio.size() / 2; // test half only
                const auto mix = mix_at_snr(clean, noise.audio, ms);

                const StftConfig& stft = opts.pipeline.stft;
                const auto clean_spec = analyze(clean, stft);
                const auto noise_spec = analyze(mix.scaled_noise, stft);
                const double noisy_seg_snr = seg_snr(clean, mix.noisy, opts.seg);

                TaskResult& res = results[t];
                for (const Scheme scheme : opts.schemes) {
                    for (size_t pi = 0; pi < opts.presets.size(); ++pi) {
                        MosieParams params = preset_params_list[pi];
                        EnhanceOutput out;
                        switch (scheme) {
                            case Scheme::non_mlse:
                                out = enhance_non_mlse(mix.noisy, params, opts.pipeline.alpha_dd,
                                                       opts.pipeline.tracker, stft);
                                break;
                            case Scheme::nmf:
                                out = enhance_nmf(mix.noisy, models.nmf_by_noise.at(noise.name),
                                                  params, derive_seed(opts.seed, t * 977 + pi));
                                break;
                            case Scheme::dnn:
                                out = enhance_dnn(mix.noisy, *models.dnn, params,
                                                  opts.pipeline.tracker);
                                break;
                        }
                        const auto comp =
                            shadow_filter_components(clean_spec, noise_spec, out.gains);

                        // decomposition check: gains applied to the parts must
                        // reassemble the enhanced mixture
                        double max_err = 0.0;
                        for (long i = 0; i < clean.size(); ++i) {
                            const double sum = comp.filtered_speech.samples[i] +
                                               comp.filtered_noise.samples[i];
                            max_err = std::max(max_err,
                                               std::abs(sum - out.enhanced.samples[i]));
                        }
                        res.max_decomp_err = std::max(res.max_decomp_err, max_err);

                        EvalReport rep;
                        rep.scheme = scheme_name(scheme);
                        rep.preset = opts.presets[pi];
                        rep.noise_type = noise.name;
                        rep.snr_db = snr_db;
                        rep.dseg_snr_db = seg_snr(clean, out.enhanced, opts.seg) - noisy_seg_snr;
                        rep.seg_ssnr_db = seg_ssnr(clean, comp.filtered_speech, opts.seg);
                        rep.seg_nr_db = seg_nr(mix.scaled_noise, comp.filtered_noise, opts.seg);
                        res.reports.push_back(std::move(rep));
                    }
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    };

    const int n_threads = std::max(1, opts.threads);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw Error(Err::numeric, "evaluate_grid: task failed: " + first_error);

    // aggregate means per condition, in deterministic grid order
    EvalResult out;
    for (const auto& r : results) out.max_decomposition_err = std::max(out.max_decomposition_err, r.max_decomp_err);
    for (size_t n = 0; n < noises.size(); ++n)
        for (size_t s = 0; s < opts.snrs_db.size(); ++s)
            for (const Scheme scheme : opts.schemes)
                for (const auto& preset : opts.presets) {
                    EvalRow row;
                    row.scheme = scheme_name(scheme);
                    row.preset = preset;
                    row.noise = noises[n].name;
                    row.snr_db = opts.snrs_db[s];
                    row.dseg_snr = row.seg_ssnr = row.seg_nr = 0.0;
                    row.n_utts = 0;
                    for (size_t t = 0; t < tasks.size(); ++t) {
                        if (tasks[t].noise != n || tasks[t].snr != s) continue;
                        for (const auto& rep : results[t].reports) {
                            if (rep.scheme != row.scheme || rep.preset != preset) continue;
                            row.dseg_snr += rep.dseg_snr_db;
                            row.seg_ssnr += rep.seg_ssnr_db;
                            row.seg_nr += rep.seg_nr_db;
                            ++row.n_utts;
                        }
                    }
                    if (row.n_utts > 0) {
                        row.dseg_snr /= row.n_utts;
                        row.seg_ssnr /= row.n_utts;
                        row.seg_nr /= row.n_utts;
                        out.rows.push_back(std::move(row));
                    }
                }
    return out;
}

void write_results_tsv(const std::string& path, const std::vector<EvalRow>& rows) {
    std::ofstream f(path);
    if (!f) throw Error(Err::io, "cannot write " + path);
    f << "scheme\tpreset\tnoise\tsnr_db\tdseg_snr\tseg_ssnr\tseg_nr\n";
    char line[256];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%s\t%s\t%s\t%.6g\t%.6f\t%.6f\t%.6f\n",
                      r.scheme.c_str(), r.preset.c_str(), r.noise.c_str(), r.snr_db, r.dseg_snr,
                      r.seg_ssnr, r.seg_nr);
        f << line;
    }
    if (!f) throw Error(Err::io, "write failed: " + path);
}

} // namespace mosie
