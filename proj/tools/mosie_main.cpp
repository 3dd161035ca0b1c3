// mosie: single-channel speech enhancement toolkit.
// Subcommands: make-corpus, train-nmf, train-dnn, enhance, gain-curves, evaluate.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "mosie/corpus.hpp"
#include "mosie/pipeline.hpp"
#include "mosie/rng.hpp"

namespace fs = std::filesystem;
using namespace mosie;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

PipelineConfig load_pipeline_config(const std::string& config_path) {
    PipelineConfig cfg;
    std::string path = config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("MOSIE_CONFIG")) path = env;
    }
    if (!path.empty()) apply_config(cfg, read_config_file(path));
    return cfg;
}

void apply_estimator_flags(PipelineConfig& cfg, const std::string& preset, double mu, double beta,
                           double floor_db) {
    if (!preset.empty()) {
        const auto p = preset_params(preset);
        if (!p) throw Error(Err::usage, "unknown preset: " + preset);
        cfg.params.shape_mu = p->shape_mu;
        cfg.params.compression_beta = p->compression_beta;
        cfg.preset = preset;
    }
    if (mu > 0) {
        cfg.params.shape_mu = mu;
        cfg.preset.clear();
    }
    if (beta > 0) {
        cfg.params.compression_beta = beta;
        cfg.preset.clear();
    }
    if (floor_db <= 0 && floor_db > -1000) cfg.params.gain_floor_db = floor_db;
}

EvalModels load_models(const std::string& model_dir, const std::vector<Scheme>& schemes,
                       const std::vector<NamedNoise>& noises) {
    EvalModels models;
    for (const Scheme s : schemes) {
        if (s == Scheme::dnn) {
            const auto path = fs::path(model_dir) / "dnn.model";
            models.dnn = load_dnn_model(path.string());
        } else if (s == Scheme::nmf) {
            for (const auto& n : noises) {
                const auto path = fs::path(model_dir) / ("nmf-" + n.name + ".model");
                models.nmf_by_noise.emplace(n.name, load_nmf_model(path.string()));
            }
        }
    }
    return models;
}

int cmd_make_corpus(const std::string& out_dir, int n_train, int n_test, double noise_seconds,
                    std::uint64_t seed) {
    const auto train = generate_synthetic_corpus(n_train, seed);
    const auto test = generate_synthetic_corpus(n_test, derive_seed(seed, 1));
    write_corpus((fs::path(out_dir) / "train").string(), train);
    write_corpus((fs::path(out_dir) / "test").string(), test);

    const long n = static_cast<long>(noise_seconds * 16000);
    fs::create_directories(fs::path(out_dir) / "noise");
    write_wav((fs::path(out_dir) / "noise" / "white.wav").string(),
              white_noise(n, 16000, derive_seed(seed, 2)), WavEncoding::float32);
    write_wav((fs::path(out_dir) / "noise" / "pink.wav").string(),
              pink_noise(n, 16000, derive_seed(seed, 3)), WavEncoding::float32);
    write_wav((fs::path(out_dir) / "noise" / "modpink.wav").string(),
              modulated_pink_noise(n, 16000, derive_seed(seed, 4)), WavEncoding::float32);
    std::cout << "wrote " << n_train << " train + " << n_test << " test utterances and 3 noises to "
              << out_dir << "\n";
    return 0;
}

int cmd_train_nmf(const std::string& corpus_dir, const std::string& noise_path,
                  const std::string& out_path, NmfConfig nmf, const PipelineConfig& cfg,
                  std::uint64_t seed) {
    const auto corpus = read_corpus(corpus_dir);
    const StftConfig stft = cfg.stft;

    std::vector<Eigen::MatrixXd> mats;
    long total = 0;
    for (const auto& utt : corpus) {
        const auto P = power_spectrum(analyze(peak_normalize(utt.audio, cfg.target_peak), stft));
        total += P.cols();
        mats.push_back(P);
    }
    Eigen::MatrixXd speech_cols(stft.bins(), total);
    long at = 0;
    for (const auto& m : mats) {
        speech_cols.middleCols(at, m.cols()) = m;
        at += m.cols();
    }

    // first half of the noise file is the training split
    AudioBuffer noise = read_wav(noise_path);
    if (noise.sample_rate != stft.sample_rate)
        throw Error(Err::rate_mismatch, noise_path + ": sample rate differs from pipeline");
    noise.samples.resize(noise.samples.size() / 2);
    const Eigen::MatrixXd noise_cols = power_spectrum(analyze(noise, stft));

    NmfModel model;
    model.stft = stft;
    model.context = nmf.context;
    model.sparsity = nmf.sparsity;
    model.max_iters = nmf.max_iters;
    model.rel_tol = nmf.rel_tol;
    model.noise_name = fs::path(noise_path).stem().string();
    std::cout << "training speech basis (" << nmf.speech_bases << " bases, " << total
              << " frames)...\n";
    model.speech_basis = train_bases(speech_cols, nmf.speech_bases, nmf, seed);
    std::cout << "training noise basis (" << nmf.noise_bases << " bases, " << noise_cols.cols()
              << " frames)...\n";
    model.noise_basis = train_bases(noise_cols, nmf.noise_bases, nmf, derive_seed(seed, 1));
    save_nmf_model(out_path, model);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_train_dnn(const std::string& corpus_dir, const std::string& out_path, DnnModelConfig cfg,
                  int max_epochs, const PipelineConfig& pipe, std::uint64_t seed) {
    auto corpus = read_corpus(corpus_dir);
    for (auto& utt : corpus) utt.audio = peak_normalize(utt.audio, pipe.target_peak);
    cfg.stft = pipe.stft;

    std::cout << "training classifier on " << corpus.size() << " utterances...\n";
    DnnTrainResult res;
    {
        // epoch cap travels through the MLP config
        MlpTrainConfig mlp_cfg;
        mlp_cfg.hidden = cfg.hidden;
        mlp_cfg.max_epochs = max_epochs;
        res = train_dnn(corpus, cfg, seed, &mlp_cfg);
    }
    save_dnn_model(out_path, res.model);
    std::cout << "held-out frame accuracy: " << res.mlp.heldout_accuracy * 100.0 << " % (best epoch "
              << res.mlp.best_epoch << ")\n";
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_enhance(const std::string& in_path, const std::string& out_path, Scheme scheme,
                const std::string& model_path, const PipelineConfig& cfg,
                const std::string& clean_path, const std::string& noise_path,
                const std::string& dump_gains, const std::string& dump_xi) {
    const AudioBuffer noisy = read_wav(in_path);
    if (noisy.sample_rate != cfg.stft.sample_rate)
        throw Error(Err::rate_mismatch, in_path + ": sample rate differs from pipeline config");

    EnhanceOutput out;
    switch (scheme) {
        case Scheme::non_mlse:
            out = enhance_non_mlse(noisy, cfg.params, cfg.alpha_dd, cfg.tracker, cfg.stft);
            break;
        case Scheme::nmf: {
            if (model_path.empty()) throw Error(Err::usage, "nmf scheme needs --model");
            const auto model = load_nmf_model(model_path);
            out = enhance_nmf(noisy, model, cfg.params, cfg.seed);
            break;
        }
        case Scheme::dnn: {
            if (model_path.empty()) throw Error(Err::usage, "dnn scheme needs --model");
            const auto model = load_dnn_model(model_path);
            out = enhance_dnn(noisy, model, cfg.params, cfg.tracker);
            break;
        }
    }
    write_wav(out_path, out.enhanced);
    if (!dump_gains.empty()) dump_spectrogram_tsv(dump_gains, out.enhanced_spec);
    if (!dump_xi.empty()) dump_xi_tsv(dump_xi, out.psd);

    if (!clean_path.empty() && !noise_path.empty()) {
        const AudioBuffer clean = read_wav(clean_path);
        const AudioBuffer scaled_noise = read_wav(noise_path);
        if (clean.size() != noisy.size() || scaled_noise.size() != noisy.size())
            throw Error(Err::geometry, "reference signals must match the input length");
        const auto clean_spec = analyze(clean, cfg.stft);
        const auto noise_spec = analyze(scaled_noise, cfg.stft);
        const auto comp = shadow_filter_components(clean_spec, noise_spec, out.gains);
        SegSnrConfig seg;
        const double base = seg_snr(clean, noisy, seg);
        std::cout << "dseg_snr\t" << seg_snr(clean, out.enhanced, seg) - base << "\n";
        std::cout << "seg_ssnr\t" << seg_ssnr(clean, comp.filtered_speech, seg) << "\n";
        std::cout << "seg_nr\t" << seg_nr(scaled_noise, comp.filtered_noise, seg) << "\n";
    }
    return 0;
}

int cmd_gain_curves(const std::string& figure, const std::string& out_dir, double mu, double beta,
                    const std::string& fix_axis, double fix_db, double from_db, double to_db,
                    double step_db, const std::string& out_path) {
    if (!figure.empty()) {
        // figure-matching grids over the published axes
        fs::create_directories(out_dir);
        const bool post = figure == "post";
        if (!post && figure != "prior") throw Error(Err::usage, "--figure must be post or prior");
        const std::vector<double> fixed_dbs = post ? std::vector<double>{-5.0, 10.0}
                                                   : std::vector<double>{0.0, 10.0};
        const double lo = post ? -10.0 : -20.0, hi = 20.0;
        char name[128];
        for (double fixed : fixed_dbs) {
            for (double b : {1.0, 0.5, 0.25, 0.001}) {
                MosieParams p;
                p.shape_mu = 0.25;
                p.compression_beta = b;
                const auto sweep = gain_curve_sweep(
                    p, post ? SweepAxis::posterior : SweepAxis::prior, fixed, lo, hi, 0.25);
                std::snprintf(name, sizeof(name), "%s/gain_%s_fix%g_mu0.25_beta%g.tsv",
                              out_dir.c_str(), figure.c_str(), fixed, b);
                write_sweep_tsv(name, sweep);
            }
            for (double m : {1.0, 0.5, 0.25, 0.1}) {
                MosieParams p;
                p.shape_mu = m;
                p.compression_beta = 0.25;
                const auto sweep = gain_curve_sweep(
                    p, post ? SweepAxis::posterior : SweepAxis::prior, fixed, lo, hi, 0.25);
                std::snprintf(name, sizeof(name), "%s/gain_%s_fix%g_mu%g_beta0.25.tsv",
                              out_dir.c_str(), figure.c_str(), fixed, m);
                write_sweep_tsv(name, sweep);
            }
        }
        std::cout << "wrote figure grids to " << out_dir << "\n";
        return 0;
    }
    MosieParams p;
    p.shape_mu = mu;
    p.compression_beta = beta;
    const SweepAxis axis = fix_axis == "xi" ? SweepAxis::posterior : SweepAxis::prior;
    if (fix_axis != "xi" && fix_axis != "gamma")
        throw Error(Err::usage, "--fix must be xi or gamma");
    write_sweep_tsv(out_path, gain_curve_sweep(p, axis, fix_db, from_db, to_db, step_db));
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_evaluate(const std::string& corpus_dir, const std::string& noises_arg,
                 const std::string& snrs_arg, const std::string& schemes_arg,
                 const std::string& presets_arg, const std::string& model_dir,
                 const std::string& out_path, std::uint64_t seed, int threads,
                 const PipelineConfig& pipe) {
    EvalOptions opts;
    opts.pipeline = pipe;
    opts.seed = seed;
    opts.threads = threads;
    for (const auto& s : split_list(snrs_arg)) opts.snrs_db.push_back(std::stod(s));
    for (const auto& s : split_list(schemes_arg)) {
        const auto sc = scheme_from_name(s);
        if (!sc) throw Error(Err::usage, "unknown scheme: " + s);
        opts.schemes.push_back(*sc);
    }
    opts.presets = split_list(presets_arg);

    std::vector<NamedNoise> noises;
    for (const auto& path : split_list(noises_arg)) {
        NamedNoise n;
        n.name = fs::path(path).stem().string();
        n.audio = read_wav(path);
        noises.push_back(std::move(n));
    }
    const auto corpus = read_corpus(corpus_dir);
    const auto models = load_models(model_dir, opts.schemes, noises);

    const auto result = evaluate_grid(corpus, noises, models, opts);
    write_results_tsv(out_path, result.rows);
    std::cout << "wrote " << result.rows.size() << " condition rows to " << out_path
              << " (max decomposition error " << result.max_decomposition_err << ")\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mosie: parametric short-time speech enhancement toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key = value config file (or MOSIE_CONFIG env)");

    // make-corpus
    auto* mc = app.add_subcommand("make-corpus", "generate the synthetic corpus and noise set");
    std::string mc_out = "corpus";
    int mc_train = 24, mc_test = 8;
    double mc_noise_s = 60.0;
    std::uint64_t mc_seed = 1;
    mc->add_option("--out", mc_out, "output directory");
    mc->add_option("--train", mc_train, "number of training utterances");
    mc->add_option("--test", mc_test, "number of test utterances");
    mc->add_option("--noise-seconds", mc_noise_s, "length of each generated noise file");
    mc->add_option("--seed", mc_seed, "generator seed");

    // train-nmf
    auto* tn = app.add_subcommand("train-nmf", "train speech+noise basis matrices");
    std::string tn_corpus, tn_noise, tn_out = "nmf.model";
    NmfConfig tn_cfg;
    std::uint64_t tn_seed = 1;
    tn->add_option("--corpus", tn_corpus, "clean training corpus directory")->required();
    tn->add_option("--noise", tn_noise, "noise wav (first half used)")->required();
    tn->add_option("--out", tn_out, "output model path");
    tn->add_option("--bases", tn_cfg.speech_bases, "speech bases");
    tn->add_option("--noise-bases", tn_cfg.noise_bases, "noise bases");
    tn->add_option("--context", tn_cfg.context, "context frames (odd)");
    tn->add_option("--sparsity", tn_cfg.sparsity, "activation sparsity weight");
    tn->add_option("--iters", tn_cfg.max_iters, "max multiplicative updates");
    tn->add_option("--seed", tn_seed, "training seed");

    // train-dnn
    auto* td = app.add_subcommand("train-dnn", "train the phoneme classifier and PSD table");
    std::string td_corpus, td_out = "dnn.model", td_hidden = "512,512";
    int td_classes = kSyntheticClasses, td_epochs = 100;
    std::uint64_t td_seed = 1;
    td->add_option("--corpus", td_corpus, "clean training corpus directory")->required();
    td->add_option("--out", td_out, "output model path");
    td->add_option("--hidden", td_hidden, "hidden layer sizes, comma separated");
    td->add_option("--classes", td_classes, "number of phone classes");
    td->add_option("--epochs", td_epochs, "max training epochs");
    td->add_option("--seed", td_seed, "training seed");

    // enhance
    auto* en = app.add_subcommand("enhance", "enhance a noisy wav");
    std::string en_in, en_out, en_scheme = "non-mlse", en_model, en_preset;
    std::string en_clean, en_noise, en_dump_gains, en_dump_xi;
    double en_mu = -1, en_beta = -1, en_floor = 1; // 1 = unset
    std::uint64_t en_seed = 1;
    en->add_option("--in", en_in, "noisy input wav")->required();
    en->add_option("--out", en_out, "enhanced output wav")->required();
    en->add_option("--scheme", en_scheme, "non-mlse | nmf | dnn");
    en->add_option("--model", en_model, "model file for nmf/dnn schemes");
    en->add_option("--preset", en_preset, "gauss-stsa | gauss-lsa | sg-stsa | sg-lsa");
    en->add_option("--mu", en_mu, "estimator shape");
    en->add_option("--beta", en_beta, "estimator compression");
    en->add_option("--floor-db", en_floor, "gain floor in dB (<= 0)");
    en->add_option("--clean", en_clean, "clean reference wav (enables the report)");
    en->add_option("--noise", en_noise, "scaled noise reference wav");
    en->add_option("--dump-gains", en_dump_gains, "write enhanced spectrogram TSV");
    en->add_option("--dump-xi", en_dump_xi, "write a priori SNR TSV");
    en->add_option("--seed", en_seed, "seed for nmf activation init");

    // gain-curves
    auto* gc = app.add_subcommand("gain-curves", "export gain-function sweeps");
    std::string gc_figure, gc_out_dir = "gain-curves", gc_fix = "xi", gc_out = "sweep.tsv";
    double gc_mu = 0.2, gc_beta = 1.0, gc_fix_db = 0.0, gc_from = -10.0, gc_to = 20.0,
           gc_step = 0.25;
    gc->add_option("--figure", gc_figure, "post | prior: write the published-axes grids");
    gc->add_option("--out-dir", gc_out_dir, "directory for --figure output");
    gc->add_option("--mu", gc_mu, "estimator shape");
    gc->add_option("--beta", gc_beta, "estimator compression");
    gc->add_option("--fix", gc_fix, "which SNR stays fixed: xi | gamma");
    gc->add_option("--fix-db", gc_fix_db, "fixed SNR in dB");
    gc->add_option("--from", gc_from, "sweep start dB");
    gc->add_option("--to", gc_to, "sweep end dB");
    gc->add_option("--step", gc_step, "sweep step dB");
    gc->add_option("--out", gc_out, "output TSV for a single sweep");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "run the factorial evaluation grid");
    std::string ev_corpus, ev_noises, ev_snrs = "-5,0,5,10,15,20";
    std::string ev_schemes = "non-mlse,nmf,dnn";
    std::string ev_presets = "gauss-stsa,gauss-lsa,sg-stsa,sg-lsa";
    std::string ev_models = ".", ev_out = "results.tsv";
    std::uint64_t ev_seed = 1;
    int ev_threads = 1;
    ev->add_option("--corpus", ev_corpus, "test corpus directory")->required();
    ev->add_option("--noises", ev_noises, "comma-separated noise wav paths")->required();
    ev->add_option("--snrs", ev_snrs, "comma-separated SNRs in dB");
    ev->add_option("--schemes", ev_schemes, "comma-separated schemes");
    ev->add_option("--presets", ev_presets, "comma-separated presets");
    ev->add_option("--model-dir", ev_models, "directory with dnn.model / nmf-<noise>.model");
    ev->add_option("--out", ev_out, "results TSV path");
    ev->add_option("--seed", ev_seed, "grid seed");
    ev->add_option("--threads", ev_threads, "worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig cfg = load_pipeline_config(config_path);
        if (mc->parsed()) return cmd_make_corpus(mc_out, mc_train, mc_test, mc_noise_s, mc_seed);
        if (tn->parsed()) return cmd_train_nmf(tn_corpus, tn_noise, tn_out, tn_cfg, cfg, tn_seed);
        if (td->parsed()) {
            DnnModelConfig dcfg;
            dcfg.classes = td_classes;
            dcfg.hidden.clear();
            for (const auto& h : split_list(td_hidden)) dcfg.hidden.push_back(std::stoi(h));
            return cmd_train_dnn(td_corpus, td_out, dcfg, td_epochs, cfg, td_seed);
        }
        if (en->parsed()) {
            apply_estimator_flags(cfg, en_preset, en_mu, en_beta, en_floor);
            cfg.seed = en_seed;
            const auto scheme = scheme_from_name(en_scheme);
            if (!scheme) throw Error(Err::usage, "unknown scheme: " + en_scheme);
            return cmd_enhance(en_in, en_out, *scheme, en_model, cfg, en_clean, en_noise,
                               en_dump_gains, en_dump_xi);
        }
        if (gc->parsed())
            return cmd_gain_curves(gc_figure, gc_out_dir, gc_mu, gc_beta, gc_fix, gc_fix_db,
                                   gc_from, gc_to, gc_step, gc_out);
        if (ev->parsed())
            return cmd_evaluate(ev_corpus, ev_noises, ev_snrs, ev_schemes, ev_presets, ev_models,
                                ev_out, ev_seed, ev_threads, cfg);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 1;
}
