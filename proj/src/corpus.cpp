#include "mosie/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "mosie/rng.hpp"
#include "mosie/stft.hpp"

namespace fs = std::filesystem;

namespace mosie {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

struct VowelClass {
    double formant[3];
    double bandwidth[3];
};

// Rough adult vowel formants; exact values only need to be distinct per class.
const VowelClass kVowels[4] = {
    {{730.0, 1090.0, 2440.0}, {90.0, 110.0, 170.0}},  // a
    {{270.0, 2290.0, 3010.0}, {60.0, 140.0, 200.0}},  // i
    {{300.0, 870.0, 2240.0}, {70.0, 100.0, 180.0}},   // u
    {{530.0, 1840.0, 2480.0}, {80.0, 120.0, 180.0}},  // e
};

struct FricativeClass {
    double lo_hz, hi_hz, level;
};

const FricativeClass kFricatives[3] = {
    {4200.0, 7800.0, 1.0},  // s-like
    {1800.0, 4800.0, 0.9},  // sh-like
    {900.0, 7600.0, 0.55},  // f-like, broad and weak
};

double formant_envelope(const VowelClass& v, double f) {
    static const double weights[3] = {1.0, 0.7, 0.35};
    double e = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double d = (f - v.formant[i]) / v.bandwidth[i];
        e += weights[i] / (1.0 + d * d);
    }
    // mild spectral tilt toward high frequencies
    return (e + 0.01) * std::pow(10.0, -f / 8000.0);
}

void apply_fades(std::vector<double>& x, int fade) {
    const int n = static_cast<int>(x.size());
    fade = std::min(fade, n / 2);
    for (int i = 0; i < fade; ++i) {
        const double g = 0.5 - 0.5 * std::cos(kTwoPi / 2.0 * i / fade);
        x[i] *= g;
        x[n - 1 - i] *= g;
    }
}

void scale_rms(std::vector<double>& x, double target_rms) {
    double e = 0.0;
    for (double v : x) e += v * v;
    const double rms = std::sqrt(e / x.size());
    if (rms > 0.0)
        for (double& v : x) v *= target_rms / rms;
}

std::vector<double> synth_vowel(int cls, long n, int sample_rate, Rng& rng) {
    const VowelClass& v = kVowels[cls];
    const double f0 = rng.uniform(95.0, 230.0);
    const double glide = rng.uniform(-0.08, 0.08); // natural pitch drift per segment
    std::vector<double> amp, phase;
    std::vector<int> harm;
    for (int h = 1; h * f0 < 7600.0 / (1.0 + std::abs(glide)); ++h) {
        harm.push_back(h);
        amp.push_back(formant_envelope(v, h * f0));
        phase.push_back(rng.uniform(0.0, kTwoPi));
    }
    std::vector<double> x(n, 0.0);
    for (size_t j = 0; j < harm.size(); ++j) {
        // phase integration of the gliding fundamental keeps harmonics locked
        double ph = phase[j];
        const double w0 = kTwoPi * harm[j] * f0 / sample_rate;
        for (long i = 0; i < n; ++i) {
            x[i] += amp[j] * std::sin(ph);
            ph += w0 * (1.0 + glide * (static_cast<double>(i) / n - 0.5));
        }
    }
    scale_rms(x, 0.1);
    apply_fades(x, sample_rate / 100); // 10 ms
    return x;
}

std::vector<double> synth_fricative(int cls, long n, int sample_rate, Rng& rng) {
    const FricativeClass& fc = kFricatives[cls];
    std::vector<double> x(n);
    for (long i = 0; i < n; ++i) x[i] = rng.gaussian();

    // shape in the frequency domain with raised-cosine band edges
    const long m = n + (n % 2); // even length for the real FFT
    std::vector<double> padded(m, 0.0);
    std::copy(x.begin(), x.end(), padded.begin());
    RealFft fft(static_cast<int>(m));
    std::vector<std::complex<double>> spec(m / 2 + 1);
    fft.forward(padded.data(), spec.data());
    const double edge = 200.0;
    for (long k = 0; k < static_cast<long>(spec.size()); ++k) {
        const double f = static_cast<double>(k) * sample_rate / m;
        double g = 0.0;
        if (f >= fc.lo_hz && f <= fc.hi_hz)
            g = 1.0;
        else if (f > fc.lo_hz - edge && f < fc.lo_hz)
            g = 0.5 + 0.5 * std::cos(kTwoPi / 2.0 * (fc.lo_hz - f) / edge);
        else if (f > fc.hi_hz && f < fc.hi_hz + edge)
            g = 0.5 + 0.5 * std::cos(kTwoPi / 2.0 * (f - fc.hi_hz) / edge);
        spec[k] *= g;
    }
    fft.inverse(spec.data(), padded.data());
    x.assign(padded.begin(), padded.begin() + n);
    scale_rms(x, 0.05 * fc.level);
    apply_fades(x, sample_rate / 100);
    return x;
}

} // namespace

std::vector<AnnotatedUtterance> generate_synthetic_corpus(int n_utts, std::uint64_t seed) {
    if (n_utts < 1) throw Error(Err::domain, "generate_synthetic_corpus: n_utts must be >= 1");
    const int sample_rate = 16000;
    std::vector<AnnotatedUtterance> corpus;
    corpus.reserve(n_utts);
    for (int u = 0; u < n_utts; ++u) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(u)));
        const int n_segs = 6 + static_cast<int>(rng.uniform_int(3)); // 6..8, keeps utterances > 2.5 s
        AnnotatedUtterance utt;
        utt.audio.sample_rate = sample_rate;
        bool has_vowel = false;
        int prev_cls = -1;
        for (int s = 0; s < n_segs; ++s) {
            int cls = static_cast<int>(rng.uniform_int(kSyntheticClasses));
            if (cls == kSilenceClass && prev_cls == kSilenceClass)
                cls = 1 + static_cast<int>(rng.uniform_int(kSyntheticClasses - 1));
            if (s == n_segs - 1 && !has_vowel && (cls < 1 || cls > 4))
                cls = 1 + static_cast<int>(rng.uniform_int(4)); // guarantee voiced content
            prev_cls = cls;
            if (cls >= 1 && cls <= 4) has_vowel = true;

            const long dur = static_cast<long>(rng.uniform(0.50, 0.70) * sample_rate);
            std::vector<double> seg;
            if (cls == kSilenceClass)
                seg.assign(dur, 0.0);
            else if (cls <= 4)
                seg = synth_vowel(cls - 1, dur, sample_rate, rng);
            else
                seg = synth_fricative(cls - 5, dur, sample_rate, rng);

            const long start = utt.audio.size();
            utt.audio.samples.insert(utt.audio.samples.end(), seg.begin(), seg.end());
            utt.labels.push_back({start, start + dur, cls});
        }
        utt.audio = peak_normalize(utt.audio, 0.5);
        corpus.push_back(std::move(utt));
    }
    return corpus;
}

AudioBuffer white_noise(long n_samples, int sample_rate, std::uint64_t seed) {
    Rng rng(seed);
    AudioBuffer buf;
    buf.sample_rate = sample_rate;
    buf.samples.resize(n_samples);
    for (long i = 0; i < n_samples; ++i) buf.samples[i] = rng.gaussian();
    return peak_normalize(buf, 0.5);
}

namespace {

// Paul Kellet's refined pink filter driven by unit-variance white noise.
std::vector<double> pink_samples(long n, Rng& rng) {
    double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
    std::vector<double> x(n);
    for (long i = 0; i < n; ++i) {
        const double w = rng.gaussian();
        b0 = 0.99886 * b0 + w * 0.0555179;
        b1 = 0.99332 * b1 + w * 0.0750759;
        b2 = 0.96900 * b2 + w * 0.1538520;
        b3 = 0.86650 * b3 + w * 0.3104856;
        b4 = 0.55000 * b4 + w * 0.5329522;
        b5 = -0.7616 * b5 - w * 0.0168980;
        x[i] = (b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362) * 0.11;
        b6 = w * 0.115926;
    }
    return x;
}

} // namespace

AudioBuffer pink_noise(long n_samples, int sample_rate, std::uint64_t seed) {
    Rng rng(seed);
    AudioBuffer buf;
    buf.sample_rate = sample_rate;
    buf.samples = pink_samples(n_samples, rng);
    return peak_normalize(buf, 0.5);
}

AudioBuffer modulated_pink_noise(long n_samples, int sample_rate, std::uint64_t seed) {
    Rng rng(seed);
    AudioBuffer buf;
    buf.sample_rate = sample_rate;
    buf.samples = pink_samples(n_samples, rng);
    const double mod_hz = 0.5, depth_db = 5.0;
    for (long i = 0; i < n_samples; ++i) {
        const double g = std::pow(10.0, depth_db * std::sin(kTwoPi * mod_hz * i / sample_rate) / 20.0);
        buf.samples[i] *= g;
    }
    return peak_normalize(buf, 0.5);
}

void write_corpus(const std::string& dir, const std::vector<AnnotatedUtterance>& utts,
                  WavEncoding enc) {
    fs::create_directories(dir);
    char name[32];
    for (size_t i = 0; i < utts.size(); ++i) {
        std::snprintf(name, sizeof(name), "utt%04zu", i);
        write_wav(dir + "/" + name + ".wav", utts[i].audio, enc);
        write_annotations(dir + "/" + name + ".phn", utts[i].labels);
    }
}

std::vector<AnnotatedUtterance> read_corpus(const std::string& dir) {
    if (!fs::is_directory(dir)) throw Error(Err::io, "corpus directory not found: " + dir);
    std::vector<std::string> stems;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".wav") stems.push_back(entry.path().stem().string());
    std::sort(stems.begin(), stems.end());
    if (stems.empty()) throw Error(Err::io, "no .wav files in " + dir);

    std::vector<AnnotatedUtterance> utts;
    for (const auto& stem : stems) {
        AnnotatedUtterance u;
        u.audio = read_wav(dir + "/" + stem + ".wav");
        const std::string phn = dir + "/" + stem + ".phn";
        if (fs::exists(phn)) u.labels = read_annotations(phn);
        utts.push_back(std::move(u));
    }
    return utts;
}

} // namespace mosie
