#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>

#include "mosie/audio.hpp"
#include "mosie/corpus.hpp"
#include "mosie/rng.hpp"
#include "mosie/stft.hpp"

using namespace mosie;

static std::string tmp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

TEST_CASE("wav round trip within 16-bit quantization") {
    AudioBuffer buf;
    buf.sample_rate = 16000;
    Rng rng(7);
    buf.samples.resize(4000);
    for (auto& s : buf.samples) s = rng.uniform(-0.95, 0.95);
    const auto path = tmp_path("roundtrip.wav");
    write_wav(path, buf, WavEncoding::pcm16);
    const AudioBuffer back = read_wav(path);
    REQUIRE(back.size() == buf.size());
    CHECK(back.sample_rate == 16000);
    double max_err = 0.0;
    for (long i = 0; i < buf.size(); ++i)
        max_err = std::max(max_err, std::abs(back.samples[i] - buf.samples[i]));
    CHECK(max_err <= std::pow(2.0, -15.0));
}

TEST_CASE("wav float32 round trip is near exact") {
    AudioBuffer buf;
    buf.sample_rate = 16000;
    Rng rng(8);
    buf.samples.resize(1000);
    for (auto& s : buf.samples) s = rng.uniform(-1.0, 1.0);
    const auto path = tmp_path("roundtrip_f32.wav");
    write_wav(path, buf, WavEncoding::float32);
    const AudioBuffer back = read_wav(path);
    for (long i = 0; i < buf.size(); ++i)
        CHECK(std::abs(back.samples[i] - buf.samples[i]) <= 1e-7);
}

TEST_CASE("silence file reads back as zeros") {
    AudioBuffer buf;
    buf.sample_rate = 16000;
    buf.samples.assign(16000, 0.0);
    const auto path = tmp_path("silence.wav");
    write_wav(path, buf);
    const AudioBuffer back = read_wav(path);
    REQUIRE(back.size() == 16000);
    for (double s : back.samples) CHECK(s == 0.0);
}

TEST_CASE("stereo file rejected with multichannel error") {
    // hand-built 2-channel header
    const auto path = tmp_path("stereo.wav");
    {
        AudioBuffer buf;
        buf.samples.assign(100, 0.1);
        write_wav(path, buf);
        // patch the channel count field (offset 22)
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(22);
        const char two[2] = {2, 0};
        f.write(two, 2);
    }
    try {
        read_wav(path);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == Err::multichannel);
    }
}

TEST_CASE("truncated data chunk detected") {
    const auto path = tmp_path("trunc.wav");
    {
        AudioBuffer buf;
        buf.samples.assign(1000, 0.25);
        write_wav(path, buf);
        std::filesystem::resize_file(path, 500);
    }
    try {
        read_wav(path);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == Err::truncated_file);
    }
}

TEST_CASE("missing file is an io error") {
    try {
        read_wav(tmp_path("no_such_file_here.wav"));
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == Err::io);
    }
}

TEST_CASE("peak_normalize closed forms") {
    AudioBuffer buf;
    buf.samples = {0.5, -0.25};
    auto out = peak_normalize(buf, 1.0);
    CHECK(out.samples[0] == doctest::Approx(1.0));
    CHECK(out.samples[1] == doctest::Approx(-0.5));

    // identity when already at target
    auto same = peak_normalize(out, 1.0);
    CHECK(same.samples[0] == 1.0);
    CHECK(same.samples[1] == -0.5);
}

TEST_CASE("peak_normalize random signal hits target and is idempotent") {
    AudioBuffer buf;
    Rng rng(3);
    buf.samples.resize(2048);
    for (auto& s : buf.samples) s = rng.gaussian();
    auto out = peak_normalize(buf, 0.9);
    double peak = 0.0;
    for (double s : out.samples) peak = std::max(peak, std::abs(s));
    CHECK(std::abs(peak - 0.9) <= 1e-12);

    auto out2 = peak_normalize(out, 0.9);
    for (long i = 0; i < out.size(); ++i)
        CHECK(std::abs(out2.samples[i] - out.samples[i]) <= 1e-15);
}

TEST_CASE("peak_normalize rejects all-zero input") {
    AudioBuffer buf;
    buf.samples.assign(100, 0.0);
    try {
        peak_normalize(buf, 1.0);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == Err::degenerate_input);
    }
}

TEST_CASE("mix_at_snr equal signals at 0 dB gives unit gain") {
    AudioBuffer s;
    Rng rng(11);
    s.samples.resize(8000);
    for (auto& v : s.samples) v = rng.gaussian() * 0.1;
    MixSpec spec;
    spec.snr_db = 0.0;
    spec.noise_offset = 0;
    const auto mix = mix_at_snr(s, s, spec);
    CHECK(mix.noise_gain == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mix_at_snr huge snr yields vanishing noise") {
    AudioBuffer s, n;
    Rng rng(12);
    s.samples.resize(8000);
    n.samples.resize(8000);
    for (auto& v : s.samples) v = rng.gaussian() * 0.1;
    for (auto& v : n.samples) v = rng.gaussian() * 0.1;
    MixSpec spec;
    spec.snr_db = 300.0;
    spec.noise_offset = 0;
    const auto mix = mix_at_snr(s, n, spec);
    for (double v : mix.scaled_noise.samples) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("mix_at_snr active-region snr measured back at 5 dB") {
    // synthetic vowel with leading/trailing silence, so active frames matter
    auto corpus = generate_synthetic_corpus(1, 99);
    AudioBuffer speech = corpus[0].audio;
    AudioBuffer noise = white_noise(speech.size() + 50000, 16000, 5);
    MixSpec spec;
    spec.snr_db = 5.0;
    spec.seed = 42;
    const auto mix = mix_at_snr(speech, noise, spec);

    // recompute the SNR over the same active region definition
    const int frame = 512;
    std::vector<double> energies;
    for (long st = 0; st < speech.size(); st += frame) {
        const long en = std::min<long>(st + frame, speech.size());
        double e = 0;
        for (long i = st; i < en; ++i) e += speech.samples[i] * speech.samples[i];
        energies.push_back(e);
    }
    const double emax = *std::max_element(energies.begin(), energies.end());
    double ps = 0, pn = 0;
    for (size_t fi = 0; fi < energies.size(); ++fi) {
        if (energies[fi] < emax * 1e-4) continue;
        const long st = static_cast<long>(fi) * frame;
        const long en = std::min<long>(st + frame, speech.size());
        for (long i = st; i < en; ++i) {
            ps += speech.samples[i] * speech.samples[i];
            pn += mix.scaled_noise.samples[i] * mix.scaled_noise.samples[i];
        }
    }
    const double snr = 10.0 * std::log10(ps / pn);
    CHECK(std::abs(snr - 5.0) <= 0.01);

    // exact decomposition: recomputing the sum reproduces noisy bit for bit
    for (long i = 0; i < speech.size(); ++i)
        CHECK(mix.noisy.samples[i] == speech.samples[i] + mix.scaled_noise.samples[i]);
}

TEST_CASE("mix_at_snr error paths") {
    AudioBuffer s, n;
    s.samples.assign(1000, 0.1);
    n.samples.assign(500, 0.1);
    try {
        mix_at_snr(s, n, MixSpec{});
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == Err::noise_too_short);
    }
    n.samples.assign(2000, 0.1);
    n.sample_rate = 8000;
    try {
        mix_at_snr(s, n, MixSpec{});
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == Err::rate_mismatch);
    }
}

TEST_CASE("synthetic corpus deterministic and well formed") {
    const auto a = generate_synthetic_corpus(10, 1234);
    const auto b = generate_synthetic_corpus(10, 1234);
    REQUIRE(a.size() == 10);
    for (size_t u = 0; u < a.size(); ++u) {
        CHECK(a[u].audio.samples == b[u].audio.samples);
        REQUIRE(!a[u].labels.empty());
        long prev_end = 0;
        for (const auto& l : a[u].labels) {
            CHECK(l.start_sample == prev_end); // contiguous, non-overlapping
            CHECK(l.end_sample <= a[u].audio.size());
            CHECK(l.phone_id >= 0);
            CHECK(l.phone_id < kSyntheticClasses);
            prev_end = l.end_sample;
        }
        CHECK(a[u].audio.duration_s() > 2.5); // long enough for the metric init period
    }
}

TEST_CASE("vowel segments have spectral peaks on the harmonic grid") {
    const auto corpus = generate_synthetic_corpus(4, 77);
    int checked = 0;
    for (const auto& utt : corpus) {
        for (const auto& l : utt.labels) {
            if (l.phone_id < 1 || l.phone_id > 4) continue;
            const long n = l.end_sample - l.start_sample;
            const long m = n - (n % 2);
            std::vector<double> seg(utt.audio.samples.begin() + l.start_sample,
                                    utt.audio.samples.begin() + l.start_sample + m);
            RealFft fft(static_cast<int>(m));
            std::vector<std::complex<double>> spec(m / 2 + 1);
            fft.forward(seg.data(), spec.data());
            long kmax = 1;
            double best = 0;
            for (long k = 1; k < static_cast<long>(spec.size()); ++k)
                if (std::abs(spec[k]) > best) {
                    best = std::abs(spec[k]);
                    kmax = k;
                }

            // f0 oracle: autocorrelation peak with parabolic refinement; the
            // smallest strong peak is the period (avoids lag multiples)
            std::vector<double> r(182, 0.0);
            for (int lag = 60; lag <= 181; ++lag)
                for (long i = 0; i + lag < m; ++i) r[lag] += seg[i] * seg[i + lag];
            const double rmax = *std::max_element(r.begin() + 67, r.begin() + 172);
            int lag0 = 67;
            while (r[lag0] < 0.95 * rmax) ++lag0;
            const double denom = r[lag0 - 1] - 2 * r[lag0] + r[lag0 + 1];
            const double delta = denom != 0 ? 0.5 * (r[lag0 - 1] - r[lag0 + 1]) / denom : 0.0;
            const double f0 = 16000.0 / (lag0 + delta);

            const double bin_hz = 16000.0 / m;
            const double f_peak = kmax * bin_hz;
            const double mult = std::round(f_peak / f0);
            CHECK(std::abs(f_peak - mult * f0) <= bin_hz);
            ++checked;
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("annotation file round trip") {
    std::vector<PhoneLabel> labels = {{0, 100, 3}, {100, 250, 0}, {250, 400, 7}};
    const auto path = tmp_path("ann.phn");
    write_annotations(path, labels);
    const auto back = read_annotations(path);
    REQUIRE(back.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(back[i].start_sample == labels[i].start_sample);
        CHECK(back[i].end_sample == labels[i].end_sample);
        CHECK(back[i].phone_id == labels[i].phone_id);
    }
}

TEST_CASE("noise generators deterministic, pink spectrum slopes down") {
    const auto p1 = pink_noise(32768, 16000, 5);
    const auto p2 = pink_noise(32768, 16000, 5);
    CHECK(p1.samples == p2.samples);

    RealFft fft(32768);
    std::vector<std::complex<double>> spec(16385);
    fft.forward(p1.samples.data(), spec.data());
    auto band_power = [&](double lo, double hi) {
        double e = 0;
        int cnt = 0;
        for (long k = 1; k < 16385; ++k) {
            const double f = k * 16000.0 / 32768.0;
            if (f >= lo && f < hi) {
                e += std::norm(spec[k]);
                ++cnt;
            }
        }
        return e / cnt;
    };
    // ~3 dB per octave: power density at 400 Hz well above 3200 Hz
    const double low = band_power(300, 500), high = band_power(2800, 3600);
    CHECK(10 * std::log10(low / high) > 6.0);
}
