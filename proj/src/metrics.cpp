#include "mosie/metrics.hpp"

#include <cmath>

#include "mosie/estimator.hpp"
#include <vector>

namespace mosie {

namespace {

struct Segment {
    long start;
    long len;
};

std::vector<Segment> segments(long n, int sample_rate, const SegSnrConfig& cfg) {
    const long len = std::max<long>(1, std::lround(cfg.seg_len_s * sample_rate));
    const long hop = std::max<long>(1, std::lround(len * (1.0 - cfg.overlap)));
    const long init = std::lround(cfg.init_period_s * sample_rate);
    std::vector<Segment> out;
    for (long start = 0; start + len <= n; start += hop)
        if (start >= init) out.push_back({start, len});
    return out;
}

double energy(const AudioBuffer& x, const Segment& s) {
    double e = 0;
    for (long i = s.start; i < s.start + s.len; ++i) e += x.samples[i] * x.samples[i];
    return e;
}

} // namespace

double seg_snr(const AudioBuffer& reference, const AudioBuffer& test, const SegSnrConfig& cfg) {
    if (reference.size() != test.size())
        throw Error(Err::geometry, "seg_snr: signal lengths differ");
    const auto segs = segments(reference.size(), reference.sample_rate, cfg);
    if (segs.empty())
        throw Error(Err::degenerate_input, "seg_snr: no segments after the init period");

    double emax = 0;
    for (const auto& s : segs) emax = std::max(emax, energy(reference, s));
    if (emax <= 0.0) throw Error(Err::degenerate_input, "seg_snr: silent reference");
    const double gate = emax * std::pow(10.0, -cfg.active_threshold_db / 10.0);

    double acc = 0;
    long count = 0;
    for (const auto& s : segs) {
        const double eref = energy(reference, s);
        if (eref < gate) continue;
        double eerr = 0;
        for (long i = s.start; i < s.start + s.len; ++i) {
            const double d = reference.samples[i] - test.samples[i];
            eerr += d * d;
        }
        const double snr =
            eerr == 0.0 ? cfg.clamp_hi_db : 10.0 * std::log10(eref / eerr);
        acc += std::clamp(snr, cfg.clamp_lo_db, cfg.clamp_hi_db);
        ++count;
    }
    if (count == 0) throw Error(Err::degenerate_input, "seg_snr: no active segments");
    return acc / count;
}

ShadowComponents shadow_filter_components(const Spectrogram& clean,
                                          const Spectrogram& scaled_noise,
                                          const Eigen::MatrixXd& gains) {
    if (clean.bins() != scaled_noise.bins() || clean.frames() != scaled_noise.frames() ||
        clean.origin_len != scaled_noise.origin_len)
        throw Error(Err::geometry, "shadow_filter_components: spectrogram geometry mismatch");
    ShadowComponents out;
    out.filtered_speech = synthesize(apply_gains(clean, gains));
    out.filtered_noise = synthesize(apply_gains(scaled_noise, gains));
    return out;
}

double seg_ssnr(const AudioBuffer& clean, const AudioBuffer& filtered_speech,
                const SegSnrConfig& cfg) {
    return seg_snr(clean, filtered_speech, cfg);
}

double seg_nr(const AudioBuffer& scaled_noise, const AudioBuffer& filtered_noise,
              const SegSnrConfig& cfg) {
    if (scaled_noise.size() != filtered_noise.size())
        throw Error(Err::geometry, "seg_nr: signal lengths differ");
    const auto segs = segments(scaled_noise.size(), scaled_noise.sample_rate, cfg);
    if (segs.empty())
        throw Error(Err::degenerate_input, "seg_nr: no segments after the init period");
    double acc = 0;
    long count = 0;
    for (const auto& s : segs) {
        const double before = energy(scaled_noise, s);
        const double after = energy(filtered_noise, s);
        double nr;
        if (after == 0.0)
            nr = cfg.clamp_hi_db;
        else if (before == 0.0)
            nr = 0.0;
        else
            nr = 10.0 * std::log10(before / after);
        acc += std::clamp(nr, 0.0, cfg.clamp_hi_db);
        ++count;
    }
    return acc / count;
}

} // namespace mosie
