#include "mosie/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mosie/rng.hpp"

namespace mosie {

namespace {

struct ChunkHeader {
    char id[4];
    std::uint32_t size;
};

std::uint16_t rd_u16(const unsigned char* p) { return p[0] | (p[1] << 8); }
std::uint32_t rd_u32(const unsigned char* p) {
    return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24);
}

void wr_u16(std::ostream& os, std::uint16_t v) {
    char b[2] = {char(v & 0xff), char(v >> 8)};
    os.write(b, 2);
}
void wr_u32(std::ostream& os, std::uint32_t v) {
    char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char(v >> 24)};
    os.write(b, 4);
}

} // namespace

AudioBuffer read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Err::io, "cannot open " + path);

    unsigned char riff[12];
    if (!f.read(reinterpret_cast<char*>(riff), 12))
        throw Error(Err::truncated_file, path + ": short RIFF header");
    if (std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0)
        throw Error(Err::unsupported_format, path + ": not a RIFF/WAVE file");

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    std::vector<unsigned char> data;

    unsigned char ch[8];
    while (f.read(reinterpret_cast<char*>(ch), 8)) {
        const std::uint32_t size = rd_u32(ch + 4);
        if (std::memcmp(ch, "fmt ", 4) == 0) {
            std::vector<unsigned char> fmt(size);
            if (!f.read(reinterpret_cast<char*>(fmt.data()), size))
                throw Error(Err::truncated_file, path + ": short fmt chunk");
            if (size < 16) throw Error(Err::unsupported_format, path + ": fmt chunk too small");
            format = rd_u16(fmt.data());
            channels = rd_u16(fmt.data() + 2);
            rate = rd_u32(fmt.data() + 4);
            bits = rd_u16(fmt.data() + 14);
            have_fmt = true;
        } else if (std::memcmp(ch, "data", 4) == 0) {
            data.resize(size);
            f.read(reinterpret_cast<char*>(data.data()), size);
            if (static_cast<std::uint32_t>(f.gcount()) != size)
                throw Error(Err::truncated_file, path + ": data chunk shorter than declared");
            break;
        } else {
            f.seekg(size + (size & 1), std::ios::cur); // chunks are word aligned
        }
        if (size & 1) f.seekg(1, std::ios::cur);
    }

    if (!have_fmt || data.empty())
        throw Error(Err::unsupported_format, path + ": missing fmt or data chunk");
    if (channels != 1) throw Error(Err::multichannel, path + ": expected mono");

    AudioBuffer buf;
    buf.sample_rate = static_cast<int>(rate);
    if (format == 1 && bits == 16) {
        const size_t n = data.size() / 2;
        buf.samples.resize(n);
        for (size_t i = 0; i < n; ++i) {
            const std::int16_t v = static_cast<std::int16_t>(rd_u16(data.data() + 2 * i));
            buf.samples[i] = v / 32768.0;
        }
    } else if (format == 3 && bits == 32) {
        const size_t n = data.size() / 4;
        buf.samples.resize(n);
        for (size_t i = 0; i < n; ++i) {
            float v;
            std::uint32_t raw = rd_u32(data.data() + 4 * i);
            std::memcpy(&v, &raw, 4);
            if (!std::isfinite(v)) throw Error(Err::numeric, path + ": non-finite sample");
            buf.samples[i] = v;
        }
    } else {
        throw Error(Err::unsupported_format, path + ": only PCM16 and float32 supported");
    }
    return buf;
}

void write_wav(const std::string& path, const AudioBuffer& buf, WavEncoding enc) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Err::io, "cannot write " + path);

    const std::uint32_t n = static_cast<std::uint32_t>(buf.samples.size());
    const std::uint16_t bits = enc == WavEncoding::pcm16 ? 16 : 32;
    const std::uint16_t block = bits / 8;
    const std::uint32_t data_size = n * block;

    f.write("RIFF", 4);
    wr_u32(f, 36 + data_size);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    wr_u32(f, 16);
    wr_u16(f, enc == WavEncoding::pcm16 ? 1 : 3);
    wr_u16(f, 1);
    wr_u32(f, static_cast<std::uint32_t>(buf.sample_rate));
    wr_u32(f, static_cast<std::uint32_t>(buf.sample_rate) * block);
    wr_u16(f, block);
    wr_u16(f, bits);
    f.write("data", 4);
    wr_u32(f, data_size);

    if (enc == WavEncoding::pcm16) {
        for (double s : buf.samples) {
            // scale by 2^15 and clip; keeps round-trip error within one LSB
            double v = std::round(s * 32768.0);
            v = std::clamp(v, -32768.0, 32767.0);
            wr_u16(f, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
        }
    } else {
        for (double s : buf.samples) {
            const float v = static_cast<float>(s);
            std::uint32_t raw;
            std::memcpy(&raw, &v, 4);
            wr_u32(f, raw);
        }
    }
    if (!f) throw Error(Err::io, "write failed: " + path);
}

AudioBuffer peak_normalize(const AudioBuffer& buf, double target_peak) {
    double peak = 0.0;
    for (double s : buf.samples) peak = std::max(peak, std::abs(s));
    if (peak == 0.0) throw Error(Err::degenerate_input, "peak_normalize: all-zero signal");
    AudioBuffer out = buf;
    const double scale = target_peak / peak;
    for (double& s : out.samples) s *= scale;
    return out;
}

namespace {

// Sample indices belonging to frames whose energy is within threshold_db of
// the loudest frame. Non-overlapping frames; a partial tail frame counts.
std::vector<std::pair<long, long>> active_regions(const std::vector<double>& x, int frame,
                                                  double threshold_db) {
    const long n = static_cast<long>(x.size());
    std::vector<double> energy;
    for (long start = 0; start < n; start += frame) {
        const long end = std::min<long>(start + frame, n);
        double e = 0.0;
        for (long i = start; i < end; ++i) e += x[i] * x[i];
        energy.push_back(e);
    }
    const double emax = *std::max_element(energy.begin(), energy.end());
    const double thr = emax * std::pow(10.0, -threshold_db / 10.0);
    std::vector<std::pair<long, long>> regions;
    for (size_t fi = 0; fi < energy.size(); ++fi) {
        if (energy[fi] >= thr && emax > 0.0) {
            const long start = static_cast<long>(fi) * frame;
            regions.emplace_back(start, std::min<long>(start + frame, n));
        }
    }
    return regions;
}

} // namespace

MixResult mix_at_snr(const AudioBuffer& speech, const AudioBuffer& noise, const MixSpec& spec) {
    if (speech.sample_rate != noise.sample_rate)
        throw Error(Err::rate_mismatch, "mix_at_snr: sample rates differ");
    const long ls = speech.size();
    const long ln = noise.size();

    long offset = spec.noise_offset;
    if (offset < 0) {
        const long max_offset = ln - ls;
        if (max_offset < spec.min_offset)
            throw Error(Err::noise_too_short, "mix_at_snr: noise shorter than speech plus offset");
        Rng rng(spec.seed);
        offset = spec.min_offset +
                 static_cast<long>(rng.uniform_int(static_cast<std::uint64_t>(max_offset - spec.min_offset) + 1));
    }
    if (offset + ls > ln)
        throw Error(Err::noise_too_short, "mix_at_snr: noise segment out of bounds");

    const int frame = std::max(1, static_cast<int>(std::lround(spec.active_frame_s * speech.sample_rate)));
    const auto regions = active_regions(speech.samples, frame, spec.speech_active_threshold_db);

    double p_speech = 0.0, p_noise = 0.0;
    for (const auto& [a, b] : regions)
        for (long i = a; i < b; ++i) {
            p_speech += speech.samples[i] * speech.samples[i];
            const double nv = noise.samples[offset + i];
            p_noise += nv * nv;
        }
    if (p_speech == 0.0)
        throw Error(Err::degenerate_input, "mix_at_snr: speech has no energy");
    if (p_noise == 0.0)
        throw Error(Err::degenerate_input, "mix_at_snr: noise segment has no energy");

    const double gain = std::sqrt(p_speech / p_noise) * std::pow(10.0, -spec.snr_db / 20.0);
    if (!std::isfinite(gain) || gain < 0.0)
        throw Error(Err::numeric, "mix_at_snr: non-finite noise gain");

    MixResult out;
    out.noise_gain = gain;
    out.offset = offset;
    out.scaled_noise.sample_rate = speech.sample_rate;
    out.noisy.sample_rate = speech.sample_rate;
    out.scaled_noise.samples.resize(ls);
    out.noisy.samples.resize(ls);
    for (long i = 0; i < ls; ++i) {
        out.scaled_noise.samples[i] = gain * noise.samples[offset + i];
        out.noisy.samples[i] = speech.samples[i] + out.scaled_noise.samples[i];
    }
    return out;
}

std::vector<PhoneLabel> read_annotations(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(Err::io, "cannot open " + path);
    std::vector<PhoneLabel> labels;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        PhoneLabel l;
        if (std::sscanf(line.c_str(), "%ld\t%ld\t%d", &l.start_sample, &l.end_sample, &l.phone_id) != 3)
            throw Error(Err::io, path + ": malformed annotation line: " + line);
        labels.push_back(l);
    }
    return labels;
}

void write_annotations(const std::string& path, const std::vector<PhoneLabel>& labels) {
    std::ofstream f(path);
    if (!f) throw Error(Err::io, "cannot write " + path);
    for (const auto& l : labels)
        f << l.start_sample << '\t' << l.end_sample << '\t' << l.phone_id << '\n';
}

} // namespace mosie
