#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mosie/error.hpp"

namespace mosie {

struct AudioBuffer {
    std::vector<double> samples; // nominal range [-1, 1]
    int sample_rate = 16000;

    long size() const { return static_cast<long>(samples.size()); }
    double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

enum class WavEncoding { pcm16, float32 };

// Mono RIFF/WAVE, PCM 16-bit or IEEE float 32-bit.
AudioBuffer read_wav(const std::string& path);
void write_wav(const std::string& path, const AudioBuffer& buf, WavEncoding enc = WavEncoding::pcm16);

// Scales so that max |sample| == target_peak. All-zero input is an error.
AudioBuffer peak_normalize(const AudioBuffer& buf, double target_peak);

struct MixSpec {
    double snr_db = 5.0;
    long noise_offset = -1;  // >= 0: fixed sample offset into the noise; < 0: seeded random
    std::uint64_t seed = 0;
    long min_offset = 0;     // random offsets drawn from [min_offset, len(noise) - len(speech)]
    double speech_active_threshold_db = 40.0; // frame active if within this of the max frame energy
    double active_frame_s = 0.032;
};

struct MixResult {
    AudioBuffer noisy;        // speech + scaled_noise, elementwise
    AudioBuffer scaled_noise; // the noise segment after SNR scaling
    double noise_gain = 0.0;
    long offset = 0;
};

// SNR calibrated over speech-active samples only.
MixResult mix_at_snr(const AudioBuffer& speech, const AudioBuffer& noise, const MixSpec& spec);

struct PhoneLabel {
    long start_sample = 0;
    long end_sample = 0; // exclusive
    int phone_id = 0;
};

struct AnnotatedUtterance {
    AudioBuffer audio;
    std::vector<PhoneLabel> labels;
};

// Annotation files: one line per phone, start<TAB>end<TAB>phone_id.
std::vector<PhoneLabel> read_annotations(const std::string& path);
void write_annotations(const std::string& path, const std::vector<PhoneLabel>& labels);

} // namespace mosie
