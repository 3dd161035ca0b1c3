#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mosie/audio.hpp"

namespace mosie {

// Synthetic phone-annotated corpus: desk-scale stand-in for a licensed
// phone-labelled database. Eight classes: silence, four vowel-like harmonic
// tones with distinct formant envelopes, three fricative-like noise bands.
inline constexpr int kSyntheticClasses = 8;
inline constexpr int kSilenceClass = 0;

std::vector<AnnotatedUtterance> generate_synthetic_corpus(int n_utts, std::uint64_t seed);

AudioBuffer white_noise(long n_samples, int sample_rate, std::uint64_t seed);
AudioBuffer pink_noise(long n_samples, int sample_rate, std::uint64_t seed);
// Pink noise with a slow sinusoidal level modulation (+-5 dB at 0.5 Hz).
AudioBuffer modulated_pink_noise(long n_samples, int sample_rate, std::uint64_t seed);

// Corpus directory layout: uttNNNN.wav plus uttNNNN.phn per utterance.
void write_corpus(const std::string& dir, const std::vector<AnnotatedUtterance>& utts,
                  WavEncoding enc = WavEncoding::float32);
std::vector<AnnotatedUtterance> read_corpus(const std::string& dir);

} // namespace mosie
