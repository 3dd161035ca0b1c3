#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "mosie/audio.hpp"

namespace mosie {

struct StftConfig {
    int frame_len = 512; // 32 ms at 16 kHz
    int hop = 256;       // 50 % overlap
    int fft_size = 512;
    int sample_rate = 16000;

    int bins() const { return fft_size / 2 + 1; }
};

// One-sided complex STFT. Frame l covers samples [l*hop, l*hop + frame_len),
// zero-padded at the tail so every input sample is covered.
struct Spectrogram {
    Eigen::MatrixXcd coeffs; // bins x frames
    StftConfig config;
    long origin_len = 0;

    int bins() const { return static_cast<int>(coeffs.rows()); }
    long frames() const { return coeffs.cols(); }
};

// fftw wrapper; one instance per thread (forward/inverse reuse internal buffers).
class RealFft {
public:
    explicit RealFft(int n);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    int size() const { return n_; }
    void forward(const double* in, std::complex<double>* out);  // out has n/2+1 entries
    void inverse(const std::complex<double>* in, double* out);  // scaled by 1/n

private:
    int n_;
    void* fwd_;
    void* inv_;
    double* real_buf_;
    void* cplx_buf_;
};

// Periodic Hann under the square root; exact constant overlap-add at 50 %.
std::vector<double> sqrt_hann_window(int n);

Spectrogram analyze(const AudioBuffer& buf, const StftConfig& cfg);
AudioBuffer synthesize(const Spectrogram& spec);

Eigen::MatrixXd power_spectrum(const Spectrogram& spec); // |Y|^2, bins x frames

// Debug dump, one row per coefficient: bin<TAB>frame<TAB>re<TAB>im
void dump_spectrogram_tsv(const std::string& path, const Spectrogram& spec);

} // namespace mosie
