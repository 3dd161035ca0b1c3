#include "mosie/stft.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>

namespace mosie {

namespace {

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

void validate(const StftConfig& cfg) {
    if (cfg.frame_len <= 0 || cfg.frame_len % 2 != 0)
        throw Error(Err::geometry, "stft: frame_len must be positive and even");
    if (cfg.hop != cfg.frame_len / 2)
        throw Error(Err::geometry, "stft: hop must equal frame_len/2");
    if (cfg.fft_size != cfg.frame_len)
        throw Error(Err::geometry, "stft: fft_size must equal frame_len");
}

} // namespace

RealFft::RealFft(int n) : n_(n) {
    real_buf_ = fftw_alloc_real(n);
    cplx_buf_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(plan_mutex()); // fftw planning is not thread-safe
    fwd_ = fftw_plan_dft_r2c_1d(n, real_buf_, static_cast<fftw_complex*>(cplx_buf_), FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(n, static_cast<fftw_complex*>(cplx_buf_), real_buf_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(inv_));
    fftw_free(real_buf_);
    fftw_free(cplx_buf_);
}

void RealFft::forward(const double* in, std::complex<double>* out) {
    std::memcpy(real_buf_, in, sizeof(double) * n_);
    fftw_execute(static_cast<fftw_plan>(fwd_));
    std::memcpy(out, cplx_buf_, sizeof(std::complex<double>) * (n_ / 2 + 1));
}

void RealFft::inverse(const std::complex<double>* in, double* out) {
    std::memcpy(cplx_buf_, in, sizeof(std::complex<double>) * (n_ / 2 + 1));
    fftw_execute(static_cast<fftw_plan>(inv_));
    const double scale = 1.0 / n_;
    for (int i = 0; i < n_; ++i) out[i] = real_buf_[i] * scale;
}

std::vector<double> sqrt_hann_window(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i)
        w[i] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * M_PI * i / n));
    return w;
}

Spectrogram analyze(const AudioBuffer& buf, const StftConfig& cfg) {
    validate(cfg);
    if (buf.samples.empty()) throw Error(Err::degenerate_input, "analyze: empty buffer");
    if (buf.sample_rate != cfg.sample_rate)
        throw Error(Err::rate_mismatch, "analyze: buffer sample rate differs from config");

    const long n = buf.size();
    const long frames = (n + cfg.hop - 1) / cfg.hop;
    const int bins = cfg.bins();
    const auto window = sqrt_hann_window(cfg.frame_len);

    Spectrogram spec;
    spec.config = cfg;
    spec.origin_len = n;
    spec.coeffs.resize(bins, frames);

    RealFft fft(cfg.fft_size);
    std::vector<double> seg(cfg.frame_len);
    std::vector<std::complex<double>> out(bins);
    for (long l = 0; l < frames; ++l) {
        const long start = l * cfg.hop;
        for (int i = 0; i < cfg.frame_len; ++i) {
            const long idx = start + i;
            seg[i] = idx < n ? buf.samples[idx] * window[i] : 0.0;
        }
        fft.forward(seg.data(), out.data());
        for (int k = 0; k < bins; ++k) spec.coeffs(k, l) = out[k];
    }
    return spec;
}

AudioBuffer synthesize(const Spectrogram& spec) {
    const StftConfig& cfg = spec.config;
    validate(cfg);
    if (spec.bins() != cfg.bins())
        throw Error(Err::geometry, "synthesize: bin count does not match config");
    if (spec.origin_len <= 0 || spec.frames() <= 0)
        throw Error(Err::geometry, "synthesize: empty spectrogram");

    const auto window = sqrt_hann_window(cfg.frame_len);
    const long frames = spec.frames();

    AudioBuffer out;
    out.sample_rate = cfg.sample_rate;
    out.samples.assign(spec.origin_len, 0.0);

    RealFft fft(cfg.fft_size);
    std::vector<std::complex<double>> col(spec.bins());
    std::vector<double> seg(cfg.frame_len);
    for (long l = 0; l < frames; ++l) {
        for (int k = 0; k < spec.bins(); ++k) col[k] = spec.coeffs(k, l);
        fft.inverse(col.data(), seg.data());
        const long start = l * cfg.hop;
        const long stop = std::min<long>(start + cfg.frame_len, spec.origin_len);
        for (long i = start; i < stop; ++i) out.samples[i] += seg[i - start] * window[i - start];
    }
    return out;
}

Eigen::MatrixXd power_spectrum(const Spectrogram& spec) {
    return spec.coeffs.array().abs2();
}

void dump_spectrogram_tsv(const std::string& path, const Spectrogram& spec) {
    std::ofstream f(path);
    if (!f) throw Error(Err::io, "cannot write " + path);
    f << "bin\tframe\tre\tim\n";
    char line[96];
    for (long l = 0; l < spec.frames(); ++l)
        for (int k = 0; k < spec.bins(); ++k) {
            std::snprintf(line, sizeof(line), "%d\t%ld\t%.9g\t%.9g\n", k, l,
                          spec.coeffs(k, l).real(), spec.coeffs(k, l).imag());
            f << line;
        }
}

} // namespace mosie
