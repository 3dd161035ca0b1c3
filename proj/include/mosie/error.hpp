#pragma once

#include <stdexcept>
#include <string>

namespace mosie {

// Error categories; grouped into CLI exit codes by exit_code().
enum class Err {
    usage,              // bad arguments / config
    io,                 // file not found, unreadable, short read
    unsupported_format, // WAV encoding we do not handle
    multichannel,       // more than one channel
    truncated_file,     // header promises more data than present
    rate_mismatch,      // sample rate differs from pipeline config
    noise_too_short,    // noise cannot cover the speech signal
    degenerate_input,   // e.g. all-zero signal where a scale is needed
    geometry,           // matrix / spectrogram / model dimension mismatch
    model,              // model file malformed or missing fields
    domain,             // argument outside a function's domain
    range,              // result not representable (overflow range)
    numeric,            // non-finite value where finite required
};

class Error : public std::runtime_error {
public:
    Error(Err code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Err code() const { return code_; }

private:
    Err code_;
};

// Exit codes: 0 success, 1 usage, 2 I/O, 3 model/geometry, 4 numeric failure.
inline int exit_code(Err e) {
    switch (e) {
        case Err::usage:
            return 1;
        case Err::io:
        case Err::unsupported_format:
        case Err::multichannel:
        case Err::truncated_file:
            return 2;
        case Err::rate_mismatch:
        case Err::noise_too_short:
        case Err::geometry:
        case Err::model:
            return 3;
        default:
            return 4;
    }
}

} // namespace mosie
