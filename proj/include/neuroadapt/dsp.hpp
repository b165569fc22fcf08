#pragma once

#include <span>
#include <vector>

namespace neuroadapt {

// Brick-wall band-pass via the real FFT: forward transform, zero every bin
// whose frequency lies strictly outside [lo_hz, hi_hz], inverse transform.
// DC is removed whenever lo_hz > 0. Output has the input's length.
//
// Throws std::invalid_argument on non-finite samples, fewer than two
// samples, lo_hz < 0, lo_hz >= hi_hz, or hi_hz >= fs / 2.
std::vector<double> bandpass_fft(std::span<const double> signal, double fs, double lo_hz, double hi_hz);

// Same filter applied to a mirror-padded copy (pad samples reflected on each
// side, pad < signal length), keeping only the original span. Reduces the
// wrap-around edge artifacts of the circular brick-wall filter.
std::vector<double> bandpass_fft_padded(std::span<const double> signal, double fs, double lo_hz,
                                        double hi_hz, std::size_t pad);

}  // namespace neuroadapt
