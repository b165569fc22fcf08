#include "neuroadapt/dsp.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>

namespace neuroadapt {

namespace {

struct PlanPair {
  fftw_plan forward{nullptr};
  fftw_plan inverse{nullptr};
};

// FFTW planning is not thread-safe; execution through the new-array
// interface is. Plans are created once per length and never destroyed.
PlanPair plans_for(int n) {
  static std::mutex mu;
  static std::map<int, PlanPair> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  std::vector<double> real(static_cast<std::size_t>(n));
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(n / 2 + 1));
  auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_1d(n, real.data(), cplx, flags);
  p.inverse = fftw_plan_dft_c2r_1d(n, cplx, real.data(), flags);
  if (!p.forward || !p.inverse) throw std::runtime_error("fftw planning failed");
  cache.emplace(n, p);
  return p;
}

void check_band(std::size_t n, double fs, double lo_hz, double hi_hz) {
  if (n < 2) throw std::invalid_argument("bandpass: need at least 2 samples");
  if (!(fs > 0.0)) throw std::invalid_argument("bandpass: sample rate must be positive");
  if (!(lo_hz >= 0.0) || !(lo_hz < hi_hz)) throw std::invalid_argument("bandpass: need 0 <= lo < hi");
  if (!(hi_hz < fs / 2.0)) throw std::invalid_argument("bandpass: hi must be below Nyquist");
}

}  // namespace

std::vector<double> bandpass_fft(std::span<const double> signal, double fs, double lo_hz, double hi_hz) {
  check_band(signal.size(), fs, lo_hz, hi_hz);
  for (double v : signal) {
    if (!std::isfinite(v)) throw std::invalid_argument("bandpass: non-finite sample");
  }

  const int n = static_cast<int>(signal.size());
  const PlanPair plans = plans_for(n);

  std::vector<double> buf(signal.begin(), signal.end());
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(n / 2 + 1));
  auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
  fftw_execute_dft_r2c(plans.forward, buf.data(), cplx);

  const double bin_hz = fs / n;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * bin_hz;
    if (f < lo_hz || f > hi_hz) spec[k] = 0.0;
  }

  fftw_execute_dft_c2r(plans.inverse, cplx, buf.data());
  const double scale = 1.0 / n;
  for (double& v : buf) v *= scale;
  return buf;
}

std::vector<double> bandpass_fft_padded(std::span<const double> signal, double fs, double lo_hz,
                                        double hi_hz, std::size_t pad) {
  const std::size_t n = signal.size();
  if (pad == 0) return bandpass_fft(signal, fs, lo_hz, hi_hz);
  if (pad >= n) throw std::invalid_argument("bandpass: pad must be shorter than the signal");

  // Reflection without repeating the edge sample: ... x2 x1 | x0 x1 ... | ...
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(signal[i]);
  ext.insert(ext.end(), signal.begin(), signal.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(signal[n - 1 - i]);

  const auto filtered = bandpass_fft(ext, fs, lo_hz, hi_hz);
  return {filtered.begin() + static_cast<std::ptrdiff_t>(pad),
          filtered.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace neuroadapt
