#include "neuroadapt/epoch.hpp"

#include "neuroadapt/dsp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace neuroadapt {

void validate_epoch(const Epoch& e) {
  if (e.samples.size() != static_cast<std::size_t>(kChannels * kSamples)) {
    throw std::invalid_argument("trial " + std::to_string(e.trial_id) + ": epoch must be 64 x 250, got " +
                                std::to_string(e.samples.size()) + " samples");
  }
  for (double v : e.samples) {
    if (!std::isfinite(v)) throw std::invalid_argument("trial " + std::to_string(e.trial_id) + ": non-finite sample");
  }
  if (!is_valid(e.condition)) throw std::invalid_argument("trial " + std::to_string(e.trial_id) + ": invalid condition");
}

Epoch filter_epoch(const Epoch& e) {
  validate_epoch(e);
  Epoch out = e;
  for (int ch = 0; ch < kChannels; ++ch) {
    const auto filtered = bandpass_fft_padded(e.channel(ch), kSampleRate, kBandLoHz, kBandHiHz, kSamples - 1);
    std::copy(filtered.begin(), filtered.end(), out.channel(ch).begin());
  }
  return out;
}

FeatureMatrix featurize(const Epoch& e) {
  if (e.samples.size() != static_cast<std::size_t>(kChannels * kSamples)) {
    throw std::invalid_argument("trial " + std::to_string(e.trial_id) + ": epoch must be 64 x 250");
  }
  FeatureMatrix fm;
  for (int ch = 0; ch < kChannels; ++ch) {
    std::array<double, kWindows> means{};
    for (int w = 0; w < kWindows; ++w) {
      const auto [b, end] = window_samples(w);
      double sum = 0.0;
      for (int s = b; s < end; ++s) sum += e.at(ch, s);
      means[static_cast<std::size_t>(w)] = sum / (end - b);
    }
    for (int w = kDroppedWindows; w < kWindows; ++w) {
      fm.at(ch, w - kDroppedWindows) = means[static_cast<std::size_t>(w)] - means[0];
    }
  }
  return fm;
}

std::vector<bool> amplitude_reject(std::span<const Epoch> epochs, double threshold_uv) {
  std::vector<bool> mask(epochs.size(), false);
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    for (double v : epochs[i].samples) {
      if (std::abs(v) > threshold_uv) {
        mask[i] = true;
        break;
      }
    }
  }
  return mask;
}

}  // namespace neuroadapt
