#pragma once

#include "neuroadapt/bandit.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace neuroadapt {

inline constexpr int kChannels = 64;
inline constexpr int kSamples = 250;          // 1 s at 250 Hz
inline constexpr double kSampleRate = 250.0;  // Hz
inline constexpr int kWindows = 12;           // 50 ms windows over 0-600 ms
inline constexpr int kDroppedWindows = 2;     // 0-50 ms (baseline) and 50-100 ms
inline constexpr int kFeatureWindows = kWindows - kDroppedWindows;
inline constexpr int kFeatures = kChannels * kFeatureWindows;

inline constexpr double kBandLoHz = 0.1;
inline constexpr double kBandHiHz = 15.0;

// Sample range [begin, end) of 50 ms window w. 50 ms is 12.5 samples, so
// window w covers floor(12.5 w) .. floor(12.5 (w + 1)) - 1, alternating
// 12 and 13 samples and tiling samples 0..149 exactly.
struct SampleRange {
  int begin;
  int end;
};
constexpr SampleRange window_samples(int w) { return {(25 * w) / 2, (25 * (w + 1)) / 2}; }

// Window index within the feature matrix (0..9) of the window starting at ms.
constexpr int feature_window_at_ms(int ms) { return ms / 50 - kDroppedWindows; }

// One post-grab EEG segment, row-major [channel][sample], microvolts.
struct Epoch {
  std::vector<double> samples = std::vector<double>(static_cast<std::size_t>(kChannels * kSamples), 0.0);
  int trial_id{0};
  ActionId condition{};
  double raw_score{0.5};
  std::optional<int> label;               // explicit class label, if known
  std::optional<double> placement_error;  // behavioural scalar for Tukey rejection

  double& at(int ch, int s) { return samples[static_cast<std::size_t>(ch * kSamples + s)]; }
  double at(int ch, int s) const { return samples[static_cast<std::size_t>(ch * kSamples + s)]; }
  std::span<double> channel(int ch) { return {samples.data() + static_cast<std::ptrdiff_t>(ch) * kSamples, kSamples}; }
  std::span<const double> channel(int ch) const {
    return {samples.data() + static_cast<std::ptrdiff_t>(ch) * kSamples, kSamples};
  }
};

// Throws std::invalid_argument (mentioning trial_id) on wrong size or
// non-finite samples.
void validate_epoch(const Epoch& e);

struct FeatureIndex {
  int channel;
  int window;  // 0..9, i.e. 100-150 ms .. 550-600 ms

  constexpr int flat() const { return channel * kFeatureWindows + window; }
  static constexpr FeatureIndex from_flat(int i) { return {i / kFeatureWindows, i % kFeatureWindows}; }
  constexpr bool operator==(const FeatureIndex&) const = default;
};

// 64 x 10 windowed means, baseline-corrected, row-major [channel][window].
struct FeatureMatrix {
  std::array<double, kFeatures> values{};

  double& at(int ch, int w) { return values[static_cast<std::size_t>(ch * kFeatureWindows + w)]; }
  double at(int ch, int w) const { return values[static_cast<std::size_t>(ch * kFeatureWindows + w)]; }
  double operator[](FeatureIndex f) const { return values[static_cast<std::size_t>(f.flat())]; }
};

// Band-pass every channel (0.1-15 Hz) on a mirror-padded buffer.
Epoch filter_epoch(const Epoch& e);

// Window means over 0-600 ms, minus the 0-50 ms window, first two windows
// dropped. Linear in the epoch samples.
FeatureMatrix featurize(const Epoch& e);

// true = rejected (some |sample| > threshold_uv).
std::vector<bool> amplitude_reject(std::span<const Epoch> epochs, double threshold_uv = 100.0);

}  // namespace neuroadapt
