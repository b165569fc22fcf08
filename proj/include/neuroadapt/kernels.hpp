#pragma once

#include "neuroadapt/epoch.hpp"

#include <array>
#include <span>
#include <vector>

namespace neuroadapt {

enum class Execution { serial, parallel };

// Data-parallel kernels. `serial` holds the plain reference loops; `omp`
// the OpenMP versions. Both produce bit-identical results (each output
// element is computed by the same arithmetic, only the loop is split).
namespace kernels::serial {
std::vector<Epoch> filter_epochs(std::span<const Epoch> epochs);
std::vector<FeatureMatrix> featurize_batch(std::span<const Epoch> epochs);
// |Welch t| per feature over the listed rows; labels are 0/1.
std::array<double, kFeatures> abs_tstats(std::span<const FeatureMatrix> rows, std::span<const int> labels);
}  // namespace kernels::serial

namespace kernels::omp {
std::vector<Epoch> filter_epochs(std::span<const Epoch> epochs);
std::vector<FeatureMatrix> featurize_batch(std::span<const Epoch> epochs);
std::array<double, kFeatures> abs_tstats(std::span<const FeatureMatrix> rows, std::span<const int> labels);
}  // namespace kernels::omp

// Welch two-sample t of a minus b. Zero when both variances vanish and the
// means agree; +/-inf when they vanish and the means differ.
double welch_t(std::span<const double> a, std::span<const double> b);

std::vector<Epoch> filter_epochs(std::span<const Epoch> epochs, Execution exec);
std::vector<FeatureMatrix> featurize_batch(std::span<const Epoch> epochs, Execution exec);

// Set the OpenMP team size used by the parallel kernels (<= 0: runtime default).
void set_parallelism(int threads);

}  // namespace neuroadapt
