#pragma once

#include <cstdint>
#include <vector>

namespace sphcnn {

struct SftTiming {
  int bandwidth = 0;
  std::vector<double> direct_seconds;
  std::vector<double> sepvar_seconds;
  /// Largest |direct - sepvar| coefficient difference seen.
  double max_deviation = 0.0;

  double median_direct() const;
  double median_sepvar() const;
};

/// Times both forward transforms on the same random signals, alternating
/// them per repetition. The harmonic table is built before timing starts.
SftTiming time_sft(int b, int reps, std::uint64_t seed = 0);

double median(std::vector<double> values);

}  // namespace sphcnn
