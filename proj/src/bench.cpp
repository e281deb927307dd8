#include "sphcnn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sphcnn/errors.hpp"
#include "sphcnn/harmonics.hpp"
#include "sphcnn/sft.hpp"
#include "sphcnn/synth.hpp"

namespace sphcnn {

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double SftTiming::median_direct() const { return median(direct_seconds); }
double SftTiming::median_sepvar() const { return median(sepvar_seconds); }

SftTiming time_sft(int b, int reps, std::uint64_t seed) {
  if (reps < 1) throw DomainError("reps must be positive");
  using clock = std::chrono::steady_clock;
  const auto table = table_for(b);
  SftTiming out;
  out.bandwidth = b;
  for (int r = 0; r < reps; ++r) {
    const auto signal = random_bandlimited_signal(b, 1, seed + r);
    auto t0 = clock::now();
    const auto d = sft_direct(signal, *table);
    auto t1 = clock::now();
    const auto s = sft_sepvar(signal, *table);
    auto t2 = clock::now();
    out.direct_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    out.sepvar_seconds.push_back(std::chrono::duration<double>(t2 - t1).count());
    for (std::size_t q = 0; q < d.coeffs().size(); ++q) {
      out.max_deviation = std::max(out.max_deviation, std::abs(d.coeffs()[q] - s.coeffs()[q]));
    }
  }
  return out;
}

}  // namespace sphcnn
