#include "sphcnn/spectral_ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sphcnn/errors.hpp"

namespace sphcnn {

using std::numbers::pi;

ZonalFilterSpec ZonalFilterSpec::full(std::vector<double> coeffs) {
  ZonalFilterSpec s;
  s.mode = FilterMode::Full;
  s.bandwidth = static_cast<int>(coeffs.size());
  s.full_coeffs = std::move(coeffs);
  s.validate();
  return s;
}

ZonalFilterSpec ZonalFilterSpec::anchored(int b, std::vector<int> degrees, std::vector<double> values) {
  ZonalFilterSpec s;
  s.mode = FilterMode::Anchored;
  s.bandwidth = b;
  s.anchor_degrees = std::move(degrees);
  s.anchor_values = std::move(values);
  s.validate();
  return s;
}

ZonalFilterSpec ZonalFilterSpec::uniform(int b, std::vector<double> values) {
  auto degrees = uniform_anchor_degrees(b, static_cast<int>(values.size()));
  return anchored(b, std::move(degrees), std::move(values));
}

void ZonalFilterSpec::validate() const {
  Bandwidth check(bandwidth);
  if (mode == FilterMode::Full) {
    if (static_cast<int>(full_coeffs.size()) != bandwidth) {
      throw DomainError("full filter needs exactly b coefficients");
    }
    return;
  }
  const auto n = anchor_degrees.size();
  if (n < 2 || anchor_values.size() != n) {
    throw DomainError("anchored filter needs >= 2 degrees with one value each");
  }
  if (anchor_degrees.front() != 0 || anchor_degrees.back() != bandwidth - 1) {
    throw DomainError("anchors must start at degree 0 and end at degree b - 1");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (anchor_degrees[i] <= anchor_degrees[i - 1]) {
      throw DomainError("anchor degrees must be strictly increasing");
    }
  }
}

int ZonalFilterSpec::num_parameters() const {
  return mode == FilterMode::Full ? bandwidth : static_cast<int>(anchor_values.size());
}

std::vector<int> uniform_anchor_degrees(int b, int n) {
  if (n < 2 || n > b) {
    throw DomainError("need 2 <= anchors <= b (b=" + std::to_string(b) + ", n=" + std::to_string(n) + ")");
  }
  std::vector<int> d(n);
  for (int i = 0; i < n; ++i) {
    d[i] = static_cast<int>(std::lround(static_cast<double>(i) * (b - 1) / (n - 1)));
  }
  return d;
}

std::vector<double> interpolation_matrix(int b, const std::vector<int>& degrees) {
  const int n = static_cast<int>(degrees.size());
  std::vector<double> w(static_cast<std::size_t>(b) * n, 0.0);
  int seg = 0;
  for (int l = 0; l < b; ++l) {
    while (seg + 2 < n && degrees[seg + 1] < l) ++seg;
    const int lo = degrees[seg];
    const int hi = degrees[seg + 1];
    const double t = static_cast<double>(l - lo) / (hi - lo);
    w[static_cast<std::size_t>(l) * n + seg] += 1.0 - t;
    w[static_cast<std::size_t>(l) * n + seg + 1] += t;
  }
  return w;
}

std::vector<double> realize_filter(const ZonalFilterSpec& spec) {
  spec.validate();
  if (spec.mode == FilterMode::Full) return spec.full_coeffs;
  const int b = spec.bandwidth;
  const int n = static_cast<int>(spec.anchor_values.size());
  const auto w = interpolation_matrix(b, spec.anchor_degrees);
  std::vector<double> out(b, 0.0);
  for (int l = 0; l < b; ++l) {
    for (int a = 0; a < n; ++a) out[l] += w[static_cast<std::size_t>(l) * n + a] * spec.anchor_values[a];
  }
  return out;
}

double conv_scale(int l) { return 2.0 * pi * std::sqrt(4.0 * pi / (2.0 * l + 1.0)); }

SpectralCoeffs conv_spectral(const SpectralCoeffs& f, const ZonalFilterSpec& h) {
  const int b = f.bandwidth().value();
  if (h.bandwidth != b) throw DomainError("filter bandwidth does not match the signal");
  const auto taps = realize_filter(h);
  SpectralCoeffs out(f.bandwidth(), f.channels(), f.real_origin());
  for (int c = 0; c < f.channels(); ++c) {
    for (int l = 0; l < b; ++l) {
      const double g = conv_scale(l) * taps[l];
      for (int m = -l; m <= l; ++m) out.at(c, l, m) = g * f.at(c, l, m);
    }
  }
  return out;
}

SpectralCoeffs conv_spectral(const SpectralCoeffs& f, const std::vector<ZonalFilterSpec>& bank,
                             int out_channels) {
  const int b = f.bandwidth().value();
  const int in = f.channels();
  if (static_cast<int>(bank.size()) != in * out_channels) {
    throw DomainError("filter bank must hold in_channels * out_channels filters");
  }
  SpectralCoeffs out(f.bandwidth(), out_channels, f.real_origin());
  for (int o = 0; o < out_channels; ++o) {
    for (int i = 0; i < in; ++i) {
      const auto& h = bank[static_cast<std::size_t>(o) * in + i];
      if (h.bandwidth != b) throw DomainError("filter bandwidth does not match the signal");
      const auto taps = realize_filter(h);
      for (int l = 0; l < b; ++l) {
        const double g = conv_scale(l) * taps[l];
        for (int m = -l; m <= l; ++m) out.at(o, l, m) += g * f.at(i, l, m);
      }
    }
  }
  return out;
}

std::vector<double> spectral_pool_taper(int b_out) {
  std::vector<double> w(b_out);
  for (int l = 0; l < b_out; ++l) w[l] = 0.5 * (1.0 + std::cos(pi * l / b_out));
  return w;
}

SpectralCoeffs spectral_pool(const SpectralCoeffs& f, bool pre_smooth) {
  const int b = f.bandwidth().value();
  if (b % 2) throw DomainError("spectral pooling needs an even bandwidth");
  const Bandwidth half_b(b / 2);
  const auto taper = pre_smooth ? spectral_pool_taper(b / 2) : std::vector<double>(b / 2, 1.0);
  SpectralCoeffs out(half_b, f.channels(), f.real_origin());
  for (int c = 0; c < f.channels(); ++c) {
    for (int l = 0; l < b / 2; ++l) {
      for (int m = -l; m <= l; ++m) out.at(c, l, m) = taper[l] * f.at(c, l, m);
    }
  }
  return out;
}

SphericalSignal weighted_avg_pool(const SphericalSignal& s) {
  const int b = s.bandwidth().value();
  if (b % 2) throw DomainError("spatial pooling needs an even bandwidth");
  SphericalSignal out(b / 2, s.channels());
  const auto& area = s.grid().area_weights;
  for (int c = 0; c < s.channels(); ++c) {
    for (int j = 0; j < out.side(); ++j) {
      const double w0 = area[2 * j];
      const double w1 = area[2 * j + 1];
      const double total = 2.0 * (w0 + w1);
      for (int k = 0; k < out.side(); ++k) {
        const double top = s.at(c, 2 * j, 2 * k) + s.at(c, 2 * j, 2 * k + 1);
        const double bottom = s.at(c, 2 * j + 1, 2 * k) + s.at(c, 2 * j + 1, 2 * k + 1);
        out.at(c, j, k) = total > 0.0 ? (w0 * top + w1 * bottom) / total : 0.25 * (top + bottom);
      }
    }
  }
  return out;
}

SphericalSignal max_pool(const SphericalSignal& s) {
  const int b = s.bandwidth().value();
  if (b % 2) throw DomainError("spatial pooling needs an even bandwidth");
  SphericalSignal out(b / 2, s.channels());
  for (int c = 0; c < s.channels(); ++c) {
    for (int j = 0; j < out.side(); ++j) {
      for (int k = 0; k < out.side(); ++k) {
        out.at(c, j, k) = std::max({s.at(c, 2 * j, 2 * k), s.at(c, 2 * j, 2 * k + 1),
                                    s.at(c, 2 * j + 1, 2 * k), s.at(c, 2 * j + 1, 2 * k + 1)});
      }
    }
  }
  return out;
}

InvariantDescriptor wgap(const SphericalSignal& s) {
  InvariantDescriptor d{DescriptorKind::WGAP, s.channels(), 1, std::vector<double>(s.channels(), 0.0)};
  const auto& area = s.grid().area_weights;
  double norm = 0.0;
  for (int j = 0; j < s.side(); ++j) norm += area[j] * s.side();
  for (int c = 0; c < s.channels(); ++c) {
    double acc = 0.0;
    for (int j = 0; j < s.side(); ++j) {
      double row = 0.0;
      for (int k = 0; k < s.side(); ++k) row += s.at(c, j, k);
      acc += area[j] * row;
    }
    d.values[c] = acc / norm;
  }
  return d;
}

InvariantDescriptor magl(const SpectralCoeffs& f) {
  const int b = f.bandwidth().value();
  InvariantDescriptor d{DescriptorKind::MAGL, f.channels(), b,
                        std::vector<double>(static_cast<std::size_t>(f.channels()) * b, 0.0)};
  for (int c = 0; c < f.channels(); ++c) {
    for (int l = 0; l < b; ++l) {
      double acc = 0.0;
      for (int m = -l; m <= l; ++m) acc += std::norm(f.at(c, l, m));
      d.values[static_cast<std::size_t>(c) * b + l] = std::sqrt(acc);
    }
  }
  return d;
}

SphericalSignal pointwise_nonlinearity(const SphericalSignal& s, Nonlinearity kind) {
  SphericalSignal out = s;
  if (kind == Nonlinearity::ReLU) {
    for (double& v : out.values()) v = std::max(v, 0.0);
  }
  return out;
}

SphericalSignal filter_signal(const ZonalFilterSpec& spec) {
  const auto taps = realize_filter(spec);
  SpectralCoeffs c(Bandwidth(spec.bandwidth), 1);
  for (int l = 0; l < spec.bandwidth; ++l) c.at(0, l, 0) = taps[l];
  return isft(c);
}

}  // namespace sphcnn
