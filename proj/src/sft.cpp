#include "sphcnn/sft.hpp"

#include <cmath>
#include <string>

#include "sphcnn/errors.hpp"
#include "sphcnn/parallel.hpp"

namespace sphcnn {

SphericalSignal::SphericalSignal(std::shared_ptr<const SphericalGrid> grid, int channels)
    : grid_(std::move(grid)), channels_(channels) {
  if (channels < 1) throw DomainError("signal needs at least one channel");
  values_.assign(static_cast<std::size_t>(channels) * channel_size(), 0.0);
}

SphericalSignal::SphericalSignal(int b, int channels) : SphericalSignal(grid_for(b), channels) {}

void SphericalSignal::check_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) throw NumericalError("signal contains non-finite values");
  }
}

SpectralCoeffs::SpectralCoeffs(Bandwidth b, int channels, bool real_origin)
    : b_(b), channels_(channels), real_origin_(real_origin) {
  if (channels < 1) throw DomainError("spectrum needs at least one channel");
  coeffs_.assign(static_cast<std::size_t>(channels) * b.num_coeffs(), Complex{});
}

void SpectralCoeffs::enforce_real_symmetry() {
  const int b = b_.value();
  for (int c = 0; c < channels_; ++c) {
    for (int l = 0; l < b; ++l) {
      at(c, l, 0).imag(0.0);
      for (int m = 1; m <= l; ++m) {
        at(c, l, -m) = (m % 2 ? -1.0 : 1.0) * std::conj(at(c, l, m));
      }
    }
  }
}

namespace half {

std::vector<double> real_expansion_scale(int b) {
  std::vector<double> s(b, 2.0);
  s[0] = 1.0;
  return s;
}

void analyze(std::span<const double> in, std::span<const double> row_weight,
             const HarmonicTable& table, std::span<Complex> out) {
  const int b = table.bandwidth().value();
  const int n = 2 * b;
  const int nf = b + 1;
  // rows[m * n + j] = row_weight[j] * FFT_k(in[j, :])[m]
  std::vector<Complex> rows(static_cast<std::size_t>(nf) * n);
  std::vector<Complex> spectrum(nf);
  for (int j = 0; j < n; ++j) {
    table.fft().forward_real(in.data() + static_cast<std::size_t>(j) * n, spectrum.data());
    for (int m = 0; m < b; ++m) rows[static_cast<std::size_t>(m) * n + j] = row_weight[j] * spectrum[m];
  }
  for (int m = 0; m < b; ++m) {
    const auto block = table.legendre_block(m);
    const Complex* f = rows.data() + static_cast<std::size_t>(m) * n;
    for (int l = m; l < b; ++l) {
      const double* p = block.data() + static_cast<std::size_t>(l - m) * n;
      double re = 0.0;
      double im = 0.0;
      for (int j = 0; j < n; ++j) {
        re += p[j] * f[j].real();
        im += p[j] * f[j].imag();
      }
      out[tri_index(l, m)] = {re, im};
    }
  }
}

void synthesize(std::span<const Complex> in, std::span<const double> m_scale,
                const HarmonicTable& table, std::span<double> out) {
  const int b = table.bandwidth().value();
  const int n = 2 * b;
  const int nf = b + 1;
  // cols[j * nf + m] = sum_l in[l,m] L(l,m,j), prepared for a c2r transform.
  std::vector<Complex> cols(static_cast<std::size_t>(n) * nf, Complex{});
  for (int m = 0; m < b; ++m) {
    const auto block = table.legendre_block(m);
    // c2r doubles every m > 0 term and takes Re of the m = 0 term.
    const double factor = m == 0 ? m_scale[0] : 0.5 * m_scale[m];
    for (int l = m; l < b; ++l) {
      const Complex c = factor * in[tri_index(l, m)];
      if (c == Complex{}) continue;
      const double* p = block.data() + static_cast<std::size_t>(l - m) * n;
      for (int j = 0; j < n; ++j) cols[static_cast<std::size_t>(j) * nf + m] += c * p[j];
    }
  }
  for (int j = 0; j < n; ++j) {
    Complex* row = cols.data() + static_cast<std::size_t>(j) * nf;
    row[0].imag(0.0);
    table.fft().inverse_real(row, out.data() + static_cast<std::size_t>(j) * n);
  }
}

}  // namespace half

namespace {

void check_bandwidth(Bandwidth a, Bandwidth b) {
  if (a != b) {
    throw DomainError("bandwidth mismatch: " + std::to_string(a.value()) + " vs " +
                      std::to_string(b.value()));
  }
}

void fill_from_half(std::span<const Complex> h, int b, std::span<Complex> full) {
  for (int l = 0; l < b; ++l) {
    full[SpectralCoeffs::lm_index(l, 0)] = {h[tri_index(l, 0)].real(), 0.0};
    for (int m = 1; m <= l; ++m) {
      const Complex v = h[tri_index(l, m)];
      full[SpectralCoeffs::lm_index(l, m)] = v;
      full[SpectralCoeffs::lm_index(l, -m)] = (m % 2 ? -1.0 : 1.0) * std::conj(v);
    }
  }
}

}  // namespace

SpectralCoeffs expand_half(std::span<const Complex> half_coeffs, Bandwidth bw, int channels) {
  const int b = bw.value();
  SpectralCoeffs out(bw, channels, true);
  for (int c = 0; c < channels; ++c) {
    fill_from_half(half_coeffs.subspan(c * half::size(b), half::size(b)), b, out.channel(c));
  }
  return out;
}

SpectralCoeffs sft_direct(const SphericalSignal& signal, const HarmonicTable& table) {
  check_bandwidth(signal.bandwidth(), table.bandwidth());
  const int b = table.bandwidth().value();
  const int n = 2 * b;
  const auto& w = table.grid().quad_weights;
  SpectralCoeffs out(table.bandwidth(), signal.channels(), true);
  parallel_for(static_cast<std::size_t>(signal.channels()), [&](std::size_t c) {
    const auto f = signal.channel(static_cast<int>(c));
    std::vector<Complex> h(half::size(b));
    for (int m = 0; m < b; ++m) {
      for (int l = m; l < b; ++l) {
        Complex acc{};
        for (int j = 0; j < n; ++j) {
          const double wl = w[j] * table.legendre(l, m, j);
          const double* row = f.data() + static_cast<std::size_t>(j) * n;
          for (int k = 0; k < n; ++k) acc += (wl * row[k]) * table.phase(m, k);
        }
        h[tri_index(l, m)] = acc;
      }
    }
    fill_from_half(h, b, out.channel(static_cast<int>(c)));
  });
  return out;
}

SpectralCoeffs sft_sepvar(const SphericalSignal& signal, const HarmonicTable& table) {
  check_bandwidth(signal.bandwidth(), table.bandwidth());
  const int b = table.bandwidth().value();
  SpectralCoeffs out(table.bandwidth(), signal.channels(), true);
  parallel_for(static_cast<std::size_t>(signal.channels()), [&](std::size_t c) {
    std::vector<Complex> h(half::size(b));
    half::analyze(signal.channel(static_cast<int>(c)), table.grid().quad_weights, table, h);
    fill_from_half(h, b, out.channel(static_cast<int>(c)));
  });
  return out;
}

SpectralCoeffs sft(const SphericalSignal& signal, const HarmonicTable& table, SftMethod method) {
  return method == SftMethod::Direct ? sft_direct(signal, table) : sft_sepvar(signal, table);
}

SphericalSignal isft(const SpectralCoeffs& coeffs, const HarmonicTable& table) {
  check_bandwidth(coeffs.bandwidth(), table.bandwidth());
  const int b = table.bandwidth().value();
  const int n = 2 * b;
  SphericalSignal out(table.grid_ptr(), coeffs.channels());

  if (coeffs.real_origin()) {
    const auto scale = half::real_expansion_scale(b);
    parallel_for(static_cast<std::size_t>(coeffs.channels()), [&](std::size_t c) {
      const auto full = coeffs.channel(static_cast<int>(c));
      std::vector<Complex> h(half::size(b));
      for (int l = 0; l < b; ++l) {
        for (int m = 0; m <= l; ++m) h[tri_index(l, m)] = full[SpectralCoeffs::lm_index(l, m)];
      }
      half::synthesize(h, scale, table, out.channel(static_cast<int>(c)));
    });
    return out;
  }

  // General complex synthesis; the result must still be real.
  double max_abs = 0.0;
  double max_imag = 0.0;
  for (int c = 0; c < coeffs.channels(); ++c) {
    const auto full = coeffs.channel(c);
    std::vector<Complex> row(n);
    std::vector<Complex> values(n);
    for (int j = 0; j < n; ++j) {
      std::fill(row.begin(), row.end(), Complex{});
      for (int m = -(b - 1); m < b; ++m) {
        const int am = std::abs(m);
        const double sign = (m < 0 && am % 2) ? -1.0 : 1.0;
        Complex acc{};
        for (int l = am; l < b; ++l) {
          acc += full[SpectralCoeffs::lm_index(l, m)] * (sign * table.legendre(l, am, j));
        }
        row[(m + n) % n] = acc;
      }
      table.fft().complex(row.data(), values.data(), +1);
      for (int k = 0; k < n; ++k) {
        out.at(c, j, k) = values[k].real();
        max_abs = std::max(max_abs, std::abs(values[k]));
        max_imag = std::max(max_imag, std::abs(values[k].imag()));
      }
    }
  }
  if (max_imag > 1e-9 * std::max(1.0, max_abs)) {
    throw DomainError("coefficients do not describe a real signal (imaginary residue " +
                      std::to_string(max_imag) + ")");
  }
  return out;
}

SphericalSignal bandlimit(const SphericalSignal& signal, const HarmonicTable& table) {
  return isft(sft_sepvar(signal, table), table);
}

SpectralCoeffs sft(const SphericalSignal& signal, SftMethod method) {
  return sft(signal, *table_for(signal.bandwidth().value()), method);
}

SphericalSignal isft(const SpectralCoeffs& coeffs) {
  return isft(coeffs, *table_for(coeffs.bandwidth().value()));
}

SphericalSignal bandlimit(const SphericalSignal& signal) {
  return bandlimit(signal, *table_for(signal.bandwidth().value()));
}

}  // namespace sphcnn
