#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sphcnn/sft.hpp"

namespace sphcnn {

/// Payload precision of an SPH1 file. Signals are always float64 in memory.
enum class Dtype : std::uint8_t { F32 = 0, F64 = 1 };

// SPH1: "SPH1", u32 b, u32 channels, u8 dtype, then channel-major, theta-major
// samples. Everything little-endian.
void write_signal(std::ostream& out, const SphericalSignal& s, Dtype dtype = Dtype::F64);
SphericalSignal read_signal(std::istream& in);
void write_signal(const std::filesystem::path& path, const SphericalSignal& s,
                  Dtype dtype = Dtype::F64);
SphericalSignal read_signal(const std::filesystem::path& path);

// SPEC1: "SPEC", u32 b, u32 channels, u8 real_origin, then (re, im) f64 pairs in
// (l, m) order. Only m >= 0 is stored for real-origin spectra.
void write_coeffs(std::ostream& out, const SpectralCoeffs& c);
SpectralCoeffs read_coeffs(std::istream& in);
void write_coeffs(const std::filesystem::path& path, const SpectralCoeffs& c);
SpectralCoeffs read_coeffs(const std::filesystem::path& path);

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<double> data;  // stored as f32 on disk
};

// CKPT1: "CKPT1", u32 count, then per tensor u32 name length, name bytes,
// u32 ndim, u32 dims..., f32 data.
void write_checkpoint(std::ostream& out, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(std::istream& in);
void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

}  // namespace sphcnn
