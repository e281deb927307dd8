#include "sphcnn/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "sphcnn/errors.hpp"

namespace sphcnn {
namespace {

// Sanity limits so corrupt headers fail cleanly instead of allocating wildly.
constexpr std::uint32_t kMaxChannels = 1u << 16;
constexpr std::uint32_t kMaxNameLength = 4096;
constexpr std::uint32_t kMaxDims = 8;
constexpr std::uint64_t kMaxTensorSize = 1ull << 32;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) {
    std::array<unsigned char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b.data(), 4);
  }
  void u64(std::uint64_t v) {
    std::array<unsigned char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b.data(), 8);
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void finish() {
    out_.flush();
    if (!out_) throw DataError("write failed");
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, const char* what) : in_(in), what_(what) {}

  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw DataError(std::string(what_) + ": truncated file");
    }
  }
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::array<unsigned char, 4> b{};
    bytes(b.data(), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::array<unsigned char, 8> b{};
    bytes(b.data(), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  void magic(std::string_view expect) {
    std::string got(expect.size(), '\0');
    bytes(got.data(), got.size());
    if (got != expect) throw DataError(std::string(what_) + ": bad magic");
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw DataError(std::string(what_) + ": trailing bytes after payload");
    }
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(std::string(what_) + ": " + msg);
  }

 private:
  std::istream& in_;
  const char* what_;
};

int checked_bandwidth(Reader& r, std::uint32_t b) {
  if (b < 2 || b > static_cast<std::uint32_t>(kDefaultMaxBandwidth)) r.fail("bandwidth out of range");
  return static_cast<int>(b);
}

int checked_channels(Reader& r, std::uint32_t c) {
  if (c == 0 || c > kMaxChannels) r.fail("channel count out of range");
  return static_cast<int>(c);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  return f;
}

}  // namespace

void write_signal(std::ostream& out, const SphericalSignal& s, Dtype dtype) {
  Writer w(out);
  w.bytes("SPH1", 4);
  w.u32(static_cast<std::uint32_t>(s.bandwidth().value()));
  w.u32(static_cast<std::uint32_t>(s.channels()));
  w.u8(static_cast<std::uint8_t>(dtype));
  for (double v : s.values()) {
    if (dtype == Dtype::F32) {
      w.f32(static_cast<float>(v));
    } else {
      w.f64(v);
    }
  }
  w.finish();
}

SphericalSignal read_signal(std::istream& in) {
  Reader r(in, "SPH1");
  r.magic("SPH1");
  const int b = checked_bandwidth(r, r.u32());
  const int channels = checked_channels(r, r.u32());
  const auto dtype = r.u8();
  if (dtype > 1) r.fail("unknown dtype");
  SphericalSignal s(b, channels);
  for (double& v : s.values()) v = dtype == 0 ? static_cast<double>(r.f32()) : r.f64();
  r.expect_end();
  return s;
}

void write_signal(const std::filesystem::path& path, const SphericalSignal& s, Dtype dtype) {
  auto f = open_out(path);
  write_signal(f, s, dtype);
}

SphericalSignal read_signal(const std::filesystem::path& path) {
  auto f = open_in(path);
  return read_signal(f);
}

void write_coeffs(std::ostream& out, const SpectralCoeffs& c) {
  Writer w(out);
  const int b = c.bandwidth().value();
  w.bytes("SPEC", 4);
  w.u32(static_cast<std::uint32_t>(b));
  w.u32(static_cast<std::uint32_t>(c.channels()));
  w.u8(c.real_origin() ? 1 : 0);
  for (int ch = 0; ch < c.channels(); ++ch) {
    for (int l = 0; l < b; ++l) {
      for (int m = c.real_origin() ? 0 : -l; m <= l; ++m) {
        w.f64(c.at(ch, l, m).real());
        w.f64(c.at(ch, l, m).imag());
      }
    }
  }
  w.finish();
}

SpectralCoeffs read_coeffs(std::istream& in) {
  Reader r(in, "SPEC1");
  r.magic("SPEC");
  const int b = checked_bandwidth(r, r.u32());
  const int channels = checked_channels(r, r.u32());
  const auto real_origin = r.u8();
  if (real_origin > 1) r.fail("bad real_origin flag");
  SpectralCoeffs c(Bandwidth(b), channels, real_origin == 1);
  for (int ch = 0; ch < channels; ++ch) {
    for (int l = 0; l < b; ++l) {
      for (int m = real_origin ? 0 : -l; m <= l; ++m) {
        const double re = r.f64();
        c.at(ch, l, m) = Complex(re, r.f64());
      }
    }
  }
  r.expect_end();
  if (real_origin) {
    for (int ch = 0; ch < channels; ++ch) {
      for (int l = 0; l < b; ++l) {
        for (int m = 1; m <= l; ++m) {
          c.at(ch, l, -m) = (m % 2 ? -1.0 : 1.0) * std::conj(c.at(ch, l, m));
        }
      }
    }
  }
  return c;
}

void write_coeffs(const std::filesystem::path& path, const SpectralCoeffs& c) {
  auto f = open_out(path);
  write_coeffs(f, c);
}

SpectralCoeffs read_coeffs(const std::filesystem::path& path) {
  auto f = open_in(path);
  return read_coeffs(f);
}

void write_checkpoint(std::ostream& out, const std::vector<NamedTensor>& tensors) {
  Writer w(out);
  w.bytes("CKPT1", 5);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    std::uint64_t size = 1;
    for (auto d : t.shape) size *= d;
    if (size != t.data.size()) throw DomainError("tensor " + t.name + ": shape does not match data");
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.u32(d);
    for (double v : t.data) w.f32(static_cast<float>(v));
  }
  w.finish();
}

std::vector<NamedTensor> read_checkpoint(std::istream& in) {
  Reader r(in, "CKPT1");
  r.magic("CKPT1");
  const auto count = r.u32();
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto len = r.u32();
    if (len == 0 || len > kMaxNameLength) r.fail("bad tensor name length");
    t.name.resize(len);
    r.bytes(t.name.data(), len);
    const auto ndim = r.u32();
    if (ndim > kMaxDims) r.fail("too many dimensions");
    std::uint64_t size = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      t.shape.push_back(r.u32());
      size *= t.shape.back();
      if (size > kMaxTensorSize) r.fail("tensor too large");
    }
    t.data.resize(size);
    for (double& v : t.data) v = r.f32();
    out.push_back(std::move(t));
  }
  r.expect_end();
  return out;
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  auto f = open_out(path);
  write_checkpoint(f, tensors);
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  auto f = open_in(path);
  return read_checkpoint(f);
}

}  // namespace sphcnn
