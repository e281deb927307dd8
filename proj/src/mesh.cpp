#include "sphcnn/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "sphcnn/errors.hpp"
#include "sphcnn/parallel.hpp"

namespace sphcnn {

using std::numbers::pi;

namespace {

std::vector<std::array<int, 3>> fan(const std::vector<int>& poly) {
  std::vector<std::array<int, 3>> out;
  for (std::size_t i = 1; i + 1 < poly.size(); ++i) out.push_back({poly[0], poly[i], poly[i + 1]});
  return out;
}

// Next whitespace-separated token of the OFF body, skipping '#' comments.
class OffTokens {
 public:
  explicit OffTokens(std::istream& in) : in_(in) {}

  std::string next() {
    while (true) {
      std::string tok;
      if (line_ >> tok) {
        if (tok[0] == '#') {
          line_.setstate(std::ios::eofbit);
          continue;
        }
        return tok;
      }
      std::string raw;
      if (!std::getline(in_, raw)) throw DataError("OFF: unexpected end of file");
      line_ = std::istringstream(raw);
    }
  }
  double number() {
    const auto tok = next();
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw DataError("OFF: bad number '" + tok + "'");
      return v;
    } catch (const std::logic_error&) {
      throw DataError("OFF: bad number '" + tok + "'");
    }
  }
  long integer() {
    const double v = number();
    if (v != std::floor(v)) throw DataError("OFF: expected an integer");
    return static_cast<long>(v);
  }
  // Pushes back the tail of a header token such as "OFF8 6 0".
  void unread(const std::string& s) {
    std::string rest;
    std::getline(line_, rest);
    line_ = std::istringstream(s + " " + rest);
  }

 private:
  std::istream& in_;
  std::istringstream line_;
};

// Smallest sphere with the given points on its boundary.
BoundingSphere sphere_from(const std::vector<Vec3>& pts) {
  BoundingSphere s;
  if (pts.empty()) return s;
  if (pts.size() == 1) return {pts[0], 0.0};
  if (pts.size() == 2) return {0.5 * (pts[0] + pts[1]), 0.5 * (pts[0] - pts[1]).norm()};
  if (pts.size() == 3) {
    const Vec3 a = pts[1] - pts[0], b = pts[2] - pts[0];
    const Vec3 axb = a.cross(b);
    const double denom = 2.0 * axb.squaredNorm();
    if (denom < 1e-24 * std::pow(a.squaredNorm() + b.squaredNorm(), 2)) {
      // Collinear: the farthest pair spans the sphere.
      BoundingSphere best;
      for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
          auto c = sphere_from({pts[i], pts[j]});
          if (c.radius > best.radius) best = c;
        }
      }
      return best;
    }
    const Vec3 off = (b.squaredNorm() * axb.cross(a) + a.squaredNorm() * b.cross(axb)) / denom;
    return {pts[0] + off, off.norm()};
  }
  Eigen::Matrix3d m;
  Eigen::Vector3d rhs;
  for (int i = 0; i < 3; ++i) {
    const Vec3 d = pts[i + 1] - pts[0];
    m.row(i) = 2.0 * d.transpose();
    rhs[i] = d.squaredNorm();
  }
  // Least squares covers nearly coplanar quadruples.
  const Vec3 off = m.completeOrthogonalDecomposition().solve(rhs);
  return {pts[0] + off, off.norm()};
}

bool inside(const BoundingSphere& s, const Vec3& p, double tol) {
  return (p - s.center).norm() <= s.radius + tol;
}

}  // namespace

int TriangleMesh::validate() {
  const int n = static_cast<int>(vertices.size());
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw DataError("mesh has non-finite vertex coordinates");
  }
  double scale = 0.0;
  for (const auto& v : vertices) scale = std::max(scale, v.cwiseAbs().maxCoeff());
  const double min_area = 1e-14 * std::max(scale * scale, 1e-300);
  std::vector<std::array<int, 3>> kept;
  kept.reserve(faces.size());
  int dropped = 0;
  for (const auto& f : faces) {
    for (int i : f) {
      if (i < 0 || i >= n) throw DataError("face index out of range");
    }
    const double area =
        0.5 * (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]).norm();
    if (area <= min_area) {
      ++dropped;
    } else {
      kept.push_back(f);
    }
  }
  faces = std::move(kept);
  return dropped;
}

TriangleMesh read_off(std::istream& in) {
  OffTokens tok(in);
  const auto head = tok.next();
  if (head.rfind("OFF", 0) != 0) throw DataError("OFF: missing header");
  if (head.size() > 3) tok.unread(head.substr(3));
  const long nv = tok.integer();
  const long nf = tok.integer();
  tok.integer();  // edge count, unused
  if (nv < 0 || nf < 0) throw DataError("OFF: negative counts");
  TriangleMesh mesh;
  mesh.vertices.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    const double x = tok.number(), y = tok.number(), z = tok.number();
    mesh.vertices.emplace_back(x, y, z);
  }
  for (long i = 0; i < nf; ++i) {
    const long k = tok.integer();
    if (k < 3) throw DataError("OFF: face with fewer than 3 vertices");
    std::vector<int> poly(k);
    for (auto& p : poly) p = static_cast<int>(tok.integer());
    for (const auto& t : fan(poly)) mesh.faces.push_back(t);
  }
  return mesh;
}

TriangleMesh read_obj(std::istream& in) {
  TriangleMesh mesh;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::istringstream line(raw);
    std::string kind;
    if (!(line >> kind)) continue;
    if (kind == "v") {
      double x, y, z;
      if (!(line >> x >> y >> z)) throw DataError("OBJ line " + std::to_string(lineno) + ": bad vertex");
      mesh.vertices.emplace_back(x, y, z);
    } else if (kind == "f") {
      std::vector<int> poly;
      std::string t;
      while (line >> t) {
        long idx = 0;
        try {
          idx = std::stol(t.substr(0, t.find('/')));
        } catch (const std::logic_error&) {
          throw DataError("OBJ line " + std::to_string(lineno) + ": bad face index");
        }
        const long n = static_cast<long>(mesh.vertices.size());
        if (idx == 0) throw DataError("OBJ line " + std::to_string(lineno) + ": index 0");
        poly.push_back(static_cast<int>(idx > 0 ? idx - 1 : n + idx));
      }
      if (poly.size() < 3) throw DataError("OBJ line " + std::to_string(lineno) + ": short face");
      for (const auto& f : fan(poly)) mesh.faces.push_back(f);
    }
  }
  return mesh;
}

TriangleMesh read_mesh(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  TriangleMesh mesh;
  if (ext == ".off") {
    mesh = read_off(f);
  } else if (ext == ".obj") {
    mesh = read_obj(f);
  } else {
    throw DataError("unsupported mesh format: " + ext);
  }
  mesh.validate();
  if (mesh.vertices.empty()) throw DataError("mesh has no vertices");
  return mesh;
}

void write_off(std::ostream& out, const TriangleMesh& mesh) {
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.faces.size() << " 0\n";
  out.precision(17);
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

BoundingSphere bounding_sphere(const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) throw DataError("bounding sphere of an empty mesh");
  std::vector<Vec3> p = mesh.vertices;
  std::mt19937_64 rng(0x5eed);
  std::shuffle(p.begin(), p.end(), rng);
  double scale = 0.0;
  for (const auto& v : p) scale = std::max(scale, (v - p[0]).norm());
  const double tol = 1e-12 * std::max(scale, 1e-300);

  BoundingSphere s{p[0], 0.0};
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (inside(s, p[i], tol)) continue;
    s = sphere_from({p[i]});
    for (std::size_t j = 0; j < i; ++j) {
      if (inside(s, p[j], tol)) continue;
      s = sphere_from({p[i], p[j]});
      for (std::size_t k = 0; k < j; ++k) {
        if (inside(s, p[k], tol)) continue;
        s = sphere_from({p[i], p[j], p[k]});
        for (std::size_t q = 0; q < k; ++q) {
          if (inside(s, p[q], tol)) continue;
          s = sphere_from({p[i], p[j], p[k], p[q]});
        }
      }
    }
  }
  double r = 0.0;
  for (const auto& v : mesh.vertices) r = std::max(r, (v - s.center).norm());
  s.radius = r;
  return s;
}

SphericalRepresentation mesh_to_sphere(const TriangleMesh& mesh, int b, const Vec3& center_offset) {
  const auto bs = bounding_sphere(mesh);
  const Vec3 origin = bs.center + center_offset;
  const double norm = bs.radius + center_offset.norm();
  SphericalSignal sig(b, 2);
  const int n = sig.side();
  const auto& grid = sig.grid();

  // Per-face data hoisted out of the ray loop.
  struct Face {
    Vec3 v0, e1, e2, unit_normal;
  };
  std::vector<Face> faces;
  faces.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) {
    const Vec3 v0 = mesh.vertices[f[0]] - origin;
    const Vec3 e1 = mesh.vertices[f[1]] - mesh.vertices[f[0]];
    const Vec3 e2 = mesh.vertices[f[2]] - mesh.vertices[f[0]];
    const Vec3 nrm = e1.cross(e2);
    const double len = nrm.norm();
    if (len == 0.0) continue;
    faces.push_back({v0, e1, e2, nrm / len});
  }

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
    for (int k = 0; k < n; ++k) {
      const Vec3 dir = direction(grid.thetas[j], grid.phis[k]);
      double best_t = -1.0;
      const Face* best = nullptr;
      for (const auto& f : faces) {
        // Moller-Trumbore with the ray origin at 0.
        const Vec3 p = dir.cross(f.e2);
        const double det = f.e1.dot(p);
        if (std::abs(det) < 1e-300) continue;
        const double inv = 1.0 / det;
        const Vec3 s = -f.v0;
        const double u = s.dot(p) * inv;
        if (u < 0.0 || u > 1.0) continue;
        const Vec3 q = s.cross(f.e1);
        const double v = dir.dot(q) * inv;
        if (v < 0.0 || u + v > 1.0) continue;
        const double t = f.e2.dot(q) * inv;
        if (t > 0.0 && t > best_t) {
          best_t = t;
          best = &f;
        }
      }
      if (best) {
        const double c = std::min(1.0, std::abs(dir.dot(best->unit_normal)));
        sig.at(0, static_cast<int>(j), k) = best_t / norm;
        sig.at(1, static_cast<int>(j), k) = std::sqrt(1.0 - c * c);
      }
    }
  });
  return {std::move(sig), origin, bs.radius};
}

TriangleMesh rotate_mesh(const TriangleMesh& mesh, const RotationZYZ& r) {
  TriangleMesh out = mesh;
  const Mat3 m = r.matrix();
  for (auto& v : out.vertices) v = m * v;
  return out;
}

TriangleMesh scale_mesh(const TriangleMesh& mesh, double s) {
  if (!(s > 0.0)) throw DomainError("scale must be positive");
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v *= s;
  return out;
}

Vec3 jitter_offset(std::uint64_t seed, double radius) {
  if (radius <= 0.0) return Vec3::Zero();
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  while (true) {
    const Vec3 p(2 * uniform() - 1, 2 * uniform() - 1, 2 * uniform() - 1);
    if (p.squaredNorm() <= 1.0) return radius * p;
  }
}

TriangleMesh make_icosphere(int subdivisions, double radius) {
  if (subdivisions < 0) throw DomainError("subdivisions must be >= 0");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
             {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (auto& v : m.vertices) v.normalize();
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      const int idx = static_cast<int>(m.vertices.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.faces.size() * 4);
    for (const auto& f : m.faces) {
      const int a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    m.faces = std::move(next);
  }
  for (auto& v : m.vertices) v *= radius;
  return m;
}

TriangleMesh make_cube(double h) {
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) m.vertices.emplace_back(i & 1 ? h : -h, i & 2 ? h : -h, i & 4 ? h : -h);
  m.faces = {{0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}, {0, 1, 5}, {0, 5, 4},
             {2, 6, 7}, {2, 7, 3}, {0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5}};
  return m;
}

TriangleMesh make_tetrahedron() {
  TriangleMesh m;
  const double s = 1.0 / std::sqrt(3.0);
  m.vertices = {{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
  m.faces = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return m;
}

TriangleMesh make_star_mesh(std::uint64_t seed, int subdivisions, int bumps, double amplitude) {
  TriangleMesh m = make_icosphere(subdivisions);
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  std::vector<Vec3> centres;
  std::vector<double> weights, widths;
  for (int i = 0; i < bumps; ++i) {
    const double z = 2 * uniform() - 1, phi = 2 * pi * uniform();
    const double s = std::sqrt(1 - z * z);
    centres.emplace_back(s * std::cos(phi), s * std::sin(phi), z);
    weights.push_back(0.3 + 0.7 * uniform());
    widths.push_back(2.0 + 6.0 * uniform());
  }
  for (auto& v : m.vertices) {
    double r = 1.0;
    for (int i = 0; i < bumps; ++i) r += amplitude * weights[i] * std::exp(widths[i] * (v.dot(centres[i]) - 1.0));
    v *= r;
  }
  return m;
}

}  // namespace sphcnn
