#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "sphcnn/rotation.hpp"
#include "sphcnn/sft.hpp"

namespace sphcnn {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;

  /// Throws DataError on out-of-range indices; drops zero-area faces and
  /// returns how many were dropped.
  int validate();
};

/// ASCII OFF. Polygons are fan-split into triangles.
TriangleMesh read_off(std::istream& in);
/// OBJ subset: "v x y z" and "f i j k ..." (1-based, negative = relative,
/// "i/t/n" tokens accepted). Everything else is ignored.
TriangleMesh read_obj(std::istream& in);
/// Dispatches on extension (.off / .obj) and validates.
TriangleMesh read_mesh(const std::filesystem::path& path);
void write_off(std::ostream& out, const TriangleMesh& mesh);

struct BoundingSphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

/// Minimal enclosing sphere of the vertices (randomized incremental Welzl with
/// a fixed shuffle seed). The final radius is the largest vertex distance
/// from the center, so containment is exact.
BoundingSphere bounding_sphere(const TriangleMesh& mesh);

/// Channels: 0 = distance to the farthest hit / normaliser, 1 = sin of the
/// angle between the ray and the face normal. Misses give (0, 0).
struct SphericalRepresentation {
  SphericalSignal signal;
  Vec3 center;
  double radius;
};

/// center_offset moves the ray origin away from the bounding-sphere centre
/// (augmentation jitter). Distances are divided by radius + |offset| so they
/// stay in [0, 1].
SphericalRepresentation mesh_to_sphere(const TriangleMesh& mesh, int b,
                                       const Vec3& center_offset = Vec3::Zero());

TriangleMesh rotate_mesh(const TriangleMesh& mesh, const RotationZYZ& r);
TriangleMesh scale_mesh(const TriangleMesh& mesh, double s);

/// Uniform random point in the ball of radius `radius` (seeded).
Vec3 jitter_offset(std::uint64_t seed, double radius);

TriangleMesh make_icosphere(int subdivisions, double radius = 1.0);
TriangleMesh make_cube(double half_edge = 1.0);
/// Regular tetrahedron with circumradius 1 centred at the origin.
TriangleMesh make_tetrahedron();
/// Random star-shaped blob: an icosphere whose vertex radii follow a smooth
/// random function 1 + amplitude * sum of seeded bumps. No rotational symmetry
/// for generic seeds.
TriangleMesh make_star_mesh(std::uint64_t seed, int subdivisions = 3, int bumps = 6,
                            double amplitude = 0.6);

}  // namespace sphcnn
