#ifndef SAPMAP_SCENE_HPP
#define SAPMAP_SCENE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "sapmap/geometry.hpp"

namespace sapmap {

// Pinhole intrinsics in pixels. The device frame looks down -z; a point at
// device coordinates (X, Y, Z) with Z < 0 projects to
//   u = fx * X / -Z + cx,   v = fy * Y / -Z + cy.
// Pixel (x, y) covers the continuous square [x, x+1) x [y, y+1).
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
};

struct DeviceGeometry {
  Pose pose = Pose::Identity();  // device-to-world
  Intrinsics intrinsics;
  int width = 2;
  int height = 2;

  void validate(const std::string& who) const {
    if (intrinsics.fx <= 0.0 || intrinsics.fy <= 0.0)
      throw Error(who + ": focal lengths must be positive");
    if (width < 2 || height < 2)
      throw Error(who + ": resolution must be at least 2x2");
    if (!is_rotation(pose.linear()))
      throw Error(who + ": pose rotation is not orthonormal");
  }

  Vec3 center() const { return pose.translation(); }

  // Ray through a continuous image coordinate, in world space.
  Ray pixel_ray(const Vec2& px) const {
    const Vec3 dir_device((px.x() - intrinsics.cx) / intrinsics.fx,
                          (px.y() - intrinsics.cy) / intrinsics.fy, -1.0);
    return Ray{pose.translation(), pose.linear() * dir_device};
  }
};

struct ProjectorModel : DeviceGeometry {
  int id = 0;
  double max_output = 1.0;     // dynamic-range ceiling, normalized
  double response_gamma = 2.2;

  void validate() const {
    DeviceGeometry::validate("projector " + std::to_string(id));
    if (!(max_output > 0.0 && max_output <= 1.0))
      throw Error("projector " + std::to_string(id) +
                  ": max_output must lie in (0,1]");
  }
};

struct CameraModel : DeviceGeometry {
  void validate() const { DeviceGeometry::validate("camera"); }
};

struct PlaneSurface {
  Vec3 origin = Vec3::Zero();     // center of the rectangle
  Vec3 axis_u = Vec3::UnitX();    // unit, in-plane
  Vec3 axis_v = Vec3::UnitY();    // unit, in-plane, orthogonal to axis_u
  double extent_u = 1.0;          // full side length along axis_u, meters
  double extent_v = 1.0;

  Vec3 normal() const { return axis_u.cross(axis_v).normalized(); }
};

struct MeshSurface {
  std::vector<Vec3> vertices;
  std::vector<Eigen::Vector3i> triangles;
  std::vector<Vec3> normals;  // per vertex, unit
};

struct TargetSurface {
  std::variant<PlaneSurface, MeshSurface> shape;
  double samples_per_meter = 0.0;  // 0: one sample per back-projected pixel

  bool is_plane() const { return std::holds_alternative<PlaneSurface>(shape); }
  const PlaneSurface& plane() const { return std::get<PlaneSurface>(shape); }
  const MeshSurface& mesh() const { return std::get<MeshSurface>(shape); }

  void validate() const {
    if (is_plane()) {
      const auto& p = plane();
      if (std::abs(p.axis_u.dot(p.axis_v)) > 1e-9)
        throw Error("target plane axes are not orthogonal");
      if (p.extent_u <= 0.0 || p.extent_v <= 0.0)
        throw Error("target plane extents must be positive");
    } else {
      const auto& m = mesh();
      const int nv = static_cast<int>(m.vertices.size());
      for (const auto& tri : m.triangles)
        for (int k = 0; k < 3; ++k)
          if (tri[k] < 0 || tri[k] >= nv)
            throw Error("mesh triangle references an invalid vertex");
      if (m.normals.size() != m.vertices.size())
        throw Error("mesh requires one normal per vertex");
      for (const auto& n : m.normals)
        if (std::abs(n.norm() - 1.0) > 1e-6)
          throw Error("mesh normals must be unit length");
    }
  }

  // Nearest intersection with t > eps; the returned normal faces the origin
  // side of the ray.
  std::optional<SurfaceHit> intersect(const Ray& ray,
                                      double t_min = 1e-12) const {
    if (is_plane()) {
      const auto& p = plane();
      const Vec3 n = p.normal();
      const auto t = ray_plane_t(ray, p.origin, n);
      if (!t || *t <= t_min) return std::nullopt;
      const Vec3 hit = ray.at(*t);
      const Vec3 rel = hit - p.origin;
      if (std::abs(rel.dot(p.axis_u)) > 0.5 * p.extent_u ||
          std::abs(rel.dot(p.axis_v)) > 0.5 * p.extent_v)
        return std::nullopt;
      const Vec3 oriented = n.dot(ray.dir) < 0.0 ? n : Vec3(-n);
      return SurfaceHit{hit, oriented, *t};
    }
    const auto& m = mesh();
    std::optional<SurfaceHit> best;
    for (const auto& tri : m.triangles) {
      const Vec3& v0 = m.vertices[tri[0]];
      const Vec3& v1 = m.vertices[tri[1]];
      const Vec3& v2 = m.vertices[tri[2]];
      const auto res = ray_triangle(ray, v0, v1, v2);
      if (!res || res->x() <= t_min) continue;
      if (best && res->x() >= best->t) continue;
      Vec3 n = (v1 - v0).cross(v2 - v0).normalized();
      if (n.dot(ray.dir) > 0.0) n = -n;
      best = SurfaceHit{ray.at(res->x()), n, res->x()};
    }
    return best;
  }
};

struct SphereOccluder {
  Vec3 center = Vec3::Zero();
  double radius = 0.1;
};

struct CapsuleOccluder {
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::UnitZ();
  double radius = 0.01;
};

struct MeshOccluder {
  MeshSurface mesh;
};

struct Occluder {
  std::variant<SphereOccluder, CapsuleOccluder, MeshOccluder> shape;

  void validate() const {
    if (auto* s = std::get_if<SphereOccluder>(&shape)) {
      if (s->radius <= 0.0) throw Error("sphere occluder radius must be > 0");
    } else if (auto* c = std::get_if<CapsuleOccluder>(&shape)) {
      if (c->radius <= 0.0) throw Error("capsule occluder radius must be > 0");
      if ((c->p1 - c->p0).squaredNorm() < 1e-24)
        throw Error("capsule endpoints must be distinct");
    }
  }

  // True when the open segment (a, b) passes through the occluder.
  bool blocks_segment(const Vec3& a, const Vec3& b) const {
    if (auto* s = std::get_if<SphereOccluder>(&shape)) {
      return point_segment_distance(s->center, a, b) < s->radius;
    }
    if (auto* c = std::get_if<CapsuleOccluder>(&shape)) {
      return segment_segment_distance(a, b, c->p0, c->p1) < c->radius;
    }
    const auto& m = std::get<MeshOccluder>(shape).mesh;
    const Ray ray{a, b - a};
    for (const auto& tri : m.triangles) {
      const auto res = ray_triangle(ray, m.vertices[tri[0]],
                                    m.vertices[tri[1]], m.vertices[tri[2]]);
      if (res && res->x() > 1e-9 && res->x() < 1.0 - 1e-9) return true;
    }
    return false;
  }
};

inline bool segment_blocked(const Vec3& a, const Vec3& b,
                            const std::vector<Occluder>& occluders) {
  for (const auto& o : occluders)
    if (o.blocks_segment(a, b)) return true;
  return false;
}

struct Scene {
  std::vector<ProjectorModel> projectors;
  TargetSurface target;
  CameraModel camera;
  std::vector<Occluder> occluders;

  void validate() const {
    if (projectors.empty()) throw Error("scene needs at least one projector");
    std::set<int> ids;
    for (const auto& p : projectors) {
      p.validate();
      if (!ids.insert(p.id).second)
        throw Error("duplicate projector id " + std::to_string(p.id));
    }
    camera.validate();
    target.validate();
    for (const auto& o : occluders) o.validate();
    if (target.is_plane()) {
      const Vec3 n = target.plane().normal();
      const Vec3 o = target.plane().origin;
      const double cam_side = n.dot(camera.center() - o);
      if (std::abs(cam_side) < 1e-12)
        throw Error("camera lies in the target plane");
      for (const auto& p : projectors)
        if (n.dot(p.center() - o) * cam_side <= 0.0)
          throw Error("projector " + std::to_string(p.id) +
                      " is not on the camera side of the target plane");
    }
  }

  const ProjectorModel& projector(int id) const {
    for (const auto& p : projectors)
      if (p.id == id) return p;
    throw Error("unknown projector id " + std::to_string(id));
  }
};

// Forward pinhole projection to continuous (sub-pixel) image coordinates.
// Throws when the point is at or behind the optical center.
inline Vec2 project_point(const DeviceGeometry& device,
                          const Vec3& world_point) {
  const Vec3 local = device.pose.inverse() * world_point;
  const double depth = -local.z();
  if (depth <= 0.0) throw Error("behind-camera: point has non-positive depth");
  return Vec2(device.intrinsics.fx * local.x() / depth + device.intrinsics.cx,
              device.intrinsics.fy * local.y() / depth + device.intrinsics.cy);
}

// Analytic inverse of project_point at a known device-frame depth.
inline Vec3 back_project_at_depth(const DeviceGeometry& device, const Vec2& px,
                                  double depth) {
  if (depth <= 0.0) throw Error("behind-camera: depth must be positive");
  const Vec3 local((px.x() - device.intrinsics.cx) / device.intrinsics.fx * depth,
                   (px.y() - device.intrinsics.cy) / device.intrinsics.fy * depth,
                   -depth);
  return device.pose * local;
}

// Casts the ray through a continuous image coordinate onto the target.
inline std::optional<SurfaceHit> cast_to_target(const DeviceGeometry& device,
                                                const Vec2& px,
                                                const TargetSurface& target) {
  return target.intersect(device.pixel_ray(px));
}

enum class ArrayOrientation {
  kConverging,  // each projector looks at the target center
  kParallel,    // all principal rays parallel to the target normal
  kAligned,     // parallel, with principal-point lens shift so every
                // projector's pixel grid lands on the same target rectangle
};

struct GridArrayOptions {
  ArrayOrientation orientation = ArrayOrientation::kConverging;
  Intrinsics intrinsics{1.0, 1.0, 0.0, 0.0};
  int width = 2;
  int height = 2;
  double max_output = 1.0;
  double response_gamma = 2.2;
  // Per-projector sub-pixel lens-shift jitter (in projector pixels), applied
  // in aligned mode; empty means exactly aligned grids.
  std::vector<Vec2> subpixel_jitter;
};

// Projectors on a regular rows x cols grid at `height` meters above the
// target center along its normal, ids row-major.
inline std::vector<ProjectorModel> make_grid_array(
    int rows, int cols, double spacing, double height,
    const TargetSurface& target, const GridArrayOptions& options = {}) {
  if (rows < 1 || cols < 1) throw Error("grid array needs rows, cols >= 1");
  if (spacing <= 0.0 && rows * cols > 1)
    throw Error("grid array spacing must be positive");
  if (!target.is_plane())
    throw Error("grid arrays are defined over planar targets");
  const auto& plane = target.plane();
  const Vec3 n = plane.normal();
  const Vec3 center = plane.origin;

  std::vector<ProjectorModel> out;
  out.reserve(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      ProjectorModel p;
      p.id = r * cols + c;
      p.intrinsics = options.intrinsics;
      p.width = options.width;
      p.height = options.height;
      p.max_output = options.max_output;
      p.response_gamma = options.response_gamma;
      const double du = (c - 0.5 * (cols - 1)) * spacing;
      const double dv = (r - 0.5 * (rows - 1)) * spacing;
      const Vec3 pos = center + height * n + du * plane.axis_u + dv * plane.axis_v;
      Mat3 rot;
      if (options.orientation == ArrayOrientation::kConverging) {
        rot = look_at_rotation(pos, center, plane.axis_v);
      } else {
        rot.col(0) = plane.axis_u;
        rot.col(1) = plane.axis_v;
        rot.col(2) = n;
      }
      p.pose = make_pose(rot, pos);
      if (options.orientation == ArrayOrientation::kAligned) {
        // Lens shift: pixel (x,y) of every projector hits the same target
        // point as for a projector at the grid center.
        p.intrinsics.cx += du * options.intrinsics.fx / height;
        p.intrinsics.cy += dv * options.intrinsics.fy / height;
        if (!options.subpixel_jitter.empty()) {
          const auto& j =
              options.subpixel_jitter[p.id % options.subpixel_jitter.size()];
          p.intrinsics.cx += j.x();
          p.intrinsics.cy += j.y();
        }
      }
      out.push_back(p);
    }
  }
  return out;
}

// The image of one projector pixel in camera pixel coordinates: the four
// pixel corners cast onto the target and re-projected into the camera.
// Empty result = off-target (the pixel contributes nothing).
inline std::optional<std::array<Vec2, 4>> pixel_footprint(
    const ProjectorModel& projector, int px, int py, const Scene& scene) {
  if (px < 0 || py < 0 || px >= projector.width || py >= projector.height)
    throw Error("pixel outside projector resolution");
  const std::array<Vec2, 4> corners = {
      Vec2(px, py), Vec2(px + 1, py), Vec2(px + 1, py + 1), Vec2(px, py + 1)};
  std::array<Vec2, 4> out;
  for (int k = 0; k < 4; ++k) {
    const auto hit = cast_to_target(projector, corners[k], scene.target);
    if (!hit) return std::nullopt;
    out[k] = project_point(scene.camera, hit->point);
  }
  return out;
}

}  // namespace sapmap

#endif  // SAPMAP_SCENE_HPP
