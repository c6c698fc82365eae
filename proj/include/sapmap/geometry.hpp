#ifndef SAPMAP_GEOMETRY_HPP
#define SAPMAP_GEOMETRY_HPP

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace sapmap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat34 = Eigen::Matrix<double, 3, 4>;
using Pose = Eigen::Isometry3d;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Ray {
  Vec3 origin;
  Vec3 dir;  // not necessarily unit length

  Vec3 at(double t) const { return origin + t * dir; }
};

struct SurfaceHit {
  Vec3 point;
  Vec3 normal;  // unit, oriented toward the ray origin side
  double t = 0.0;
};

// Orientation looking from `position` toward `target`. The device frame has
// -z forward, +x along the image u axis, +y along the image v axis.
inline Mat3 look_at_rotation(const Vec3& position, const Vec3& target,
                             const Vec3& up_hint = Vec3::UnitY()) {
  const Vec3 forward = (target - position).normalized();
  Vec3 x_axis = forward.cross(up_hint);
  if (x_axis.squaredNorm() < 1e-18) {
    x_axis = forward.cross(Vec3::UnitX());
    if (x_axis.squaredNorm() < 1e-18) x_axis = forward.cross(Vec3::UnitZ());
  }
  x_axis.normalize();
  const Vec3 z_axis = -forward;
  const Vec3 y_axis = z_axis.cross(x_axis);
  Mat3 r;
  r.col(0) = x_axis;
  r.col(1) = y_axis;
  r.col(2) = z_axis;
  return r;
}

inline Pose make_pose(const Mat3& rotation, const Vec3& translation) {
  Pose p = Pose::Identity();
  p.linear() = rotation;
  p.translation() = translation;
  return p;
}

inline bool is_rotation(const Mat3& r, double tol = 1e-9) {
  return (r.transpose() * r - Mat3::Identity()).norm() < tol;
}

// t of the intersection with the plane through `origin` with unit `normal`,
// or nullopt when the ray is parallel.
inline std::optional<double> ray_plane_t(const Ray& ray, const Vec3& origin,
                                         const Vec3& normal) {
  const double denom = normal.dot(ray.dir);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  return normal.dot(origin - ray.origin) / denom;
}

// Moeller-Trumbore. Returns t and barycentrics (u toward v1, v toward v2).
inline std::optional<Vec3> ray_triangle(const Ray& ray, const Vec3& v0,
                                        const Vec3& v1, const Vec3& v2) {
  const Vec3 e1 = v1 - v0;
  const Vec3 e2 = v2 - v0;
  const Vec3 pvec = ray.dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-15) return std::nullopt;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = ray.origin - v0;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = ray.dir.dot(qvec) * inv_det;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(qvec) * inv_det;
  return Vec3(t, u, v);
}

inline double point_segment_distance(const Vec3& p, const Vec3& a,
                                     const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < 1e-30) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

// Closest distance between segments [p0,p1] and [q0,q1] (Ericson).
inline double segment_segment_distance(const Vec3& p0, const Vec3& p1,
                                       const Vec3& q0, const Vec3& q1) {
  const Vec3 d1 = p1 - p0;
  const Vec3 d2 = q1 - q0;
  const Vec3 r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a < 1e-30 && e < 1e-30) return r.norm();
  if (a < 1e-30) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e < 1e-30) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      if (denom > 1e-30) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p0 + s * d1) - (q0 + t * d2)).norm();
}

// Convex polygon area, positive regardless of winding.
inline double polygon_area(const std::vector<Vec2>& poly) {
  double twice = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return std::abs(twice) * 0.5;
}

inline bool polygon_is_convex(const std::vector<Vec2>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  int sign = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e1 = poly[(i + 1) % n] - poly[i];
    const Vec2 e2 = poly[(i + 2) % n] - poly[(i + 1) % n];
    const double cross = e1.x() * e2.y() - e1.y() * e2.x();
    if (std::abs(cross) < 1e-14) continue;
    const int s = cross > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  return true;
}

// Sutherland-Hodgman clip of a convex polygon against the axis-aligned
// rectangle [x0,x1] x [y0,y1].
inline std::vector<Vec2> clip_polygon_to_rect(std::vector<Vec2> poly,
                                              double x0, double y0, double x1,
                                              double y1) {
  auto clip_edge = [](const std::vector<Vec2>& in, auto inside,
                      auto intersect) {
    std::vector<Vec2> out;
    out.reserve(in.size() + 2);
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& cur = in[i];
      const Vec2& nxt = in[(i + 1) % n];
      const bool cur_in = inside(cur);
      const bool nxt_in = inside(nxt);
      if (cur_in) out.push_back(cur);
      if (cur_in != nxt_in) out.push_back(intersect(cur, nxt));
    }
    return out;
  };
  auto lerp_x = [](const Vec2& a, const Vec2& b, double x) {
    const double t = (x - a.x()) / (b.x() - a.x());
    return Vec2(x, a.y() + t * (b.y() - a.y()));
  };
  auto lerp_y = [](const Vec2& a, const Vec2& b, double y) {
    const double t = (y - a.y()) / (b.y() - a.y());
    return Vec2(a.x() + t * (b.x() - a.x()), y);
  };
  if (poly.empty()) return poly;
  poly = clip_edge(poly, [&](const Vec2& p) { return p.x() >= x0; },
                   [&](const Vec2& a, const Vec2& b) { return lerp_x(a, b, x0); });
  if (poly.empty()) return poly;
  poly = clip_edge(poly, [&](const Vec2& p) { return p.x() <= x1; },
                   [&](const Vec2& a, const Vec2& b) { return lerp_x(a, b, x1); });
  if (poly.empty()) return poly;
  poly = clip_edge(poly, [&](const Vec2& p) { return p.y() >= y0; },
                   [&](const Vec2& a, const Vec2& b) { return lerp_y(a, b, y0); });
  if (poly.empty()) return poly;
  poly = clip_edge(poly, [&](const Vec2& p) { return p.y() <= y1; },
                   [&](const Vec2& a, const Vec2& b) { return lerp_y(a, b, y1); });
  return poly;
}

}  // namespace sapmap

#endif  // SAPMAP_GEOMETRY_HPP
