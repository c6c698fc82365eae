#ifndef SAPMAP_CALIBRATION_HPP
#define SAPMAP_CALIBRATION_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "sapmap/image.hpp"

namespace sapmap {

// ---------------------------------------------------------------------------
// Gray code

inline std::uint32_t gray_encode(std::uint32_t n) { return n ^ (n >> 1); }

inline std::uint32_t gray_decode(std::uint32_t g) {
  std::uint32_t n = g;
  for (std::uint32_t shift = 1; shift < 32; shift <<= 1) n ^= n >> shift;
  return n;
}

inline int bits_for(int extent) {
  int bits = 0;
  while ((1 << bits) < extent) ++bits;
  return bits;
}

// One structured-light pattern plus its complement.
struct PatternPair {
  Image pattern;
  Image complement;
};

// Column codes first (MSB to LSB), then row codes. Pixel (x,y) of the k-th
// column pattern is on iff bit k of gray_encode(x) is set.
inline std::vector<PatternPair> generate_graycode_patterns(int w, int h) {
  if (w < 2 || h < 1) throw Error("pattern resolution must be at least 2x1");
  const int col_bits = bits_for(w);
  const int row_bits = bits_for(h);
  std::vector<PatternPair> out;
  out.reserve(col_bits + row_bits);
  auto emit = [&](int bit, bool column) {
    Image on(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::uint32_t code = gray_encode(column ? x : y);
        on(y, x) = (code >> bit) & 1u ? 1.0 : 0.0;
      }
    out.push_back({on, Image(Image::Constant(h, w, 1.0) - on)});
  };
  for (int b = col_bits - 1; b >= 0; --b) emit(b, true);
  for (int b = row_bits - 1; b >= 0; --b) emit(b, false);
  return out;
}

// Decoded projector coordinate per camera pixel; mask marks pixels whose
// code was recovered with confidence.
struct CorrespondenceMap {
  Eigen::MatrixXi proj_x;  // -1 where unseen
  Eigen::MatrixXi proj_y;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> seen;

  int width() const { return static_cast<int>(proj_x.cols()); }
  int height() const { return static_cast<int>(proj_x.rows()); }
};

// Per camera pixel, bit = 1 iff pattern - complement > margin; any pair with
// |difference| <= margin marks the pixel unseen. Decoded coordinates outside
// the declared projector resolution are unseen as well.
inline CorrespondenceMap decode_correspondence(
    const std::vector<PatternPair>& captured, int proj_w, int proj_h,
    double threshold_margin) {
  const int col_bits = bits_for(proj_w);
  const int row_bits = bits_for(proj_h);
  if (static_cast<int>(captured.size()) != col_bits + row_bits)
    throw Error("stack-shape: captured stack does not match declared resolution");
  if (captured.empty()) throw Error("stack-shape: empty capture stack");
  const Eigen::Index ch = captured.front().pattern.rows();
  const Eigen::Index cw = captured.front().pattern.cols();
  for (const auto& pair : captured)
    if (pair.pattern.rows() != ch || pair.pattern.cols() != cw ||
        pair.complement.rows() != ch || pair.complement.cols() != cw)
      throw Error("stack-shape: inconsistent image dimensions in stack");

  CorrespondenceMap map;
  map.proj_x = Eigen::MatrixXi::Constant(ch, cw, -1);
  map.proj_y = Eigen::MatrixXi::Constant(ch, cw, -1);
  map.seen.setConstant(ch, cw, false);

  for (Eigen::Index y = 0; y < ch; ++y) {
    for (Eigen::Index x = 0; x < cw; ++x) {
      std::uint32_t col_code = 0, row_code = 0;
      bool ok = true;
      for (int k = 0; k < col_bits + row_bits && ok; ++k) {
        const double diff =
            captured[k].pattern(y, x) - captured[k].complement(y, x);
        if (std::abs(diff) <= threshold_margin) {
          ok = false;
          break;
        }
        const std::uint32_t bit = diff > threshold_margin ? 1u : 0u;
        if (k < col_bits)
          col_code |= bit << (col_bits - 1 - k);
        else
          row_code |= bit << (row_bits + col_bits - 1 - k);
      }
      if (!ok) continue;
      const int px = static_cast<int>(gray_decode(col_code));
      const int py = static_cast<int>(gray_decode(row_code));
      if (px >= proj_w || py >= proj_h) continue;
      map.proj_x(y, x) = px;
      map.proj_y(y, x) = py;
      map.seen(y, x) = true;
    }
  }
  return map;
}

// ---------------------------------------------------------------------------
// Homography / projection matrix estimation

struct Homography {
  Mat3 matrix = Mat3::Identity();  // normalized so matrix(2,2) == 1 if nonzero

  Vec2 apply(const Vec2& p) const {
    const Vec3 q = matrix * Vec3(p.x(), p.y(), 1.0);
    if (std::abs(q.z()) < 1e-15)
      throw Error("homography maps point to infinity");
    return Vec2(q.x() / q.z(), q.y() / q.z());
  }
};

struct HomographyEstimate {
  Homography homography;
  double mean_reprojection_error = 0.0;
};

struct ProjectionMatrix {
  Mat34 matrix = Mat34::Zero();

  Vec2 apply(const Vec3& p) const {
    const Vec3 q = matrix * p.homogeneous();
    if (std::abs(q.z()) < 1e-15)
      throw Error("projection matrix maps point to infinity");
    return Vec2(q.x() / q.z(), q.y() / q.z());
  }
};

struct ProjectionEstimate {
  ProjectionMatrix projection;
  double rms_reprojection_error = 0.0;
};

namespace detail {

// Isotropic normalization: centroid to origin, mean distance sqrt(2) (2D)
// or sqrt(3) (3D).
inline Mat3 normalizing_transform_2d(const std::vector<Vec2>& pts) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  const double scale = mean_dist > 1e-15 ? std::sqrt(2.0) / mean_dist : 1.0;
  Mat3 t = Mat3::Identity();
  t(0, 0) = t(1, 1) = scale;
  t(0, 2) = -scale * centroid.x();
  t(1, 2) = -scale * centroid.y();
  return t;
}

inline Eigen::Matrix4d normalizing_transform_3d(const std::vector<Vec3>& pts) {
  Vec3 centroid = Vec3::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  const double scale = mean_dist > 1e-15 ? std::sqrt(3.0) / mean_dist : 1.0;
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  t.topLeftCorner<3, 3>() *= scale;
  t.topRightCorner<3, 1>() = -scale * centroid;
  return t;
}

inline bool has_collinear_triple(const std::vector<Vec2>& pts, double tol) {
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i + 2 < n; ++i)
    for (std::size_t j = i + 1; j + 1 < n; ++j)
      for (std::size_t k = j + 1; k < n; ++k) {
        const Vec2 a = pts[j] - pts[i];
        const Vec2 b = pts[k] - pts[i];
        const double cross = a.x() * b.y() - a.y() * b.x();
        const double scale = std::max({a.norm() * b.norm(), 1e-12});
        if (std::abs(cross) / scale < tol) return true;
      }
  return false;
}

}  // namespace detail

// DLT with isotropic normalization mapping src -> dst.
inline HomographyEstimate estimate_homography(const std::vector<Vec2>& src,
                                              const std::vector<Vec2>& dst) {
  if (src.size() != dst.size())
    throw Error("homography: source/destination count mismatch");
  if (src.size() < 4) throw Error("homography needs at least 4 pairs");
  // Checking all triples is fine at calibration scale (tens of landmarks).
  if (src.size() <= 64 && detail::has_collinear_triple(src, 1e-10))
    throw Error("rank-deficient: three source points are collinear");

  const Mat3 ts = detail::normalizing_transform_2d(src);
  const Mat3 td = detail::normalizing_transform_2d(dst);
  const std::size_t n = src.size();
  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 s = ts * Vec3(src[i].x(), src[i].y(), 1.0);
    const Vec3 d = td * Vec3(dst[i].x(), dst[i].y(), 1.0);
    const double x = s.x() / s.z(), y = s.y() / s.z();
    const double u = d.x() / d.z(), v = d.y() / d.z();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  if (svd.singularValues()(7) < 1e-9 * svd.singularValues()(0))
    throw Error("rank-deficient: degenerate homography configuration");
  const Eigen::VectorXd hvec = svd.matrixV().col(8);
  Mat3 hn;
  hn << hvec(0), hvec(1), hvec(2), hvec(3), hvec(4), hvec(5), hvec(6), hvec(7),
      hvec(8);
  Mat3 h = td.inverse() * hn * ts;
  if (std::abs(h.determinant()) <= 1e-12 * std::pow(h.norm(), 3))
    throw Error("rank-deficient: homography is singular");
  if (std::abs(h(2, 2)) > 1e-12) h /= h(2, 2);

  HomographyEstimate est;
  est.homography.matrix = h;
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    err += (est.homography.apply(src[i]) - dst[i]).norm();
  est.mean_reprojection_error = err / static_cast<double>(n);
  return est;
}

// DLT resectioning from 3D-2D correspondences.
inline ProjectionEstimate estimate_projection_matrix(
    const std::vector<Vec3>& world, const std::vector<Vec2>& image) {
  if (world.size() != image.size())
    throw Error("resection: world/image count mismatch");
  if (world.size() < 6) throw Error("resection needs at least 6 pairs");
  {
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : world) centroid += p;
    centroid /= static_cast<double>(world.size());
    Eigen::MatrixXd centered(world.size(), 3);
    for (std::size_t i = 0; i < world.size(); ++i)
      centered.row(i) = (world[i] - centroid).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> psvd(centered);
    if (psvd.singularValues()(2) < 1e-9 * psvd.singularValues()(0))
      throw Error("degenerate-landmarks: points are coplanar");
  }

  const Eigen::Matrix4d tw = detail::normalizing_transform_3d(world);
  const Mat3 ti = detail::normalizing_transform_2d(image);
  const std::size_t n = world.size();
  Eigen::MatrixXd a(2 * n, 12);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector4d w = tw * world[i].homogeneous();
    const Vec3 im = ti * Vec3(image[i].x(), image[i].y(), 1.0);
    const double u = im.x() / im.z(), v = im.y() / im.z();
    a.row(2 * i) << w(0), w(1), w(2), w(3), 0, 0, 0, 0, -u * w(0), -u * w(1),
        -u * w(2), -u * w(3);
    a.row(2 * i + 1) << 0, 0, 0, 0, w(0), w(1), w(2), w(3), -v * w(0),
        -v * w(1), -v * w(2), -v * w(3);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd pvec = svd.matrixV().col(11);
  Mat34 pn;
  pn.row(0) = pvec.segment<4>(0).transpose();
  pn.row(1) = pvec.segment<4>(4).transpose();
  pn.row(2) = pvec.segment<4>(8).transpose();
  Mat34 p = ti.inverse() * pn * tw;
  {
    Eigen::JacobiSVD<Mat3> lsvd(p.leftCols<3>());
    if (lsvd.singularValues()(2) < 1e-9 * lsvd.singularValues()(0))
      throw Error("degenerate-landmarks: projection has rank-deficient left block");
  }

  ProjectionEstimate est;
  est.projection.matrix = p;
  double err2 = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    err2 += (est.projection.apply(world[i]) - image[i]).squaredNorm();
  est.rms_reprojection_error = std::sqrt(err2 / static_cast<double>(n));
  return est;
}

// ---------------------------------------------------------------------------
// Radiometric response

// Device response: 8-bit input level -> normalized luminance. Default is a
// gamma curve; a measured lookup table takes precedence when present.
struct ResponseCurve {
  double gamma = 2.2;
  double max_output = 1.0;
  std::vector<double> lut;  // optional, 256 entries, monotone, lut[0]=0

  void validate() const {
    if (!(max_output > 0.0 && max_output <= 1.0))
      throw Error("response curve max_output must lie in (0,1]");
    if (gamma <= 0.0) throw Error("response curve gamma must be positive");
    if (!lut.empty()) {
      if (lut.size() != 256) throw Error("response LUT must have 256 entries");
      if (std::abs(lut.front()) > 1e-12 ||
          std::abs(lut.back() - max_output) > 1e-9)
        throw Error("response LUT must map 0 -> 0 and 255 -> max_output");
      for (std::size_t i = 1; i < lut.size(); ++i)
        if (lut[i] < lut[i - 1]) throw Error("response LUT must be monotone");
    }
  }

  double luminance(int level) const {
    if (level < 0 || level > 255) throw Error("input level outside 0..255");
    if (!lut.empty()) return lut[static_cast<std::size_t>(level)];
    return max_output * std::pow(level / 255.0, gamma);
  }
};

// Monotone inverse of the response curve, quantized to the nearest input
// level (ties round up).
inline int linearize(const ResponseCurve& curve, double desired_luminance) {
  curve.validate();
  if (desired_luminance < 0.0)
    throw Error("out-of-range: negative luminance requested");
  if (desired_luminance > curve.max_output + 1e-12)
    throw Error("out-of-range: luminance above max_output");
  if (!curve.lut.empty()) {
    int lo = 0, hi = 255;
    while (hi - lo > 1) {
      const int mid = (lo + hi) / 2;
      if (curve.lut[mid] < desired_luminance)
        lo = mid;
      else
        hi = mid;
    }
    const double dlo = std::abs(curve.lut[lo] - desired_luminance);
    const double dhi = std::abs(curve.lut[hi] - desired_luminance);
    return dhi <= dlo ? hi : lo;
  }
  const double frac =
      std::pow(std::min(desired_luminance / curve.max_output, 1.0),
               1.0 / curve.gamma);
  return static_cast<int>(std::lround(255.0 * frac));
}

inline double delinearize(const ResponseCurve& curve, int level) {
  return curve.luminance(level);
}

}  // namespace sapmap

#endif  // SAPMAP_CALIBRATION_HPP
