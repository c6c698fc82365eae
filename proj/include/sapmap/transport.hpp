#ifndef SAPMAP_TRANSPORT_HPP
#define SAPMAP_TRANSPORT_HPP

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sapmap/image.hpp"
#include "sapmap/scene.hpp"

namespace sapmap {

inline constexpr int kMergedProvenance = -1;

// Sparse light transport from one projector's input image to the camera
// image: rows index camera pixels, columns index projector pixels, both in
// row-major (y*width + x) order. Entries are non-negative light fractions.
template <class Scalar>
struct TransportMatrix {
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> weights;
  int camera_width = 0;
  int camera_height = 0;
  int source_width = 0;
  int source_height = 0;
  int provenance = kMergedProvenance;  // projector id, or merged
  int row_cap = 64;
  bool empty_warning = false;

  Eigen::Index rows() const { return weights.rows(); }
  Eigen::Index cols() const { return weights.cols(); }
  Eigen::Index nonZeros() const { return weights.nonZeros(); }
  bool same_shape(const TransportMatrix& other) const {
    return camera_width == other.camera_width &&
           camera_height == other.camera_height &&
           source_width == other.source_width &&
           source_height == other.source_height;
  }
};

using Transport = TransportMatrix<double>;

struct TransportOptions {
  bool include_occluders = true;
  // When false every surviving ray carries unit weight; the equal-weight
  // mode used by the symmetry and oracle test scenes.
  bool radiometric = true;
  int row_cap = 64;
};

namespace detail {

// cos(incidence) / distance^2 for the surface point seen along `ray`.
inline double attenuation_at(const SurfaceHit& hit, const Vec3& source) {
  const Vec3 to_source = source - hit.point;
  const double dist2 = to_source.squaredNorm();
  if (dist2 < 1e-24) return 0.0;
  const double cosine = hit.normal.dot(to_source) / std::sqrt(dist2);
  return std::max(cosine, 0.0) / dist2;
}

// Attenuation of `projector` at its principal-axis hit, used as the
// normalization reference.
inline double principal_attenuation(const ProjectorModel& projector,
                                    const TargetSurface& target) {
  const Vec2 principal(projector.intrinsics.cx, projector.intrinsics.cy);
  const auto hit = cast_to_target(projector, principal, target);
  if (!hit) return 1.0;
  return attenuation_at(*hit, projector.center());
}

}  // namespace detail

// Reference projector for radiometric normalization: the row-major center of
// the array.
inline const ProjectorModel& center_projector(const Scene& scene) {
  return scene.projectors[(scene.projectors.size() - 1) / 2];
}

// Discretized light transport for one projector: each projector pixel's
// footprint quad is clipped against the camera pixel grid (Sutherland-
// Hodgman), entry = footprint area fraction x radiometric term x unblocked
// ray fraction. Occlusion samples the footprint center plus its 4 corners.
template <class Scalar = double>
TransportMatrix<Scalar> build_transport(const Scene& scene, int projector_id,
                                        const TransportOptions& options = {}) {
  const ProjectorModel& projector = scene.projector(projector_id);
  const int cw = scene.camera.width;
  const int ch = scene.camera.height;

  TransportMatrix<Scalar> out;
  out.camera_width = cw;
  out.camera_height = ch;
  out.source_width = projector.width;
  out.source_height = projector.height;
  out.provenance = projector_id;
  out.row_cap = options.row_cap;
  out.weights.resize(static_cast<Eigen::Index>(cw) * ch,
                     static_cast<Eigen::Index>(projector.width) *
                         projector.height);

  const double ref_attenuation =
      options.radiometric
          ? detail::principal_attenuation(center_projector(scene), scene.target)
          : 1.0;

  std::vector<Eigen::Triplet<Scalar>> triplets;
  std::vector<int> row_counts(static_cast<std::size_t>(cw) * ch, 0);

  for (int py = 0; py < projector.height; ++py) {
    for (int px = 0; px < projector.width; ++px) {
      const std::array<Vec2, 4> corners = {Vec2(px, py), Vec2(px + 1, py),
                                           Vec2(px + 1, py + 1),
                                           Vec2(px, py + 1)};
      std::array<SurfaceHit, 4> corner_hits;
      bool on_target = true;
      for (int k = 0; k < 4 && on_target; ++k) {
        const auto hit = cast_to_target(projector, corners[k], scene.target);
        if (!hit) on_target = false;
        else corner_hits[k] = *hit;
      }
      const auto center_hit = cast_to_target(
          projector, Vec2(px + 0.5, py + 0.5), scene.target);
      if (!on_target || !center_hit) continue;  // off-target pixel

      double weight = 1.0;
      if (options.radiometric) {
        const double a = detail::attenuation_at(*center_hit, projector.center());
        weight = ref_attenuation > 0.0 ? a / ref_attenuation : 0.0;
      }
      if (options.include_occluders && !scene.occluders.empty()) {
        int unblocked = 0;
        if (!segment_blocked(center_hit->point, projector.center(),
                             scene.occluders))
          ++unblocked;
        for (int k = 0; k < 4; ++k)
          if (!segment_blocked(corner_hits[k].point, projector.center(),
                               scene.occluders))
            ++unblocked;
        weight *= unblocked / 5.0;
      }
      if (weight <= 0.0) continue;

      std::vector<Vec2> quad;
      quad.reserve(4);
      for (int k = 0; k < 4; ++k)
        quad.push_back(project_point(scene.camera, corner_hits[k].point));
      const double quad_area = polygon_area(quad);
      if (quad_area <= 0.0) continue;

      double min_x = quad[0].x(), max_x = quad[0].x();
      double min_y = quad[0].y(), max_y = quad[0].y();
      for (const auto& q : quad) {
        min_x = std::min(min_x, q.x());
        max_x = std::max(max_x, q.x());
        min_y = std::min(min_y, q.y());
        max_y = std::max(max_y, q.y());
      }
      const int qx0 = std::max(0, static_cast<int>(std::floor(min_x)));
      const int qx1 = std::min(cw - 1, static_cast<int>(std::ceil(max_x)) - 1 +
                                           (max_x == std::floor(max_x) ? 0 : 1));
      const int qy0 = std::max(0, static_cast<int>(std::floor(min_y)));
      const int qy1 = std::min(ch - 1, static_cast<int>(std::ceil(max_y)) - 1 +
                                           (max_y == std::floor(max_y) ? 0 : 1));
      const Eigen::Index col =
          static_cast<Eigen::Index>(py) * projector.width + px;
      for (int qy = qy0; qy <= qy1; ++qy) {
        for (int qx = qx0; qx <= qx1; ++qx) {
          const auto clipped =
              clip_polygon_to_rect(quad, qx, qy, qx + 1.0, qy + 1.0);
          if (clipped.size() < 3) continue;
          const double fraction = polygon_area(clipped) / quad_area;
          if (fraction <= 0.0) continue;
          const Eigen::Index row = static_cast<Eigen::Index>(qy) * cw + qx;
          if (++row_counts[static_cast<std::size_t>(row)] > options.row_cap)
            throw Error("footprint-cap: camera row " + std::to_string(row) +
                        " exceeds " + std::to_string(options.row_cap) +
                        " entries");
          triplets.emplace_back(row, col,
                                static_cast<Scalar>(fraction * weight));
        }
      }
    }
  }

  out.weights.setFromTriplets(triplets.begin(), triplets.end());
  out.empty_warning = triplets.empty();
  return out;
}

template <class Scalar>
TransportMatrix<Scalar> merge_transport(
    const std::vector<TransportMatrix<Scalar>>& parts) {
  if (parts.empty()) throw Error("merge_transport: empty part list");
  TransportMatrix<Scalar> out;
  out.camera_width = parts.front().camera_width;
  out.camera_height = parts.front().camera_height;
  out.source_width = parts.front().source_width;
  out.source_height = parts.front().source_height;
  out.provenance = kMergedProvenance;
  out.row_cap = 0;
  out.weights = parts.front().weights;
  out.empty_warning = parts.front().empty_warning;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!parts[i].same_shape(out))
      throw Error("merge_transport: shape mismatch at part " +
                  std::to_string(i));
    out.row_cap += parts[i].row_cap;
    if (i > 0) {
      out.weights += parts[i].weights;
      out.empty_warning = out.empty_warning && parts[i].empty_warning;
    }
  }
  return out;
}

// Forward model: camera image of a projector showing `input`. Values may
// exceed 1; normalization is the caller's decision.
template <class Scalar>
ImageT<Scalar> apply_transport(const TransportMatrix<Scalar>& transport,
                               const ImageT<Scalar>& input) {
  if (input.rows() != transport.source_height ||
      input.cols() != transport.source_width)
    throw Error("apply_transport: input dimensions do not match transport");
  const VecT<Scalar> result =
      transport.weights * image_as_vector<Scalar>(input);
  return image_from_vector<Scalar>(result, transport.camera_height,
                                   transport.camera_width);
}

// Scale s such that the combined forward brightness of `parts` showing
// s * inputs[i] matches the reference configuration's mean brightness.
template <class Scalar>
Scalar normalize_brightness(const std::vector<ImageT<Scalar>>& inputs,
                            const ImageT<Scalar>& reference_input,
                            const std::vector<TransportMatrix<Scalar>>& parts,
                            const TransportMatrix<Scalar>& reference) {
  if (inputs.size() != parts.size())
    throw Error("normalize_brightness: one input per transport required");
  const Scalar ref_mean =
      apply_transport(reference, reference_input).mean();
  if (!(ref_mean > Scalar(0)))
    throw Error("zero-brightness reference configuration");
  ImageT<Scalar> combined = ImageT<Scalar>::Zero(parts.front().camera_height,
                                                 parts.front().camera_width);
  for (std::size_t i = 0; i < parts.size(); ++i)
    combined += apply_transport(parts[i], inputs[i]);
  const Scalar mean = combined.mean();
  if (!(mean > Scalar(0)))
    throw Error("zero-brightness candidate configuration");
  return ref_mean / mean;
}

}  // namespace sapmap

#endif  // SAPMAP_TRANSPORT_HPP
