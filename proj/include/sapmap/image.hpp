#ifndef SAPMAP_IMAGE_HPP
#define SAPMAP_IMAGE_HPP

#include <Eigen/Dense>

#include "sapmap/geometry.hpp"

namespace sapmap {

// A grayscale image is a row-major matrix: rows = height, cols = width.
// Intensities are normalized to [0,1]; camera-space results of a forward
// transport may exceed 1 before explicit normalization.
template <class Scalar>
using ImageT =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Image = ImageT<double>;

template <class Scalar>
using VecT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Pixel (x, y) of an image with width w lives at flat index y*w + x, which
// for the row-major storage above is simply the linear data offset.
template <class Scalar>
Eigen::Map<const VecT<Scalar>> image_as_vector(const ImageT<Scalar>& img) {
  return Eigen::Map<const VecT<Scalar>>(img.data(), img.size());
}

template <class Scalar>
ImageT<Scalar> image_from_vector(const VecT<Scalar>& v, Eigen::Index height,
                                 Eigen::Index width) {
  if (v.size() != height * width)
    throw Error("image_from_vector: size mismatch");
  return Eigen::Map<const ImageT<Scalar>>(v.data(), height, width);
}

template <class Scalar>
ImageT<Scalar> clamped01(const ImageT<Scalar>& img) {
  return img.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
}

inline Image constant_image(Eigen::Index height, Eigen::Index width,
                            double value) {
  return Image::Constant(height, width, value);
}

}  // namespace sapmap

#endif  // SAPMAP_IMAGE_HPP
