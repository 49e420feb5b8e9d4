#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "beltpick/error.hpp"
#include "beltpick/geometry.hpp"

namespace beltpick {

/// Row-major image. Index (u, v) is column u, row v.
template <class T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, const T& fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 0 || height < 0) throw Error(Errc::kInvalidArgument, "negative raster size");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(int w, int h) const { return w == width_ && h == height_; }
  template <class U>
  bool same_shape(const Raster<U>& o) const {
    return o.width() == width_ && o.height() == height_;
  }

  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width_ + u; }
  bool inside(int u, int v) const { return u >= 0 && v >= 0 && u < width_ && v < height_; }

  T& operator()(int u, int v) { return data_[index(u, v)]; }
  const T& operator()(int u, int v) const { return data_[index(u, v)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool operator==(const Raster& o) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Camera-frame z in mm; 0 marks "no measurement".
using DepthMap = Raster<double>;
inline constexpr double kInvalidDepth = 0.0;

// Instance id per pixel; 0 is belt or background.
using InstanceMask = Raster<std::uint32_t>;

struct SealMap {
  Raster<double> value;       // [0, 1], 0 where invalid
  Raster<std::uint8_t> valid;

  SealMap() = default;
  SealMap(int w, int h) : value(w, h, 0.0), valid(w, h, 0) {}
};

struct NormalMap {
  Raster<Vec3> normal;  // unit where valid, zero elsewhere
  Raster<std::uint8_t> valid;

  NormalMap() = default;
  NormalMap(int w, int h) : normal(w, h, Vec3::Zero()), valid(w, h, 0) {}
};

}  // namespace beltpick
