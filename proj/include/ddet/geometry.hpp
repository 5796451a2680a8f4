#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddet/errors.hpp"

namespace ddet {

// Sensor frame: x right, y down, z forward into the scene. Units are meters.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3& a, const Point3& b) {
    return a.x == b.x && a.y == b.y && a.z == b.z;
  }
};

inline bool is_finite(const Point3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb& a, const Rgb& b) {
    return a.r == b.r && a.g == b.g && a.b == b.b;
  }
};

struct PointCloud {
  std::vector<Point3> points;
  // If present, exactly one color per point.
  std::optional<std::vector<Rgb>> colors;

  std::size_t size() const { return points.size(); }
  bool has_colors() const { return colors.has_value(); }
};

// Row-major RGB image, 8 bits per channel.
class Image {
 public:
  Image() = default;
  Image(int w, int h, Rgb fill = Rgb{0, 0, 0}) : width_(w), height_(h) {
    if (w <= 0 || h <= 0) throw ValueError("image dimensions must be positive");
    pixels_.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
      pixels_[i] = fill.r;
      pixels_[i + 1] = fill.g;
      pixels_[i + 2] = fill.b;
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }

  Rgb get(int x, int y) const {
    std::size_t i = index(x, y);
    return Rgb{pixels_[i], pixels_[i + 1], pixels_[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    std::size_t i = index(x, y);
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
  }

  const std::vector<std::uint8_t>& bytes() const { return pixels_; }
  std::vector<std::uint8_t>& bytes() { return pixels_; }

  friend bool operator==(const Image& a, const Image& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.pixels_ == b.pixels_;
  }

 private:
  std::size_t index(int x, int y) const {
    if (!in_bounds(x, y)) throw BoundsError("pixel access out of bounds");
    return (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Axis-aligned pixel rectangle, inclusive min / exclusive max.
// Zero-area boxes are rejected at construction.
struct BBox2D {
  int x_min;
  int y_min;
  int x_max;
  int y_max;

  BBox2D(int x0, int y0, int x1, int y1) : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {
    if (x_min >= x_max || y_min >= y_max)
      throw ValueError("bbox must have positive area: [" + std::to_string(x0) + "," +
                       std::to_string(y0) + "," + std::to_string(x1) + "," +
                       std::to_string(y1) + "]");
  }

  int width() const { return x_max - x_min; }
  int height() const { return y_max - y_min; }
  long long area() const { return static_cast<long long>(width()) * height(); }
  bool contains(int px, int py) const {
    return px >= x_min && px < x_max && py >= y_min && py < y_max;
  }

  friend bool operator==(const BBox2D& a, const BBox2D& b) {
    return a.x_min == b.x_min && a.y_min == b.y_min && a.x_max == b.x_max &&
           a.y_max == b.y_max;
  }
};

}  // namespace ddet
