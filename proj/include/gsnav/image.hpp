#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace gsnav {

// Planar-free interleaved double image; channels is 1 (scalar) or 3 (rgb).
struct ImageD {
  int width = 0, height = 0, channels = 1;
  std::vector<double> data;

  static ImageD zeros(int w, int h, int c = 1) {
    ImageD img;
    img.width = w;
    img.height = h;
    img.channels = c;
    img.data.assign(size_t(w) * h * c, 0.0);
    return img;
  }
  double& at(int x, int y, int c = 0) {
    return data[(size_t(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c = 0) const {
    return data[(size_t(y) * width + x) * channels + c];
  }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  size_t pixel_count() const { return size_t(width) * height; }
  bool same_shape(const ImageD& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

struct Image8 {
  int width = 0, height = 0;
  std::vector<uint8_t> rgb;  // 3 bytes per pixel

  static Image8 filled(int w, int h, uint8_t r, uint8_t g, uint8_t b) {
    Image8 img;
    img.width = w;
    img.height = h;
    img.rgb.resize(size_t(w) * h * 3);
    for (size_t i = 0; i < img.rgb.size(); i += 3) {
      img.rgb[i] = r;
      img.rgb[i + 1] = g;
      img.rgb[i + 2] = b;
    }
    return img;
  }
  void set(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
    if (x < 0 || x >= width || y < 0 || y >= height) return;
    size_t i = (size_t(y) * width + x) * 3;
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }
  const uint8_t* pixel(int x, int y) const {
    return &rgb[(size_t(y) * width + x) * 3];
  }
};

inline uint8_t to_byte(double v) {
  return uint8_t(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
}

inline Image8 to_image8(const ImageD& color) {
  Image8 img;
  img.width = color.width;
  img.height = color.height;
  img.rgb.resize(color.pixel_count() * 3);
  for (int y = 0; y < color.height; ++y)
    for (int x = 0; x < color.width; ++x)
      for (int c = 0; c < 3; ++c)
        img.rgb[(size_t(y) * color.width + x) * 3 + c] =
            to_byte(color.channels == 3 ? color.at(x, y, c) : color.at(x, y));
  return img;
}

// Nearest-neighbor resize, used for composing prompt tiles.
inline Image8 scale_nearest(const Image8& src, int w, int h) {
  Image8 out;
  out.width = w;
  out.height = h;
  out.rgb.resize(size_t(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    int sy = std::min(src.height - 1, int(int64_t(y) * src.height / h));
    for (int x = 0; x < w; ++x) {
      int sx = std::min(src.width - 1, int(int64_t(x) * src.width / w));
      const uint8_t* p = src.pixel(sx, sy);
      size_t i = (size_t(y) * w + x) * 3;
      out.rgb[i] = p[0];
      out.rgb[i + 1] = p[1];
      out.rgb[i + 2] = p[2];
    }
  }
  return out;
}

}  // namespace gsnav
