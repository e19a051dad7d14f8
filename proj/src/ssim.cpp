#include "gsnav/ssim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace gsnav {

namespace {

constexpr double kC1 = 1e-4;  // (0.01)^2 on unit-range images
constexpr double kC2 = 9e-4;  // (0.03)^2

template <class F>
std::vector<double> build_integral(int W, int H, F f) {
  std::vector<double> s(size_t(W + 1) * (H + 1), 0.0);
  for (int y = 0; y < H; ++y) {
    double row = 0;
    for (int x = 0; x < W; ++x) {
      row += f(x, y);
      s[size_t(y + 1) * (W + 1) + x + 1] = s[size_t(y) * (W + 1) + x + 1] + row;
    }
  }
  return s;
}

inline double rect_sum(const std::vector<double>& s, int W, int x0, int y0,
                       int x1, int y1) {  // inclusive corners
  return s[size_t(y1 + 1) * (W + 1) + x1 + 1] -
         s[size_t(y0) * (W + 1) + x1 + 1] -
         s[size_t(y1 + 1) * (W + 1) + x0] + s[size_t(y0) * (W + 1) + x0];
}

// Windows are indexed by their top-left corner; x0 in [0, W-wx].
struct ChannelResult {
  double mean = 0;
};

ChannelResult ssim_channel(const ImageD& a, const ImageD& b, int ch,
                           int window, ImageD* grad) {
  const int W = a.width, H = a.height;
  const int wx = std::min(window, W), wy = std::min(window, H);
  const int nx = W - wx + 1, ny = H - wy + 1;
  const double n = double(wx) * wy;

  auto ia = build_integral(W, H, [&](int x, int y) { return a.at(x, y, ch); });
  auto ib = build_integral(W, H, [&](int x, int y) { return b.at(x, y, ch); });
  auto iaa = build_integral(
      W, H, [&](int x, int y) { return a.at(x, y, ch) * a.at(x, y, ch); });
  auto ibb = build_integral(
      W, H, [&](int x, int y) { return b.at(x, y, ch) * b.at(x, y, ch); });
  auto iab = build_integral(
      W, H, [&](int x, int y) { return a.at(x, y, ch) * b.at(x, y, ch); });

  ImageD g1, g2, g3;
  if (grad) {
    g1 = ImageD::zeros(nx, ny);
    g2 = ImageD::zeros(nx, ny);
    g3 = ImageD::zeros(nx, ny);
  }

  double sum = 0;
  for (int y0 = 0; y0 < ny; ++y0) {
    for (int x0 = 0; x0 < nx; ++x0) {
      const int x1 = x0 + wx - 1, y1 = y0 + wy - 1;
      const double mx = rect_sum(ia, W, x0, y0, x1, y1) / n;
      const double my = rect_sum(ib, W, x0, y0, x1, y1) / n;
      const double mxx = rect_sum(iaa, W, x0, y0, x1, y1) / n;
      const double myy = rect_sum(ibb, W, x0, y0, x1, y1) / n;
      const double mxy = rect_sum(iab, W, x0, y0, x1, y1) / n;
      const double sxy = mxy - mx * my;
      const double sx2 = mxx - mx * mx;
      const double sy2 = myy - my * my;
      const double a1 = 2 * mx * my + kC1;
      const double a2 = 2 * sxy + kC2;
      const double b1 = mx * mx + my * my + kC1;
      const double b2 = sx2 + sy2 + kC2;
      const double s = (a1 * a2) / (b1 * b2);
      sum += s;
      if (grad) {
        g1.at(x0, y0) = 2 * my * (a2 - a1) / (b1 * b2) -
                        2 * mx * s * (1.0 / b1 - 1.0 / b2);
        g2.at(x0, y0) = -s / b2;
        g3.at(x0, y0) = 2 * a1 / (b1 * b2);
      }
    }
  }
  const double count = double(nx) * ny;

  if (grad) {
    auto ig1 = build_integral(nx, ny, [&](int x, int y) { return g1.at(x, y); });
    auto ig2 = build_integral(nx, ny, [&](int x, int y) { return g2.at(x, y); });
    auto ig3 = build_integral(nx, ny, [&](int x, int y) { return g3.at(x, y); });
    const double norm = 1.0 / (count * n);
    for (int y = 0; y < H; ++y) {
      const int py0 = std::max(0, y - wy + 1), py1 = std::min(ny - 1, y);
      if (py0 > py1) continue;
      for (int x = 0; x < W; ++x) {
        const int px0 = std::max(0, x - wx + 1), px1 = std::min(nx - 1, x);
        if (px0 > px1) continue;
        const double s1 = rect_sum(ig1, nx, px0, py0, px1, py1);
        const double s2 = rect_sum(ig2, nx, px0, py0, px1, py1);
        const double s3 = rect_sum(ig3, nx, px0, py0, px1, py1);
        grad->at(x, y, ch) +=
            norm * (s1 + 2 * a.at(x, y, ch) * s2 + b.at(x, y, ch) * s3);
      }
    }
  }
  return {sum / count};
}

void check_shapes(const ImageD& a, const ImageD& b) {
  if (!a.same_shape(b) || a.width < 1 || a.height < 1)
    throw std::invalid_argument("ssim: image shape mismatch");
}

}  // namespace

double ssim_mean(const ImageD& a, const ImageD& b, int window) {
  check_shapes(a, b);
  double total = 0;
  for (int c = 0; c < a.channels; ++c)
    total += ssim_channel(a, b, c, window, nullptr).mean;
  return total / a.channels;
}

ImageD ssim_gradient(const ImageD& a, const ImageD& b, int window) {
  check_shapes(a, b);
  ImageD grad = ImageD::zeros(a.width, a.height, a.channels);
  for (int c = 0; c < a.channels; ++c) ssim_channel(a, b, c, window, &grad);
  for (double& v : grad.data) v /= a.channels;
  return grad;
}

}  // namespace gsnav
