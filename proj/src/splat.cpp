#include "gsnav/splat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "gsnav/ssim.hpp"

namespace gsnav {

std::optional<ProjectedSplat> project_gaussian(const GaussianPrimitive& g,
                                               const Pose& pose,
                                               const CameraIntrinsics& k) {
  const Vec3 p = pose.to_camera(g.position);
  const double z = p.z();
  if (z <= kNearPlane) return std::nullopt;

  Eigen::Matrix<double, 2, 3> jac;
  jac << k.fx / z, 0, -k.fx * p.x() / (z * z),
         0, k.fy / z, -k.fy * p.y() / (z * z);
  const Mat3 r_cw = pose.rotation.toRotationMatrix();
  const Mat3 cov_cam = r_cw * g.covariance() * r_cw.transpose();
  Mat2 cov2d = jac * cov_cam * jac.transpose();
  cov2d = 0.5 * (cov2d + cov2d.transpose()).eval();

  ProjectedSplat out;
  out.mean2d = Vec2(k.fx * p.x() / z + k.cx, k.fy * p.y() / z + k.cy);
  out.cov2d = cov2d;
  out.depth = z;
  return out;
}

namespace {

struct PreparedSplat {
  Vec2 mean;
  Mat2 invcov;
  double depth;
  int x0, x1, y0, y1;
  uint32_t index;  // into map primitives
};

std::vector<PreparedSplat> prepare_splats(const GaussianMap& map,
                                          const Pose& pose,
                                          const CameraIntrinsics& k,
                                          const RenderOptions& opt) {
  std::vector<PreparedSplat> out;
  out.reserve(map.size());
  // EWA linearizes the projection at the splat mean, which is meaningless
  // for means far outside the viewing cone: near the image plane the
  // jacobian blows the footprint up to frame size and smears the splat
  // across every pixel. Cull against a 1.3x dilated frustum instead.
  const double tx = 0.65 * k.width / k.fx, ty = 0.65 * k.height / k.fy;
  for (size_t i = 0; i < map.size(); ++i) {
    const GaussianPrimitive& g = map.at(i);
    const Vec3 p = pose.to_camera(g.position);
    if (p.z() <= kNearPlane) continue;
    if (std::abs(p.x()) > p.z() * tx || std::abs(p.y()) > p.z() * ty) continue;
    auto proj = project_gaussian(g, pose, k);
    if (!proj) continue;
    const double a = proj->cov2d(0, 0), b = proj->cov2d(0, 1),
                 c = proj->cov2d(1, 1);
    const double det = a * c - b * b;
    if (det <= 1e-14 || a <= 0 || c <= 0) continue;
    PreparedSplat s;
    s.invcov << c / det, -b / det, -b / det, a / det;
    const double lmax =
        0.5 * (a + c) + std::sqrt(std::max(0.25 * (a - c) * (a - c) + b * b, 0.0));
    const double r = opt.sigma_cutoff * std::sqrt(std::max(lmax, 0.0)) + 0.5;
    s.x0 = std::max(0, int(std::ceil(proj->mean2d.x() - r)));
    s.x1 = std::min(k.width - 1, int(std::floor(proj->mean2d.x() + r)));
    s.y0 = std::max(0, int(std::ceil(proj->mean2d.y() - r)));
    s.y1 = std::min(k.height - 1, int(std::floor(proj->mean2d.y() + r)));
    if (s.x0 > s.x1 || s.y0 > s.y1) continue;
    s.mean = proj->mean2d;
    s.depth = proj->depth;
    s.index = uint32_t(i);
    out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const PreparedSplat& l,
                                       const PreparedSplat& r) {
    return l.depth != r.depth ? l.depth < r.depth : l.index < r.index;
  });
  return out;
}

// sigma of one splat at one pixel, or 0 when below the contribution floor.
inline double splat_alpha(const PreparedSplat& s, double opacity, int x, int y,
                          const RenderOptions& opt) {
  const double dx = x - s.mean.x(), dy = y - s.mean.y();
  const double q = s.invcov(0, 0) * dx * dx + 2 * s.invcov(0, 1) * dx * dy +
                   s.invcov(1, 1) * dy * dy;
  if (q > opt.sigma_cutoff * opt.sigma_cutoff) return 0.0;
  const double sigma = opacity * std::exp(-0.5 * q);
  if (sigma < opt.alpha_min) return 0.0;
  return std::min(sigma, 0.999);
}

void composite(const std::vector<PreparedSplat>& splats,
               const GaussianMap& map, const RenderOptions& opt,
               RenderedView* view) {
  const int W = view->intrinsics.width, H = view->intrinsics.height;
  std::vector<double> trans(size_t(W) * H, 1.0);
  for (const auto& s : splats) {
    const GaussianPrimitive& g = map.at(s.index);
    for (int y = s.y0; y <= s.y1; ++y) {
      for (int x = s.x0; x <= s.x1; ++x) {
        double& t = trans[size_t(y) * W + x];
        if (t <= 0) continue;
        const double sigma = splat_alpha(s, g.opacity, x, y, opt);
        if (sigma <= 0) continue;
        const double w = sigma * t;
        view->color.at(x, y, 0) += w * g.color.x();
        view->color.at(x, y, 1) += w * g.color.y();
        view->color.at(x, y, 2) += w * g.color.z();
        view->depth.at(x, y) += w * s.depth;
        view->opacity.at(x, y) += w;
        t *= (1.0 - sigma);
        if (t < opt.min_transmittance) t = 0.0;
      }
    }
  }
}

}  // namespace

RenderedView render(const GaussianMap& map, const Pose& pose,
                    const CameraIntrinsics& k, const RenderOptions& opt) {
  if (!k.valid()) throw std::invalid_argument("render: bad intrinsics");
  RenderedView view;
  view.pose = pose;
  view.intrinsics = k;
  view.color = ImageD::zeros(k.width, k.height, 3);
  view.depth = ImageD::zeros(k.width, k.height, 1);
  view.opacity = ImageD::zeros(k.width, k.height, 1);
  composite(prepare_splats(map, pose, k, opt), map, opt, &view);
  return view;
}

MutationSummary integrate_observation(GaussianMap& map, const ImageD& rgb,
                                      const ImageD& depth, const Pose& pose,
                                      const CameraIntrinsics& k, int stride,
                                      double dedup_voxel, double max_range) {
  if (stride < 1) throw std::invalid_argument("integrate: stride must be >= 1");
  if (rgb.width != k.width || rgb.height != k.height || rgb.channels != 3 ||
      depth.width != k.width || depth.height != k.height ||
      depth.channels != 1)
    throw std::invalid_argument("integrate: frame shape mismatch");

  std::unordered_set<uint64_t> occupied;
  auto voxel_key = [&](const Vec3& p) {
    auto q = [&](double v) {
      return uint64_t(int64_t(std::floor(v / dedup_voxel)) + (1 << 20)) &
             0x1fffff;
    };
    return q(p.x()) | (q(p.y()) << 21) | (q(p.z()) << 42);
  };
  if (dedup_voxel > 0)
    for (const auto& g : map.primitives()) occupied.insert(voxel_key(g.position));

  MutationSummary out;
  for (int v = stride / 2; v < k.height; v += stride) {
    for (int u = stride / 2; u < k.width; u += stride) {
      const double z = depth.at(u, v);
      if (!std::isfinite(z) || z <= kNearPlane || z >= max_range) continue;
      const Vec3 p_cam((u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z);
      const Vec3 p_world = pose.to_world(p_cam);
      if (dedup_voxel > 0 && !occupied.insert(voxel_key(p_world)).second) {
        ++out.rejected;
        continue;
      }
      GaussianPrimitive g;
      g.position = p_world;
      g.opacity = 0.9;
      g.color = Vec3(std::clamp(rgb.at(u, v, 0), 0.0, 1.0),
                     std::clamp(rgb.at(u, v, 1), 0.0, 1.0),
                     std::clamp(rgb.at(u, v, 2), 0.0, 1.0));
      const double s = z * stride / (2.0 * k.fx);
      g.scale = Vec3(s, s, s);
      map.add(g);
      ++out.added;
    }
  }
  out.revision = map.revision();
  return out;
}

namespace {

struct LossTerms {
  double total;
  ImageD d_color;  // dL/d(rendered color)
  ImageD d_depth;  // dL/d(rendered depth)
};

double loss_only(const RenderedView& view, const ImageD& rgb_gt,
                 const ImageD& depth_gt, const MapOptConfig& cfg) {
  const double npix = double(view.color.pixel_count());
  double mse_photo = 0, mse_depth = 0;
  for (size_t i = 0; i < view.color.data.size(); ++i) {
    const double d = view.color.data[i] - rgb_gt.data[i];
    mse_photo += d * d;
  }
  mse_photo /= npix * 3;
  for (size_t i = 0; i < view.depth.data.size(); ++i) {
    const double d = view.depth.data[i] - depth_gt.data[i];
    mse_depth += d * d;
  }
  mse_depth /= npix;
  const double ssim = ssim_mean(view.color, rgb_gt);
  return cfg.photo_weight *
             (cfg.ssim_mix * mse_photo + (1 - cfg.ssim_mix) * (1 - ssim)) +
         cfg.depth_weight * mse_depth;
}

LossTerms loss_with_pixel_grads(const RenderedView& view, const ImageD& rgb_gt,
                                const ImageD& depth_gt,
                                const MapOptConfig& cfg) {
  LossTerms out;
  out.total = loss_only(view, rgb_gt, depth_gt, cfg);
  const double npix = double(view.color.pixel_count());
  out.d_color = ImageD::zeros(view.color.width, view.color.height, 3);
  out.d_depth = ImageD::zeros(view.depth.width, view.depth.height, 1);
  const ImageD ssim_g = ssim_gradient(view.color, rgb_gt);
  for (size_t i = 0; i < out.d_color.data.size(); ++i) {
    out.d_color.data[i] =
        cfg.photo_weight *
        (cfg.ssim_mix * 2.0 * (view.color.data[i] - rgb_gt.data[i]) /
             (npix * 3) -
         (1 - cfg.ssim_mix) * ssim_g.data[i]);
  }
  for (size_t i = 0; i < out.d_depth.data.size(); ++i) {
    out.d_depth.data[i] = cfg.depth_weight * 2.0 *
                          (view.depth.data[i] - depth_gt.data[i]) / npix;
  }
  return out;
}

}  // namespace

double map_loss(const GaussianMap& map, const ImageD& rgb_gt,
                const ImageD& depth_gt, const Pose& pose,
                const CameraIntrinsics& k, const MapOptConfig& cfg) {
  if (map.size() == 0) throw std::invalid_argument("map_loss: empty map");
  return loss_only(render(map, pose, k), rgb_gt, depth_gt, cfg);
}

double refine_map(GaussianMap& map, const ImageD& rgb_gt,
                  const ImageD& depth_gt, const Pose& pose,
                  const CameraIntrinsics& k, const MapOptConfig& cfg) {
  if (map.size() == 0) throw std::invalid_argument("refine: empty map");
  if (rgb_gt.width != k.width || rgb_gt.height != k.height ||
      rgb_gt.channels != 3 || depth_gt.width != k.width ||
      depth_gt.height != k.height)
    throw std::invalid_argument("refine: frame shape mismatch");
  if (cfg.iterations <= 0)  // pure evaluation, map untouched
    return map_loss(map, rgb_gt, depth_gt, pose, k, cfg);

  const RenderOptions opt;
  const auto splats = prepare_splats(map, pose, k, opt);
  const int W = k.width, H = k.height;
  const size_t n = map.size();

  std::vector<Vec3> colors(n);
  std::vector<double> opacities(n);
  for (size_t i = 0; i < n; ++i) {
    colors[i] = map.at(i).color;
    opacities[i] = map.at(i).opacity;
  }

  // forward over the cached projections with candidate params
  auto forward = [&](const std::vector<Vec3>& cs,
                     const std::vector<double>& os) {
    RenderedView view;
    view.pose = pose;
    view.intrinsics = k;
    view.color = ImageD::zeros(W, H, 3);
    view.depth = ImageD::zeros(W, H, 1);
    view.opacity = ImageD::zeros(W, H, 1);
    std::vector<double> trans(size_t(W) * H, 1.0);
    for (const auto& s : splats) {
      const double op = os[s.index];
      const Vec3& col = cs[s.index];
      for (int y = s.y0; y <= s.y1; ++y)
        for (int x = s.x0; x <= s.x1; ++x) {
          double& t = trans[size_t(y) * W + x];
          if (t <= 0) continue;
          const double sigma = splat_alpha(s, op, x, y, opt);
          if (sigma <= 0) continue;
          const double w = sigma * t;
          view.color.at(x, y, 0) += w * col.x();
          view.color.at(x, y, 1) += w * col.y();
          view.color.at(x, y, 2) += w * col.z();
          view.depth.at(x, y) += w * s.depth;
          view.opacity.at(x, y) += w;
          t *= (1.0 - sigma);
          if (t < opt.min_transmittance) t = 0.0;
        }
    }
    return view;
  };

  RenderedView view = forward(colors, opacities);
  double loss = loss_only(view, rgb_gt, depth_gt, cfg);
  double lr = cfg.step_size;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const LossTerms terms = loss_with_pixel_grads(view, rgb_gt, depth_gt, cfg);

    // backward pass through the compositing in the same splat order
    std::vector<Vec3> gc(n, Vec3::Zero());
    std::vector<double> go(n, 0.0);
    {
      std::vector<double> trans(size_t(W) * H, 1.0);
      ImageD pref_c = ImageD::zeros(W, H, 3);
      ImageD pref_d = ImageD::zeros(W, H, 1);
      for (const auto& s : splats) {
        const double op = opacities[s.index];
        const Vec3& col = colors[s.index];
        for (int y = s.y0; y <= s.y1; ++y)
          for (int x = s.x0; x <= s.x1; ++x) {
            double& t = trans[size_t(y) * W + x];
            if (t <= 0) continue;
            const double dx = x - s.mean.x(), dy = y - s.mean.y();
            const double q = s.invcov(0, 0) * dx * dx +
                             2 * s.invcov(0, 1) * dx * dy +
                             s.invcov(1, 1) * dy * dy;
            if (q > opt.sigma_cutoff * opt.sigma_cutoff) continue;
            const double gval = std::exp(-0.5 * q);
            const double raw = op * gval;
            if (raw < opt.alpha_min) continue;
            const double sigma = std::min(raw, 0.999);
            const double w = sigma * t;
            double dsig = 0;
            for (int c = 0; c < 3; ++c) {
              const double dI = terms.d_color.at(x, y, c);
              gc[s.index][c] += dI * w;
              const double pref_inc = pref_c.at(x, y, c) + w * col[c];
              const double suffix = view.color.at(x, y, c) - pref_inc;
              dsig += dI * (col[c] * t - suffix / (1.0 - sigma));
              pref_c.at(x, y, c) = pref_inc;
            }
            {
              const double dD = terms.d_depth.at(x, y);
              const double pref_inc = pref_d.at(x, y) + w * s.depth;
              const double suffix = view.depth.at(x, y) - pref_inc;
              dsig += dD * (s.depth * t - suffix / (1.0 - sigma));
              pref_d.at(x, y) = pref_inc;
            }
            if (raw < 0.999) go[s.index] += dsig * gval;
            t *= (1.0 - sigma);
            if (t < opt.min_transmittance) t = 0.0;
          }
      }
    }

    // backtracking step on color and opacity
    bool accepted = false;
    while (!accepted) {
      std::vector<Vec3> cand_c(n);
      std::vector<double> cand_o(n);
      for (size_t i = 0; i < n; ++i) {
        cand_c[i] = (colors[i] - lr * gc[i])
                        .cwiseMax(Vec3::Zero())
                        .cwiseMin(Vec3::Ones());
        cand_o[i] = std::clamp(opacities[i] - lr * go[i], 0.0, 1.0);
      }
      RenderedView cand_view = forward(cand_c, cand_o);
      const double cand_loss = loss_only(cand_view, rgb_gt, depth_gt, cfg);
      if (cand_loss <= loss) {
        colors.swap(cand_c);
        opacities.swap(cand_o);
        view = std::move(cand_view);
        loss = cand_loss;
        lr = std::min(cfg.step_size, lr * 2.0);
        accepted = true;
      } else {
        lr *= 0.5;
        if (lr < 1e-12) break;  // keep current params this iteration
      }
    }
  }

  for (size_t i = 0; i < n; ++i) map.set_color_opacity(i, colors[i], opacities[i]);
  return loss;
}

void save_map(const GaussianMap& map, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  char line[512];
  for (const auto& g : map.primitives()) {
    std::snprintf(line, sizeof(line),
                  "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g "
                  "%.17g %.17g %.17g %.17g %.17g\n",
                  g.position.x(), g.position.y(), g.position.z(), g.opacity,
                  g.color.x(), g.color.y(), g.color.z(), g.scale.x(),
                  g.scale.y(), g.scale.z(), g.rotation.w(), g.rotation.x(),
                  g.rotation.y(), g.rotation.z());
    f << line;
  }
}

GaussianMap load_map(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  GaussianMap map;
  std::string line;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    GaussianPrimitive g;
    double qw, qx, qy, qz;
    if (!(ss >> g.position.x() >> g.position.y() >> g.position.z() >>
          g.opacity >> g.color.x() >> g.color.y() >> g.color.z() >>
          g.scale.x() >> g.scale.y() >> g.scale.z() >> qw >> qx >> qy >> qz))
      throw std::runtime_error("malformed map line " + std::to_string(lineno) +
                               " in " + path);
    g.rotation = Quat(qw, qx, qy, qz);
    map.add(g);
  }
  return map;
}

}  // namespace gsnav
