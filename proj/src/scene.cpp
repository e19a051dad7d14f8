#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include "gsnav/sim.hpp"

#include <nlohmann/json.hpp>

namespace gsnav {

using ojson = nlohmann::ordered_json;

AABB Scene::bounds() const {
  AABB b;
  b.min = Vec3::Constant(std::numeric_limits<double>::max());
  b.max = Vec3::Constant(std::numeric_limits<double>::lowest());
  auto grow3 = [&](const Vec3& lo, const Vec3& hi) {
    b.min = b.min.cwiseMin(lo);
    b.max = b.max.cwiseMax(hi);
  };
  for (const AABB& w : walls) grow3(w.min, w.max);
  for (const SceneObject& o : objects) grow3(o.box.min, o.box.max);
  for (const RoomRect& r : rooms) {
    grow3(Vec3(r.min.x(), r.min.y(), floor_z), Vec3(r.max.x(), r.max.y(), ceiling_z));
  }
  if (walls.empty() && objects.empty() && rooms.empty()) b = AABB{};
  return b;
}

std::vector<const SceneObject*> Scene::targets() const {
  std::vector<const SceneObject*> out;
  for (const SceneObject& o : objects)
    if (o.category == target_category) out.push_back(&o);
  return out;
}

namespace {

ojson vec_to_json(const Vec3& v) { return ojson::array({v.x(), v.y(), v.z()}); }
ojson vec_to_json(const Vec2& v) { return ojson::array({v.x(), v.y()}); }

Vec3 vec3_from_json(const ojson& j) {
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}
Vec2 vec2_from_json(const ojson& j) {
  return Vec2(j.at(0).get<double>(), j.at(1).get<double>());
}

}  // namespace

std::string scene_to_json(const Scene& s) {
  ojson j;
  j["rooms"] = ojson::array();
  for (const RoomRect& r : s.rooms)
    j["rooms"].push_back({{"min", vec_to_json(r.min)}, {"max", vec_to_json(r.max)}});
  j["walls"] = ojson::array();
  for (const AABB& w : s.walls)
    j["walls"].push_back({{"min", vec_to_json(w.min)}, {"max", vec_to_json(w.max)}});
  j["objects"] = ojson::array();
  for (const SceneObject& o : s.objects)
    j["objects"].push_back({{"category", o.category},
                            {"min", vec_to_json(o.box.min)},
                            {"max", vec_to_json(o.box.max)},
                            {"color", vec_to_json(o.color)}});
  j["floor_z"] = s.floor_z;
  j["ceiling_z"] = s.ceiling_z;
  j["start"] = {{"pos", vec_to_json(s.start)}, {"yaw", s.start_yaw_deg}};
  j["target_category"] = s.target_category;
  return j.dump(2) + "\n";
}

Scene scene_from_json(const std::string& text) {
  const ojson j = ojson::parse(text);
  Scene s;
  for (const ojson& r : j.at("rooms"))
    s.rooms.push_back({vec2_from_json(r.at("min")), vec2_from_json(r.at("max"))});
  for (const ojson& w : j.at("walls"))
    s.walls.push_back({vec3_from_json(w.at("min")), vec3_from_json(w.at("max"))});
  for (const ojson& o : j.at("objects")) {
    SceneObject obj;
    obj.category = o.at("category").get<std::string>();
    obj.box = {vec3_from_json(o.at("min")), vec3_from_json(o.at("max"))};
    obj.color = vec3_from_json(o.at("color"));
    s.objects.push_back(obj);
  }
  s.floor_z = j.at("floor_z").get<double>();
  s.ceiling_z = j.at("ceiling_z").get<double>();
  s.start = vec3_from_json(j.at("start").at("pos"));
  s.start_yaw_deg = j.at("start").at("yaw").get<double>();
  s.target_category = j.at("target_category").get<std::string>();
  return s;
}

void save_scene(const Scene& scene, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write scene file: " + path);
  out << scene_to_json(scene);
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read scene file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return scene_from_json(buf.str());
}

// ---------------------------------------------------------------------------
// ray casting

namespace {

struct FlatBoxes {
  std::vector<AABB> boxes;
  std::vector<Vec3> colors;
  std::vector<int> object_index;  // -1 for structure

  explicit FlatBoxes(const Scene& s) {
    const AABB b = s.bounds();
    const Vec3 pad(0.5, 0.5, 0.0);
    // floor and ceiling slabs close the scene vertically
    boxes.push_back({Vec3(b.min.x(), b.min.y(), s.floor_z - 0.1) - pad,
                     Vec3(b.max.x(), b.max.y(), s.floor_z) + pad});
    colors.push_back(Vec3(0.50, 0.46, 0.40));
    object_index.push_back(-1);
    boxes.push_back({Vec3(b.min.x(), b.min.y(), s.ceiling_z) - pad,
                     Vec3(b.max.x(), b.max.y(), s.ceiling_z + 0.1) + pad});
    colors.push_back(Vec3(0.85, 0.85, 0.82));
    object_index.push_back(-1);
    for (const AABB& w : s.walls) {
      boxes.push_back(w);
      colors.push_back(Vec3(0.72, 0.72, 0.75));
      object_index.push_back(-1);
    }
    for (size_t i = 0; i < s.objects.size(); ++i) {
      boxes.push_back(s.objects[i].box);
      colors.push_back(s.objects[i].color);
      object_index.push_back(int(i));
    }
  }
};

struct RayHit {
  double t = 0;
  int box = -1;
  Vec3 normal{0, 0, 1};
};

// Nearest entry along origin + t * dir for t in (tmin, tmax]; dir need not
// be normalized, so t is measured in dir lengths.
bool raycast(const FlatBoxes& geo, const Vec3& origin, const Vec3& dir,
             double tmin, double tmax, RayHit& hit) {
  bool found = false;
  for (size_t i = 0; i < geo.boxes.size(); ++i) {
    const AABB& b = geo.boxes[i];
    double t0 = tmin, t1 = tmax;
    int enter_axis = -1;
    double enter_sign = 0;
    bool miss = false;
    for (int a = 0; a < 3 && !miss; ++a) {
      const double o = origin[a], d = dir[a];
      if (std::abs(d) < 1e-12) {
        if (o < b.min[a] || o > b.max[a]) miss = true;
        continue;
      }
      double ta = (b.min[a] - o) / d;
      double tb = (b.max[a] - o) / d;
      double sign = -1;  // entering through the min face
      if (ta > tb) {
        std::swap(ta, tb);
        sign = 1;
      }
      if (ta > t0) {
        t0 = ta;
        enter_axis = a;
        enter_sign = sign;
      }
      t1 = std::min(t1, tb);
      if (t0 > t1) miss = true;
    }
    if (miss || t0 <= tmin || t0 > tmax) continue;
    if (!found || t0 < hit.t) {
      found = true;
      hit.t = t0;
      hit.box = int(i);
      hit.normal = Vec3::Zero();
      if (enter_axis >= 0) hit.normal[enter_axis] = -enter_sign;
      else hit.normal = -dir.normalized();  // started inside the box
      tmax = t0;  // shrink for the remaining boxes
    }
  }
  return found;
}

const Vec3 kLightDir = Vec3(0.35, 0.25, 0.9).normalized();

}  // namespace

SenseResult sense(const Scene& scene, const Pose& pose,
                  const CameraIntrinsics& k, double max_range) {
  if (!k.valid()) throw std::invalid_argument("sense: invalid intrinsics");
  const FlatBoxes geo(scene);
  SenseResult out;
  out.rgb = ImageD::zeros(k.width, k.height, 3);
  out.depth = ImageD::zeros(k.width, k.height, 1);
  const Mat3 r_wc = pose.rotation.conjugate().toRotationMatrix();
  const Vec3 origin = pose.center();
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      // unit z in camera coords, so the ray parameter is the z-depth
      const Vec3 dir_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      const Vec3 dir = r_wc * dir_cam;
      RayHit hit;
      if (raycast(geo, origin, dir, kNearPlane, max_range, hit)) {
        out.depth.at(u, v) = hit.t;
        const double shade = 0.3 + 0.7 * std::max(0.0, hit.normal.dot(kLightDir));
        const Vec3 c = geo.colors[hit.box] * shade;
        for (int ch = 0; ch < 3; ++ch) out.rgb.at(u, v, ch) = c[ch];
      } else {
        out.depth.at(u, v) = max_range;
      }
    }
  }
  return out;
}

std::vector<Detection> detect_objects(const Scene& scene, const Pose& pose,
                                      const CameraIntrinsics& k,
                                      const std::string& category,
                                      const DetectorConfig& cfg,
                                      uint64_t salt) {
  const FlatBoxes geo(scene);
  Rng rng(hash_mix(cfg.seed, salt));
  const Vec3 origin = pose.center();
  std::vector<Detection> out;

  for (size_t oi = 0; oi < scene.objects.size(); ++oi) {
    const SceneObject& obj = scene.objects[oi];
    if (obj.category != category) continue;

    // project the eight box corners
    double u0 = 1e18, v0 = 1e18, u1 = -1e18, v1 = -1e18;
    bool behind = false;
    for (int c = 0; c < 8; ++c) {
      const Vec3 corner(c & 1 ? obj.box.max.x() : obj.box.min.x(),
                        c & 2 ? obj.box.max.y() : obj.box.min.y(),
                        c & 4 ? obj.box.max.z() : obj.box.min.z());
      const Vec3 p = pose.to_camera(corner);
      if (p.z() <= kNearPlane) {
        behind = true;
        break;
      }
      const double u = k.fx * p.x() / p.z() + k.cx;
      const double v = k.fy * p.y() / p.z() + k.cy;
      u0 = std::min(u0, u);
      u1 = std::max(u1, u);
      v0 = std::min(v0, v);
      v1 = std::max(v1, v);
    }
    if (behind) continue;
    BBox box;
    box.x0 = std::max(0, int(std::lround(u0)));
    box.y0 = std::max(0, int(std::lround(v0)));
    box.x1 = std::min(k.width - 1, int(std::lround(u1)));
    box.y1 = std::min(k.height - 1, int(std::lround(v1)));
    if (box.x1 < box.x0 || box.y1 < box.y0) continue;
    if (box.area() < cfg.min_pixels) continue;

    // nine probe rays: center plus corners pulled 10% inward
    const Vec3 center = obj.box.center();
    int visible = 0;
    for (int c = 0; c < 9 && visible == 0; ++c) {
      Vec3 target = center;
      if (c > 0) {
        const int b = c - 1;
        const Vec3 corner(b & 1 ? obj.box.max.x() : obj.box.min.x(),
                          b & 2 ? obj.box.max.y() : obj.box.min.y(),
                          b & 4 ? obj.box.max.z() : obj.box.min.z());
        target = corner + 0.1 * (center - corner);
      }
      const Vec3 dir = target - origin;
      RayHit hit;
      if (raycast(geo, origin, dir, kNearPlane, 1.0 + 1e-9, hit) &&
          geo.object_index[hit.box] == int(oi))
        ++visible;
    }
    if (visible == 0) continue;
    if (cfg.fn_rate > 0 && rng.bernoulli(cfg.fn_rate)) continue;

    Detection d;
    d.bbox = box;
    d.category = category;
    d.confidence = 1.0;
    d.source_pose = pose;
    out.push_back(d);
  }

  if (cfg.fp_rate > 0 && rng.bernoulli(cfg.fp_rate)) {
    Detection d;
    const int w = std::max(4, k.width / 8), h = std::max(4, k.height / 8);
    d.bbox.x0 = rng.uniform_int(0, k.width - w);
    d.bbox.y0 = rng.uniform_int(0, k.height - h);
    d.bbox.x1 = d.bbox.x0 + w - 1;
    d.bbox.y1 = d.bbox.y0 + h - 1;
    d.category = category;
    d.confidence = 0.5;
    d.source_pose = pose;
    out.push_back(d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ground-truth occupancy and the shortest-path oracle

ExploreMap scene_occupancy(const Scene& scene, double resolution,
                           double agent_radius) {
  const AABB b = scene.bounds();
  const Vec2 lo(b.min.x() - resolution, b.min.y() - resolution);
  const int w = int(std::ceil((b.max.x() + resolution - lo.x()) / resolution));
  const int h = int(std::ceil((b.max.y() + resolution - lo.y()) / resolution));
  ExploreMap m = ExploreMap::unknown(w, h, resolution, lo);

  std::vector<AABB> solid = scene.walls;
  for (const SceneObject& o : scene.objects) solid.push_back(o.box);

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Vec2 c = m.cell_center(Cell(x, y));
      bool blocked = false;
      for (const AABB& s : solid)
        if (s.footprint_distance(c) < agent_radius) {
          blocked = true;
          break;
        }
      m.at(x, y) = blocked ? CellState::Obstacle : CellState::Free;
    }
  return m;
}

double shortest_path_length(const Scene& scene, const Vec2& start,
                            double success_dist, double resolution,
                            double agent_radius) {
  const ExploreMap m = scene_occupancy(scene, resolution, agent_radius);
  const Cell s = m.world_to_cell(start);
  if (!m.in_bounds(s.x(), s.y()) || m.at(s.x(), s.y()) != CellState::Free)
    throw std::invalid_argument("shortest_path_length: start not free");

  const std::vector<const SceneObject*> targets = scene.targets();
  if (targets.empty()) throw UnreachableError("scene has no target instance");
  auto is_goal = [&](int x, int y) {
    const Vec2 c = m.cell_center(Cell(x, y));
    for (const SceneObject* t : targets)
      if (t->box.footprint_distance(c) <= success_dist) return true;
    return false;
  };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(size_t(m.width) * m.height, inf);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  dist[size_t(s.y()) * m.width + s.x()] = 0;
  heap.emplace(0.0, s.y() * m.width + s.x());
  const double diag = std::sqrt(2.0) * resolution;
  while (!heap.empty()) {
    const auto [d, idx] = heap.top();
    heap.pop();
    if (d > dist[idx]) continue;
    const int x = idx % m.width, y = idx / m.width;
    if (is_goal(x, y)) return d;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = x + dx, ny = y + dy;
        if (!m.in_bounds(nx, ny) || m.at(nx, ny) != CellState::Free) continue;
        const double nd = d + (dx != 0 && dy != 0 ? diag : resolution);
        double& slot = dist[size_t(ny) * m.width + nx];
        if (nd < slot) {
          slot = nd;
          heap.emplace(nd, ny * m.width + nx);
        }
      }
  }
  throw UnreachableError("no path from start to the target region");
}

// ---------------------------------------------------------------------------
// generation

namespace {

struct GridLayout {
  int cols = 0, rows = 0;
  std::vector<double> xs;  // interior column edges, size cols + 1
  std::vector<double> ys;
};

constexpr struct {
  const char* category;
  double w, d, h;
  double r, g, b;
} kCatalog[] = {
    {"chair", 0.45, 0.45, 0.90, 0.75, 0.18, 0.15},
    {"table", 0.90, 0.60, 0.75, 0.55, 0.36, 0.20},
    {"plant", 0.35, 0.35, 1.10, 0.18, 0.55, 0.22},
    {"bed", 1.60, 1.10, 0.55, 0.25, 0.35, 0.70},
    {"sofa", 1.50, 0.70, 0.80, 0.20, 0.50, 0.50},
};

int catalog_index(const std::string& category) {
  for (size_t i = 0; i < std::size(kCatalog); ++i)
    if (category == kCatalog[i].category) return int(i);
  return -1;
}

Scene attempt_scene(Rng& rng, const SceneSpec& spec) {
  Scene s;
  s.floor_z = 0.0;
  s.ceiling_z = spec.ceiling;
  s.target_category = spec.target_category;
  const double th = spec.wall_thickness;

  const int n_rooms = rng.uniform_int(spec.min_rooms, spec.max_rooms);
  GridLayout g;
  g.cols = n_rooms <= 2 ? n_rooms : 2;
  g.rows = (n_rooms + g.cols - 1) / g.cols;

  g.xs.push_back(th);
  for (int c = 0; c < g.cols; ++c)
    g.xs.push_back(g.xs.back() + rng.uniform(spec.min_room_size, spec.max_room_size) + th);
  g.ys.push_back(th);
  for (int r = 0; r < g.rows; ++r)
    g.ys.push_back(g.ys.back() + rng.uniform(spec.min_room_size, spec.max_room_size) + th);

  auto slot_used = [&](int r, int c) { return r * g.cols + c < n_rooms; };
  auto room_lo = [&](int r, int c) { return Vec2(g.xs[c], g.ys[r]); };
  auto room_hi = [&](int r, int c) {
    return Vec2(g.xs[c + 1] - th, g.ys[r + 1] - th);
  };

  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c)
      if (slot_used(r, c)) s.rooms.push_back({room_lo(r, c), room_hi(r, c)});

  const double total_w = g.xs.back(), total_h = g.ys.back();
  auto wall = [&](double x0, double y0, double x1, double y1) {
    s.walls.push_back({Vec3(x0, y0, s.floor_z), Vec3(x1, y1, s.ceiling_z)});
  };
  // outer shell
  wall(0, 0, total_w, th);
  wall(0, total_h - th, total_w, total_h);
  wall(0, th, th, total_h - th);
  wall(total_w - th, th, total_w, total_h - th);

  const double dw = spec.door_width;
  // interior vertical walls (between column c and c+1)
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c + 1 < g.cols; ++c) {
      const double x0 = g.xs[c + 1] - th, x1 = g.xs[c + 1];
      const double y0 = g.ys[r], y1 = g.ys[r + 1] - th;
      if (slot_used(r, c) && slot_used(r, c + 1)) {
        const double dc = rng.uniform(y0 + 0.3 + dw / 2, y1 - 0.3 - dw / 2);
        wall(x0, y0, x1, dc - dw / 2);
        wall(x0, dc + dw / 2, x1, y1);
      } else {
        wall(x0, y0, x1, y1);
      }
    }
  // interior horizontal walls (between row r and r+1)
  for (int r = 0; r + 1 < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) {
      const double y0 = g.ys[r + 1] - th, y1 = g.ys[r + 1];
      const double x0 = g.xs[c], x1 = g.xs[c + 1] - th;
      if (slot_used(r, c) && slot_used(r + 1, c)) {
        const double dc = rng.uniform(x0 + 0.3 + dw / 2, x1 - 0.3 - dw / 2);
        wall(x0, y0, dc - dw / 2, y1);
        wall(dc + dw / 2, y0, x1, y1);
      } else {
        wall(x0, y0, x1, y1);
      }
    }
  // fill unused grid slots solid
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c)
      if (!slot_used(r, c))
        wall(g.xs[c] - th, g.ys[r] - th, g.xs[c + 1], g.ys[r + 1]);

  // furniture against walls; first object is always the target
  const int n_objects = rng.uniform_int(spec.min_objects, spec.max_objects);
  for (int i = 0; i < n_objects; ++i) {
    std::string category;
    if (i == 0) {
      category = spec.target_category;
    } else {
      category = spec.catalog[rng.uniform_int(0, int(spec.catalog.size()) - 1)];
    }
    const int ci = catalog_index(category);
    if (ci < 0) continue;
    const auto& cat = kCatalog[ci];

    bool placed = false;
    for (int tries = 0; tries < 20 && !placed; ++tries) {
      const RoomRect& room = s.rooms[rng.uniform_int(0, int(s.rooms.size()) - 1)];
      const int side = rng.uniform_int(0, 3);
      // footprint w x d with d pointing away from the chosen wall
      double fw = cat.w, fd = cat.d;
      if (side >= 2) std::swap(fw, fd);
      const double margin = 0.05;
      const double room_w = room.max.x() - room.min.x();
      const double room_h = room.max.y() - room.min.y();
      if (room_w < fw + 2 * margin || room_h < fd + 2 * margin) continue;
      double cx, cy;
      if (side < 2) {  // against the south / north wall
        cx = rng.uniform(room.min.x() + margin + fw / 2, room.max.x() - margin - fw / 2);
        cy = side == 0 ? room.min.y() + margin + fd / 2 : room.max.y() - margin - fd / 2;
      } else {  // against the west / east wall
        cy = rng.uniform(room.min.y() + margin + fd / 2, room.max.y() - margin - fd / 2);
        cx = side == 2 ? room.min.x() + margin + fw / 2 : room.max.x() - margin - fw / 2;
      }
      AABB box{Vec3(cx - fw / 2, cy - fd / 2, s.floor_z),
               Vec3(cx + fw / 2, cy + fd / 2, s.floor_z + cat.h)};
      bool overlaps = false;
      for (const SceneObject& other : s.objects) {
        const bool apart = box.max.x() + 0.15 < other.box.min.x() ||
                           other.box.max.x() + 0.15 < box.min.x() ||
                           box.max.y() + 0.15 < other.box.min.y() ||
                           other.box.max.y() + 0.15 < box.min.y();
        if (!apart) {
          overlaps = true;
          break;
        }
      }
      if (overlaps) continue;
      s.objects.push_back({category, box, Vec3(cat.r, cat.g, cat.b)});
      placed = true;
    }
    if (i == 0 && !placed) return Scene{};  // no target, reject the attempt
  }

  // start pose in a room with clearance from furniture
  for (int tries = 0; tries < 30; ++tries) {
    const RoomRect& room = s.rooms[rng.uniform_int(0, int(s.rooms.size()) - 1)];
    const double margin = 0.45;
    if (room.max.x() - room.min.x() < 2 * margin + 0.1 ||
        room.max.y() - room.min.y() < 2 * margin + 0.1)
      continue;
    const Vec2 pos(rng.uniform(room.min.x() + margin, room.max.x() - margin),
                   rng.uniform(room.min.y() + margin, room.max.y() - margin));
    bool clear = true;
    for (const SceneObject& o : s.objects)
      if (o.box.footprint_distance(pos) < 0.35) {
        clear = false;
        break;
      }
    if (!clear) continue;
    s.start = Vec3(pos.x(), pos.y(), s.floor_z);
    s.start_yaw_deg = 30.0 * rng.uniform_int(0, 11);
    return s;
  }
  return Scene{};  // no valid start found
}

bool scene_valid(const Scene& s) {
  if (s.rooms.empty() || s.targets().empty()) return false;

  const ExploreMap occ = scene_occupancy(s, 0.05, 0.2);
  const Cell start = occ.world_to_cell(Vec2(s.start.x(), s.start.y()));
  if (!occ.in_bounds(start.x(), start.y()) ||
      occ.at(start.x(), start.y()) != CellState::Free)
    return false;

  // flood the free space from the start
  std::vector<uint8_t> seen(size_t(occ.width) * occ.height, 0);
  std::queue<Cell> q;
  q.push(start);
  seen[size_t(start.y()) * occ.width + start.x()] = 1;
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = c.x() + dx, ny = c.y() + dy;
        if (!occ.in_bounds(nx, ny) || occ.at(nx, ny) != CellState::Free) continue;
        uint8_t& flag = seen[size_t(ny) * occ.width + nx];
        if (!flag) {
          flag = 1;
          q.push(Cell(nx, ny));
        }
      }
  }
  // every room center reachable
  for (const RoomRect& r : s.rooms) {
    const Cell c = occ.world_to_cell((r.min + r.max) / 2.0);
    if (!occ.in_bounds(c.x(), c.y()) ||
        !seen[size_t(c.y()) * occ.width + c.x()])
      return false;
  }
  // some cell of the target success region reachable
  try {
    shortest_path_length(s, Vec2(s.start.x(), s.start.y()), 1.0);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace

Scene generate_scene(uint64_t seed, const SceneSpec& spec) {
  if (spec.min_rooms < 1 || spec.max_rooms < spec.min_rooms ||
      spec.min_room_size <= 0 || spec.max_room_size < spec.min_room_size ||
      spec.min_objects < 1)
    throw std::invalid_argument("generate_scene: bad spec ranges");
  if (catalog_index(spec.target_category) < 0)
    throw std::invalid_argument("generate_scene: unknown target category " +
                                spec.target_category);
  Rng base(seed);
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    Rng rng = base.fork(uint64_t(attempt));
    Scene s = attempt_scene(rng, spec);
    if (scene_valid(s)) return s;
  }
  throw GenerationError("generate_scene: no valid layout after retries");
}

}  // namespace gsnav
