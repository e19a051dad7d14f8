#include "gsnav/prompt.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "gsnav/png_io.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace gsnav {

namespace {

constexpr uint8_t kPurple[3] = {128, 0, 128};
constexpr uint8_t kRed[3] = {230, 30, 30};
constexpr uint8_t kBlue[3] = {40, 70, 230};
constexpr uint8_t kGreen[3] = {30, 170, 60};
constexpr uint8_t kWhite[3] = {255, 255, 255};

void draw_disc(Image8& img, int cx, int cy, int r, const uint8_t c[3]) {
  for (int y = cy - r; y <= cy + r; ++y)
    for (int x = cx - r; x <= cx + r; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r)
        img.set(x, y, c[0], c[1], c[2]);
}

void draw_line(Image8& img, int x0, int y0, int x1, int y1, const uint8_t c[3],
               int thickness = 1) {
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    if (thickness <= 1)
      img.set(x0, y0, c[0], c[1], c[2]);
    else
      draw_disc(img, x0, y0, thickness / 2, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

// 3x5 digit bitmaps, row-major, top row first.
const char* kDigits[10] = {
    "111101101101111",  // 0
    "010110010010111",  // 1
    "111001111100111",  // 2
    "111001111001111",  // 3
    "101101111001001",  // 4
    "111100111001111",  // 5
    "111100111101111",  // 6
    "111001010010010",  // 7
    "111101111101111",  // 8
    "111101111001111",  // 9
};

void draw_digit(Image8& img, int x, int y, int digit, int scale,
                const uint8_t c[3]) {
  const char* bits = kDigits[digit % 10];
  for (int r = 0; r < 5; ++r)
    for (int col = 0; col < 3; ++col)
      if (bits[r * 3 + col] == '1')
        for (int dy = 0; dy < scale; ++dy)
          for (int dx = 0; dx < scale; ++dx)
            img.set(x + col * scale + dx, y + r * scale + dy, c[0], c[1], c[2]);
}

int number_width(int value, int scale) {
  const int digits = value < 10 ? 1 : (value < 100 ? 2 : 3);
  return digits * 3 * scale + (digits - 1) * scale;
}

void draw_number(Image8& img, int x, int y, int value, int scale,
                 const uint8_t c[3]) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%d", value);
  for (const char* p = buf; *p; ++p) {
    draw_digit(img, x, y, *p - '0', scale, c);
    x += 4 * scale;
  }
}

void fill_triangle(Image8& img, const Vec2& a, const Vec2& b, const Vec2& c,
                   const uint8_t col[3]) {
  const int x0 = int(std::floor(std::min({a.x(), b.x(), c.x()})));
  const int x1 = int(std::ceil(std::max({a.x(), b.x(), c.x()})));
  const int y0 = int(std::floor(std::min({a.y(), b.y(), c.y()})));
  const int y1 = int(std::ceil(std::max({a.y(), b.y(), c.y()})));
  auto edge = [](const Vec2& p, const Vec2& q, double px, double py) {
    return (q.x() - p.x()) * (py - p.y()) - (q.y() - p.y()) * (px - p.x());
  };
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      const double e0 = edge(a, b, px, py);
      const double e1 = edge(b, c, px, py);
      const double e2 = edge(c, a, px, py);
      if ((e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0))
        img.set(x, y, col[0], col[1], col[2]);
    }
}

}  // namespace

AnnotatedFrame annotate_fpv(const RenderedView& view, const Vec3& frontier_world,
                            double tau, int frontier_id) {
  AnnotatedFrame frame;
  frame.kind = FrameKind::Fpv;
  frame.frontier_id = frontier_id;
  frame.image = to_image8(view.color);
  for (int y = 0; y < view.opacity.height; ++y)
    for (int x = 0; x < view.opacity.width; ++x)
      if (view.opacity.at(x, y) < tau)
        frame.image.set(x, y, kPurple[0], kPurple[1], kPurple[2]);
  frame.annotations.push_back("unobserved-purple");

  const Vec3 p_cam = view.pose.to_camera(frontier_world);
  if (p_cam.z() > kNearPlane) {
    const CameraIntrinsics& k = view.intrinsics;
    const int px = int(std::lround(k.fx * p_cam.x() / p_cam.z() + k.cx));
    const int py = int(std::lround(k.fy * p_cam.y() / p_cam.z() + k.cy));
    if (px >= 0 && px < frame.image.width && py >= 0 &&
        py < frame.image.height) {
      draw_disc(frame.image, px, py, 5, kRed);
      frame.gaze_drawn = true;
      frame.annotations.push_back("gaze");
    }
  }
  return frame;
}

AnnotatedFrame render_bev(const ExploreMap& explore, const Pose& agent_pose,
                          const std::vector<Pose>& history,
                          const std::vector<FrontierCluster>& frontiers,
                          const std::vector<GuidanceTrajectory>& trajectories) {
  AnnotatedFrame frame;
  frame.kind = FrameKind::Bev;

  const int maxdim = std::max(1, std::max(explore.width, explore.height));
  const int s = std::clamp(360 / maxdim, 1, 8);
  const int w = explore.width * s, h = explore.height * s;
  frame.image = Image8::filled(std::max(w, 1), std::max(h, 1), 128, 128, 128);

  for (int cy = 0; cy < explore.height; ++cy)
    for (int cx = 0; cx < explore.width; ++cx) {
      const CellState st = explore.at(cx, cy);
      uint8_t v = st == CellState::Free ? 255 : (st == CellState::Obstacle ? 0 : 128);
      const int py = (explore.height - 1 - cy) * s;  // world +y points up
      for (int dy = 0; dy < s; ++dy)
        for (int dx = 0; dx < s; ++dx)
          frame.image.set(cx * s + dx, py + dy, v, v, v);
    }

  auto to_px = [&](const Vec2& world) {
    const double fx = (world.x() - explore.origin.x()) / explore.resolution * s;
    const double fy = (world.y() - explore.origin.y()) / explore.resolution * s;
    return Vec2(fx, double(h) - fy);
  };

  for (const GuidanceTrajectory& t : trajectories) {
    for (size_t i = 1; i < t.world.size(); ++i) {
      const Vec2 a = to_px(t.world[i - 1]), b = to_px(t.world[i]);
      draw_line(frame.image, int(std::lround(a.x())), int(std::lround(a.y())),
                int(std::lround(b.x())), int(std::lround(b.y())), kGreen);
    }
  }
  if (!trajectories.empty()) frame.annotations.push_back("trajectories");

  for (size_t i = 1; i < history.size(); ++i) {
    const Vec3 c0 = history[i - 1].center(), c1 = history[i].center();
    const Vec2 a = to_px(Vec2(c0.x(), c0.y())), b = to_px(Vec2(c1.x(), c1.y()));
    draw_line(frame.image, int(std::lround(a.x())), int(std::lround(a.y())),
              int(std::lround(b.x())), int(std::lround(b.y())), kBlue, s >= 3 ? 3 : 1);
  }
  if (history.size() > 1) frame.annotations.push_back("history");

  {
    const Vec3 c = agent_pose.center();
    const Vec2 p = to_px(Vec2(c.x(), c.y()));
    const double yaw = deg2rad(agent_pose.yaw_deg());
    const Vec2 dir(std::cos(yaw), -std::sin(yaw));  // pixel y runs down
    const Vec2 perp(-dir.y(), dir.x());
    const double len = std::max(4.0, 3.0 * s);
    fill_triangle(frame.image, p + dir * len, p - dir * (0.6 * len) + perp * (0.5 * len),
                  p - dir * (0.6 * len) - perp * (0.5 * len), kPurple);
    frame.annotations.push_back("agent");
  }

  const int marker_r = std::max(5, 2 * s);
  for (const FrontierCluster& f : frontiers) {
    const Vec2 p = to_px(f.centroid);
    const int cx = int(std::lround(p.x())), cy = int(std::lround(p.y()));
    draw_disc(frame.image, cx, cy, marker_r, kRed);
    const int scale = std::max(1, marker_r / 4);
    draw_number(frame.image, cx - number_width(f.id, scale) / 2,
                cy - (5 * scale) / 2, f.id, scale, kWhite);
  }
  if (!frontiers.empty()) frame.annotations.push_back("markers");
  return frame;
}

PlannerPrompt compose_prompt(const std::vector<AnnotatedFrame>& fpvs,
                             const AnnotatedFrame& bev,
                             const std::string& instruction,
                             const std::vector<FrontierOption>& options,
                             const std::string& template_id) {
  if (fpvs.empty())
    throw std::invalid_argument("compose_prompt: at least one view required");
  if (template_id != "cot-v1")
    throw std::invalid_argument("compose_prompt: unknown template " + template_id);
  for (const AnnotatedFrame& f : fpvs)
    if (f.image.width != fpvs[0].image.width ||
        f.image.height != fpvs[0].image.height)
      throw std::invalid_argument("compose_prompt: mismatched view sizes");

  const int n = int(fpvs.size());
  const int rows = n <= 3 ? 1 : 2;
  const int cols = (n + rows - 1) / rows;
  const int fw = fpvs[0].image.width, fh = fpvs[0].image.height;
  const int pad = 8;
  const int grid_w = cols * fw + (cols - 1) * pad;
  const int grid_h = rows * fh + (rows - 1) * pad;
  const int bev_w = bev.image.width, bev_h = bev.image.height;

  PlannerPrompt prompt;
  prompt.composite = Image8::filled(grid_w + pad + bev_w,
                                    std::max(grid_h, bev_h), 24, 24, 24);
  for (int i = 0; i < n; ++i) {
    Image8 tile = fpvs[i].image;
    const int scale = 3;
    const int label_w = number_width(fpvs[i].frontier_id, scale) + 2 * scale;
    for (int y = 0; y < 7 * scale; ++y)
      for (int x = 0; x < label_w; ++x) tile.set(x, y, 255, 255, 255);
    draw_number(tile, scale, scale, fpvs[i].frontier_id, scale, kRed);
    const int r = i / cols, c = i % cols;
    const int ox = c * (fw + pad), oy = r * (fh + pad);
    for (int y = 0; y < fh; ++y)
      for (int x = 0; x < fw; ++x) {
        const uint8_t* p = tile.pixel(x, y);
        prompt.composite.set(ox + x, oy + y, p[0], p[1], p[2]);
      }
  }
  for (int y = 0; y < bev_h; ++y)
    for (int x = 0; x < bev_w; ++x) {
      const uint8_t* p = bev.image.pixel(x, y);
      prompt.composite.set(grid_w + pad + x, y, p[0], p[1], p[2]);
    }

  std::string ids;
  for (size_t i = 0; i < options.size(); ++i) {
    if (i) ids += ", ";
    ids += std::to_string(options[i].id);
  }

  std::ostringstream text;
  text << "You are an indoor navigation planner choosing the next frontier to "
          "explore.\n"
       << instruction << "\n\n"
       << "Input: one composite image. The left grid holds one first-person "
          "view per candidate frontier, labeled with its id in the corner; "
          "unobserved regions are tinted purple and the red disc marks the "
          "frontier's gaze point. The right panel is the top-down map: blue "
          "line = traveled path, purple triangle = current position and "
          "heading, numbered red markers = the candidate frontiers.\n\n"
       << "Think step by step:\n"
       << "1. Describe what each candidate view reveals.\n"
       << "2. Judge which frontier most plausibly leads toward the target.\n"
       << "3. Score every candidate from 0 to 10.\n\n"
       << "Candidates: " << ids << "\n\n"
       << "Finish with exactly one line:\n"
       << "CHOICE: <id>\n";
  prompt.instruction = instruction;
  prompt.cot_text = text.str();
  prompt.options = options;
  return prompt;
}

bool parse_choice_line(const std::string& text, int& id_out) {
  // scan lines back to front, accept the last well-formed CHOICE line
  size_t end = text.size();
  while (end > 0) {
    size_t begin = text.rfind('\n', end - 1);
    const size_t line_start = begin == std::string::npos ? 0 : begin + 1;
    std::string line = text.substr(line_start, end - line_start);
    const size_t first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos) {
      line = line.substr(first);
      if (line.rfind("CHOICE:", 0) == 0) {
        try {
          size_t used = 0;
          const int v = std::stoi(line.substr(7), &used);
          id_out = v;
          return true;
        } catch (const std::exception&) {
          // malformed payload, keep scanning earlier lines
        }
      }
    }
    if (begin == std::string::npos) break;
    end = begin;
  }
  return false;
}

namespace {

PlannerDecision fallback_by_cost(const PlannerPrompt& prompt,
                                 const std::string& why) {
  PlannerDecision d;
  d.used_fallback = true;
  d.rationale = "fallback (" + why + "): nearest frontier by trajectory cost";
  size_t best = 0;
  for (size_t i = 1; i < prompt.options.size(); ++i)
    if (prompt.options[i].path_cost < prompt.options[best].path_cost)
      best = i;
  d.chosen_frontier = prompt.options[best].id;
  return d;
}

bool option_exists(const PlannerPrompt& prompt, int id) {
  for (const FrontierOption& o : prompt.options)
    if (o.id == id) return true;
  return false;
}

}  // namespace

MockPlanner::MockPlanner(uint64_t seed, double unknown_weight, double cost_weight)
    : seed_(seed), w_unknown_(unknown_weight), w_cost_(cost_weight) {}

PlannerDecision MockPlanner::decide(const PlannerPrompt& prompt) {
  if (prompt.options.empty())
    throw std::invalid_argument("planner: no frontier options");
  PlannerDecision d;
  double best = -std::numeric_limits<double>::max();
  for (const FrontierOption& o : prompt.options) {
    const double score = w_unknown_ * o.unknown_cells - w_cost_ * o.path_cost;
    d.scores[o.id] = score;
    best = std::max(best, score);
  }
  std::vector<int> tied;
  for (const FrontierOption& o : prompt.options)
    if (d.scores[o.id] >= best - 1e-9) tied.push_back(o.id);
  Rng rng(seed_);
  d.chosen_frontier = tied[rng.uniform_int(0, int(tied.size()) - 1)];
  std::ostringstream why;
  why << "mock heuristic: id " << d.chosen_frontier << " scored " << best;
  d.rationale = why.str();
  return d;
}

RemotePlanner::RemotePlanner(RemotePlannerConfig cfg) : cfg_(std::move(cfg)) {}

PlannerDecision RemotePlanner::decide(const PlannerPrompt& prompt) {
  if (prompt.options.empty())
    throw std::invalid_argument("planner: no frontier options");

  // split the endpoint into client base and request path
  std::string base = cfg_.endpoint, path = "/";
  const size_t scheme = cfg_.endpoint.find("://");
  if (scheme != std::string::npos) {
    const size_t slash = cfg_.endpoint.find('/', scheme + 3);
    if (slash != std::string::npos) {
      base = cfg_.endpoint.substr(0, slash);
      path = cfg_.endpoint.substr(slash);
    }
  }

  const std::vector<uint8_t> png = encode_png_rgb(prompt.composite);
  nlohmann::json body{
      {"model", cfg_.model},
      {"max_tokens", 512},
      {"messages",
       {{{"role", "user"},
         {"content",
          {{{"type", "text"}, {"text", prompt.cot_text}},
           {{"type", "image_url"},
            {"image_url",
             {{"url", "data:image/png;base64," +
                          base64_encode(png.data(), png.size())}}}}}}}}}};
  const std::string payload = body.dump();

  std::string failure = "transport";
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    httplib::Client client(base);
    client.set_connection_timeout(cfg_.timeout_sec, 0);
    client.set_read_timeout(cfg_.timeout_sec, 0);
    httplib::Headers headers;
    if (!cfg_.api_key.empty())
      headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      failure = "transport error";
      continue;
    }
    if (res->status != 200) {
      failure = "http status " + std::to_string(res->status);
      continue;
    }
    nlohmann::json reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) {
      failure = "unparseable reply";
      continue;
    }
    std::string content;
    try {
      content = reply.at("choices").at(0).at("message").at("content")
                    .get<std::string>();
    } catch (const std::exception&) {
      failure = "unexpected reply shape";
      continue;
    }
    int id = -1;
    if (!parse_choice_line(content, id) || !option_exists(prompt, id)) {
      failure = "missing or invalid CHOICE line";
      continue;
    }
    PlannerDecision d;
    d.chosen_frontier = id;
    d.rationale = content;
    return d;
  }
  return fallback_by_cost(prompt, failure);
}

PlannerDecision decide_frontier(const PlannerPrompt& prompt, Planner& planner) {
  if (prompt.options.empty())
    throw std::invalid_argument("decide_frontier: no frontier options");
  PlannerDecision d = planner.decide(prompt);
  if (!option_exists(prompt, d.chosen_frontier))
    return fallback_by_cost(prompt, "planner returned unknown id");
  return d;
}

double unknown_area_near(const ExploreMap& m, const Cell& cell, int radius) {
  double count = 0;
  for (int y = cell.y() - radius; y <= cell.y() + radius; ++y)
    for (int x = cell.x() - radius; x <= cell.x() + radius; ++x)
      if (m.in_bounds(x, y) && m.at(x, y) == CellState::Unknown) count += 1;
  return count;
}

}  // namespace gsnav
