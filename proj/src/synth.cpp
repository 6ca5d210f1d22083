/* Copyright 2026 The oodseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "oodseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "oodseg/augment.hpp"
#include "oodseg/errors.hpp"
#include "oodseg/rng.hpp"

namespace oodseg {
namespace {

using Rgb = std::array<double, 3>;

enum Stream : std::uint64_t {
  kStreamLayout = 1,
  kStreamStyleNoise = 2,
  kStreamEvalObjects = 3,
  kStreamEvalPlacement = 4,
  kStreamObjectShape = 5,
  kStreamObjectTexture = 6,
};

Rgb hsv(double h, double s, double v) {
  const double h6 = h * 6.0;
  const int sector = static_cast<int>(h6) % 6;
  const double f = h6 - std::floor(h6);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

Rgb jitter(const Rgb& base, double amount, Rng& rng) {
  Rgb out;
  for (int ch = 0; ch < 3; ++ch) out[ch] = std::clamp(base[ch] + rng.uniform(-amount, amount), 0.0, 1.0);
  return out;
}

void put(Image& image, int row, int col, const Rgb& color, double noise, Rng& rng) {
  for (int ch = 0; ch < 3; ++ch) {
    const double v = noise > 0.0 ? color[ch] + noise * rng.normal() : color[ch];
    image.at(row, col, ch) = std::clamp(v, 0.0, 1.0);
  }
}

// Smooth lattice noise in [0, 1], bilinear between random knots.
std::vector<double> value_noise(int height, int width, double cell, Rng& rng) {
  const int gh = static_cast<int>(std::ceil(height / cell)) + 2;
  const int gw = static_cast<int>(std::ceil(width / cell)) + 2;
  std::vector<double> grid(static_cast<std::size_t>(gh) * gw);
  for (double& g : grid) g = rng.uniform();
  std::vector<double> out(static_cast<std::size_t>(height) * width);
  for (int r = 0; r < height; ++r) {
    const double gy = r / cell;
    const int y0 = static_cast<int>(gy);
    const double fy = gy - y0;
    for (int c = 0; c < width; ++c) {
      const double gx = c / cell;
      const int x0 = static_cast<int>(gx);
      const double fx = gx - x0;
      const double a = grid[static_cast<std::size_t>(y0) * gw + x0];
      const double b = grid[static_cast<std::size_t>(y0) * gw + x0 + 1];
      const double d = grid[static_cast<std::size_t>(y0 + 1) * gw + x0];
      const double e = grid[static_cast<std::size_t>(y0 + 1) * gw + x0 + 1];
      out[static_cast<std::size_t>(r) * width + c] =
          (a * (1 - fx) + b * fx) * (1 - fy) + (d * (1 - fx) + e * fx) * fy;
    }
  }
  return out;
}

struct RawScene {
  SegSample sample;
  int road_start = 0;
};

RawScene generate_raw_scene(int height, int width, std::uint64_t seed) {
  if (height <= 0 || width <= 0) throw ArgumentError("scene must have positive area");
  Rng rng(mix_seed(seed, kStreamLayout));
  Image image(height, width);
  LabelMap labels(height, width, kRoad);

  const int sky_end = std::max(1, static_cast<int>(std::lround(height * rng.uniform(0.18, 0.28))));
  const int road_start =
      std::clamp(static_cast<int>(std::lround(height * rng.uniform(0.45, 0.55))), sky_end, height - 1);

  for (int r = 0; r < sky_end; ++r) {
    for (int c = 0; c < width; ++c) labels.at(r, c) = kSky;
  }

  // Building / vegetation band, one segment at a time.
  const Rgb building_base{0.56, 0.45, 0.40};
  const Rgb window_color{0.24, 0.27, 0.34};
  const Rgb vegetation_base{0.22, 0.48, 0.18};
  std::vector<Rgb> column_color(width, building_base);
  std::vector<std::uint8_t> column_is_vegetation(width, 0);
  const int band = road_start - sky_end;
  for (int x = 0; x < width;) {
    const int seg = std::max(2, static_cast<int>(width * rng.uniform(0.08, 0.25)));
    const bool is_building = rng.bernoulli(0.65);
    int top;
    if (is_building) {
      top = std::max(0, sky_end - static_cast<int>(height * rng.uniform(0.0, 0.12)));
    } else {
      top = sky_end + static_cast<int>(band * rng.uniform(0.0, 0.4));
    }
    const Rgb color = is_building ? jitter(building_base, 0.08, rng) : jitter(vegetation_base, 0.05, rng);
    for (int c = x; c < std::min(width, x + seg); ++c) {
      column_color[c] = color;
      column_is_vegetation[c] = is_building ? 0 : 1;
      for (int r = 0; r < road_start; ++r) {
        if (r >= top) labels.at(r, c) = is_building ? kBuilding : kVegetation;
        else if (r >= sky_end) labels.at(r, c) = kSky;
      }
    }
    x += seg;
  }
  if (rng.bernoulli(0.5) && band > 2) {
    const int hedge = std::max(1, std::min(band / 2, static_cast<int>(height * rng.uniform(0.03, 0.07))));
    const int from = static_cast<int>(rng.uniform_int(0, width / 2));
    const int to = std::min(width, from + static_cast<int>(width * rng.uniform(0.2, 0.5)));
    for (int r = road_start - hedge; r < road_start; ++r) {
      for (int c = from; c < to; ++c) labels.at(r, c) = kVegetation;
    }
  }

  // Cars and pedestrians standing on the road, far ones first.
  struct Actor {
    SceneClass cls;
    int top, left, h, w;
    Rgb color;
  };
  std::vector<Actor> actors;
  const std::array<Rgb, 4> car_palette{Rgb{0.08, 0.08, 0.09}, Rgb{0.70, 0.71, 0.74}, Rgb{0.52, 0.13, 0.12},
                                       Rgb{0.88, 0.88, 0.90}};
  const int road_rows = height - road_start;
  const int n_cars = static_cast<int>(rng.uniform_int(1, 2));
  for (int i = 0; i < n_cars; ++i) {
    const int h = std::max(2, static_cast<int>(height * rng.uniform(0.12, 0.20)));
    const int w = std::max(3, static_cast<int>(width * rng.uniform(0.12, 0.22)));
    const int lo = std::min(height - 1, road_start + static_cast<int>(0.3 * h));
    const int bottom = static_cast<int>(rng.uniform_int(lo, height - 1));
    const int left = static_cast<int>(rng.uniform_int(0, std::max(0, width - w)));
    const Rgb color = jitter(car_palette[rng.uniform_int(0, 3)], 0.05, rng);
    actors.push_back({kCar, std::max(0, bottom - h + 1), left, h, w, color});
  }
  const int n_peds = static_cast<int>(rng.uniform_int(0, 2));
  for (int i = 0; i < n_peds && road_rows > 2; ++i) {
    const int h = std::max(3, static_cast<int>(height * rng.uniform(0.18, 0.28)));
    const int w = std::max(2, static_cast<int>(width * rng.uniform(0.05, 0.08)));
    const int bottom = static_cast<int>(rng.uniform_int(std::min(height - 1, road_start + 2), height - 1));
    const int left = static_cast<int>(rng.uniform_int(0, std::max(0, width - w)));
    const Rgb color = jitter({0.20, 0.22, 0.44}, 0.06, rng);
    actors.push_back({kPedestrian, std::max(0, bottom - h + 1), left, h, w, color});
  }
  std::stable_sort(actors.begin(), actors.end(),
                   [](const Actor& a, const Actor& b) { return a.top + a.h < b.top + b.h; });

  // Per-actor silhouettes, painted into labels; colors are kept per pixel.
  std::vector<Rgb> actor_color(static_cast<std::size_t>(height) * width);
  std::vector<std::uint8_t> actor_detail(static_cast<std::size_t>(height) * width, 0);
  for (const Actor& a : actors) {
    for (int r = a.top; r < std::min(height, a.top + a.h); ++r) {
      const double v = static_cast<double>(r - a.top) / a.h;
      for (int c = a.left; c < std::min(width, a.left + a.w); ++c) {
        const double u = static_cast<double>(c - a.left) / a.w;
        bool inside = true;
        std::uint8_t detail = 0;
        if (a.cls == kCar) {
          // Cabin on the upper 40%, narrower than the body.
          if (v < 0.4) {
            inside = u > 0.2 && u < 0.8;
            detail = inside && v > 0.08 && (u < 0.48 || u > 0.52) ? 1 : 0;
          }
        } else if (v < 0.2) {
          inside = u > 0.25 && u < 0.75;
          detail = inside ? 1 : 0;
        }
        if (!inside) continue;
        const std::size_t idx = static_cast<std::size_t>(r) * width + c;
        labels.at(r, c) = a.cls;
        actor_color[idx] = a.color;
        actor_detail[idx] = detail;
      }
    }
  }

  // Textures.
  const Rgb sky = jitter({0.55, 0.72, 0.92}, 0.04, rng);
  const Rgb road = jitter({0.36, 0.36, 0.38}, 0.03, rng);
  const Rgb skin{0.90, 0.72, 0.60};
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * width + c;
      switch (labels.at(r, c)) {
        case kSky: {
          const double lift = 0.12 * static_cast<double>(r) / std::max(1, road_start);
          put(image, r, c, {sky[0] + lift, sky[1] + lift, sky[2] + lift * 0.5}, 0.01, rng);
          break;
        }
        case kBuilding: {
          const bool window = (r % 8) < 4 && (c % 7) < 3;
          put(image, r, c, window ? window_color : column_color[c], 0.02, rng);
          break;
        }
        case kVegetation:
          put(image, r, c, column_is_vegetation[c] ? column_color[c] : vegetation_base, 0.06, rng);
          break;
        case kCar:
          put(image, r, c, actor_detail[idx] ? window_color : actor_color[idx], 0.02, rng);
          break;
        case kPedestrian:
          put(image, r, c, actor_detail[idx] ? skin : actor_color[idx], 0.03, rng);
          break;
        default:
          put(image, r, c, road, 0.025, rng);
          break;
      }
    }
  }
  return {SegSample(std::move(image), std::move(labels)), road_start};
}

void quantize(Image& image) {
  for (double& v : image.data()) v = std::lround(v * 255.0) / 255.0;
}

void largest_component(std::vector<std::uint8_t>& mask, int height, int width) {
  std::vector<int> comp(mask.size(), -1);
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || comp[start] >= 0) continue;
    const int id = static_cast<int>(sizes.size());
    std::size_t size = 0;
    stack.push_back(start);
    comp[start] = id;
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++size;
      const int r = static_cast<int>(p / width);
      const int c = static_cast<int>(p % width);
      const int nr[4] = {r - 1, r + 1, r, r};
      const int nc[4] = {c, c, c - 1, c + 1};
      for (int k = 0; k < 4; ++k) {
        if (nr[k] < 0 || nr[k] >= height || nc[k] < 0 || nc[k] >= width) continue;
        const std::size_t q = static_cast<std::size_t>(nr[k]) * width + nc[k];
        if (mask[q] && comp[q] < 0) {
          comp[q] = id;
          stack.push_back(q);
        }
      }
    }
    sizes.push_back(size);
  }
  if (sizes.empty()) return;
  const int keep = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = comp[i] == keep ? 1 : 0;
}

std::vector<std::uint8_t> polygon_mask(int h, int w, Rng& rng) {
  const int n = static_cast<int>(rng.uniform_int(5, 9));
  std::vector<double> xs(n), ys(n);
  const double cx = w / 2.0, cy = h / 2.0;
  for (int i = 0; i < n; ++i) {
    const double angle = 2.0 * std::numbers::pi * (i + rng.uniform(-0.3, 0.3)) / n;
    const double radius = rng.uniform(0.55, 1.0);
    xs[i] = cx + radius * (w / 2.0) * std::cos(angle);
    ys[i] = cy + radius * (h / 2.0) * std::sin(angle);
  }
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(h) * w, 0);
  for (int r = 0; r < h; ++r) {
    const double py = r + 0.5;
    for (int c = 0; c < w; ++c) {
      const double px = c + 0.5;
      bool inside = false;
      for (int i = 0, j = n - 1; i < n; j = i++) {
        if ((ys[i] > py) != (ys[j] > py) &&
            px < (xs[j] - xs[i]) * (py - ys[i]) / (ys[j] - ys[i]) + xs[i]) {
          inside = !inside;
        }
      }
      mask[static_cast<std::size_t>(r) * w + c] = inside ? 1 : 0;
    }
  }
  return mask;
}

std::vector<std::uint8_t> ellipse_union_mask(int h, int w, Rng& rng) {
  struct Ellipse {
    double cx, cy, rx, ry, angle;
  };
  std::vector<Ellipse> ellipses;
  const int n = static_cast<int>(rng.uniform_int(1, 3));
  ellipses.push_back({w / 2.0, h / 2.0, rng.uniform(0.6, 1.0) * w / 2.0, rng.uniform(0.6, 1.0) * h / 2.0,
                      rng.uniform(0.0, std::numbers::pi)});
  for (int i = 1; i < n; ++i) {
    // Centers stay inside the first ellipse so the union is connected.
    const Ellipse& first = ellipses.front();
    const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double rho = rng.uniform(0.0, 0.6);
    ellipses.push_back({first.cx + rho * first.rx * std::cos(t), first.cy + rho * first.ry * std::sin(t),
                        rng.uniform(0.3, 0.6) * w / 2.0, rng.uniform(0.3, 0.6) * h / 2.0,
                        rng.uniform(0.0, std::numbers::pi)});
  }
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(h) * w, 0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double px = c + 0.5, py = r + 0.5;
      for (const Ellipse& e : ellipses) {
        const double dx = px - e.cx, dy = py - e.cy;
        const double u = (dx * std::cos(e.angle) + dy * std::sin(e.angle)) / std::max(e.rx, 0.5);
        const double v = (-dx * std::sin(e.angle) + dy * std::cos(e.angle)) / std::max(e.ry, 0.5);
        if (u * u + v * v <= 1.0) {
          mask[static_cast<std::size_t>(r) * w + c] = 1;
          break;
        }
      }
    }
  }
  return mask;
}

// Weight field in [0, 1] mixing the object's two colors.
std::vector<double> texture_field(OodFamily family, int h, int w, Rng& rng, std::string& name) {
  std::vector<double> field(static_cast<std::size_t>(h) * w);
  const double theta = rng.uniform(0.0, std::numbers::pi);
  if (family == OodFamily::kProxy) {
    if (rng.bernoulli(0.5)) {
      name = "checker";
      const int cell = static_cast<int>(rng.uniform_int(3, 7));
      const int phase = static_cast<int>(rng.uniform_int(0, cell - 1));
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
          field[static_cast<std::size_t>(r) * w + c] = (((r + phase) / cell + (c + phase) / cell) % 2) ? 1.0 : 0.0;
    } else {
      name = "stripe";
      const double half = rng.uniform(2.0, 5.0);
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const double t = (c * std::cos(theta) + r * std::sin(theta)) / half;
          field[static_cast<std::size_t>(r) * w + c] = (static_cast<long>(std::floor(t)) & 1) ? 1.0 : 0.0;
        }
    }
  } else {
    if (rng.bernoulli(0.5)) {
      name = "marble";
      const double freq = 1.0 / rng.uniform(6.0, 14.0);
      const auto turb = value_noise(h, w, rng.uniform(4.0, 8.0), rng);
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const std::size_t i = static_cast<std::size_t>(r) * w + c;
          const double t = (c * std::cos(theta) + r * std::sin(theta)) * freq;
          field[i] = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * t + 4.0 * turb[i]);
        }
    } else {
      name = "blob";
      const auto noise = value_noise(h, w, rng.uniform(4.0, 8.0), rng);
      for (std::size_t i = 0; i < field.size(); ++i) {
        const double t = std::clamp((noise[i] - 0.4) / 0.2, 0.0, 1.0);
        field[i] = t * t * (3.0 - 2.0 * t);
      }
    }
  }
  return field;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::string_view scene_class_name(int cls) {
  switch (cls) {
    case kRoad: return "road";
    case kSky: return "sky";
    case kBuilding: return "building";
    case kVegetation: return "vegetation";
    case kCar: return "car";
    case kPedestrian: return "pedestrian";
    default: return "unknown";
  }
}

StyleDomain style_domain(std::string_view name) {
  if (name == "raw") return StyleDomain{};
  if (name == "styleA") return {"styleA", {1.0, 0.98, 0.95}, {0.02, 0.02, 0.03}, 1.0, 0.015};
  if (name == "styleB") return {"styleB", {0.85, 0.90, 1.05}, {0.06, 0.0, -0.03}, 1.25, 0.03};
  if (name == "styleP") return {"styleP", {0.25, 0.25, 0.25}, {0.35, 0.35, 0.35}, 1.0, 0.0};
  throw ArgumentError("unknown style domain '" + std::string(name) + "'");
}

std::vector<std::string> builtin_style_names() { return {"raw", "styleA", "styleB", "styleP"}; }

void apply_style(Image& image, const StyleDomain& style, std::uint64_t seed, std::span<const std::uint8_t> mask) {
  if (!mask.empty() && mask.size() != image.pixel_count()) throw ArgumentError("style mask size mismatch");
  if (!(style.gamma > 0.0) || style.noise_sigma < 0.0) throw ArgumentError("invalid style domain");
  Rng rng(mix_seed(seed, kStreamStyleNoise));
  auto data = image.data();
  for (std::size_t p = 0; p < image.pixel_count(); ++p) {
    if (!mask.empty() && !mask[p]) continue;
    for (int ch = 0; ch < 3; ++ch) {
      double& x = data[p * 3 + ch];
      const double shaped = style.gamma == 1.0 ? x : std::pow(x, style.gamma);
      double v = style.channel_gains[ch] * shaped + style.channel_offsets[ch];
      if (style.noise_sigma > 0.0) v += style.noise_sigma * rng.normal();
      x = std::clamp(v, 0.0, 1.0);
    }
  }
}

Image invert_style(const Image& image, const StyleDomain& style) {
  Image out = image;
  for (std::size_t p = 0; p < image.pixel_count(); ++p) {
    for (int ch = 0; ch < 3; ++ch) {
      double& x = out.data()[p * 3 + ch];
      double v = (x - style.channel_offsets[ch]) / style.channel_gains[ch];
      v = std::clamp(v, 0.0, 1.0);
      x = style.gamma == 1.0 ? v : std::pow(v, 1.0 / style.gamma);
    }
  }
  return out;
}

SegSample generate_scene(const SceneSpec& spec) {
  if (spec.height <= 0 || spec.width <= 0) throw ArgumentError("scene must have positive area");
  if (spec.classes != kSceneClasses) throw ArgumentError("synthetic scenes have exactly 6 classes");
  RawScene raw = generate_raw_scene(spec.height, spec.width, spec.seed);
  apply_style(raw.sample.image, spec.style, spec.seed);
  return std::move(raw.sample);
}

std::string_view family_name(OodFamily family) { return family == OodFamily::kProxy ? "proxy" : "test"; }

std::size_t OodObject::area() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

OodObject generate_ood_object(OodFamily family, std::uint64_t seed, int scene_height, int scene_width) {
  if (scene_height <= 0 || scene_width <= 0) throw ArgumentError("scene must have positive area");
  Rng shape_rng(mix_seed(seed, kStreamObjectShape + (family == OodFamily::kTest ? 100 : 0)));
  Rng tex_rng(mix_seed(seed, kStreamObjectTexture + (family == OodFamily::kTest ? 100 : 0)));
  const int side = std::min(scene_height, scene_width);
  const int lo = std::max(3, static_cast<int>(0.25 * side));
  const int hi = std::max(lo, static_cast<int>(0.5 * side));

  OodObject object;
  object.family = family;
  object.height = static_cast<int>(shape_rng.uniform_int(lo, hi));
  object.width = static_cast<int>(shape_rng.uniform_int(lo, hi));
  if (family == OodFamily::kProxy) {
    object.shape_generator = "polygon";
    object.mask = polygon_mask(object.height, object.width, shape_rng);
  } else {
    object.shape_generator = "ellipse_union";
    object.mask = ellipse_union_mask(object.height, object.width, shape_rng);
  }
  largest_component(object.mask, object.height, object.width);
  if (object.area() == 0) {
    object.mask[static_cast<std::size_t>(object.height / 2) * object.width + object.width / 2] = 1;
  }

  // Two vivid, roughly complementary colors.
  const double hue = tex_rng.uniform(0.0, 1.0);
  const Rgb first = hsv(hue, tex_rng.uniform(0.7, 1.0), tex_rng.uniform(0.7, 1.0));
  const Rgb second = hsv(std::fmod(hue + tex_rng.uniform(0.4, 0.6), 1.0), tex_rng.uniform(0.7, 1.0),
                         tex_rng.uniform(0.7, 1.0));
  const auto field = texture_field(family, object.height, object.width, tex_rng, object.texture_generator);
  object.texture = Image(object.height, object.width);
  for (int r = 0; r < object.height; ++r) {
    for (int c = 0; c < object.width; ++c) {
      if (!object.in_mask(r, c)) continue;
      const double t = field[static_cast<std::size_t>(r) * object.width + c];
      for (int ch = 0; ch < 3; ++ch) object.texture.at(r, c, ch) = first[ch] * (1.0 - t) + second[ch] * t;
    }
  }
  return object;
}

bool mask_is_connected(const OodObject& object) {
  if (object.area() == 0) return false;
  std::vector<std::uint8_t> copy = object.mask;
  largest_component(copy, object.height, object.width);
  return copy == object.mask;
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kEval: return "eval";
  }
  return "unknown";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "eval") return Split::kEval;
  throw FormatError("unknown split '" + std::string(name) + "'");
}

std::vector<std::size_t> Corpus::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].split == split) out.push_back(i);
  }
  return out;
}

std::string corpus_file_stem(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d", id);
  return buf;
}

Corpus generate_corpus(const CorpusSpec& spec) {
  if (spec.n_train < 1 || spec.n_val < 1 || spec.n_ood_eval < 1) throw ArgumentError("corpus counts must be >= 1");
  if (spec.max_eval_objects < 1) throw ArgumentError("max_eval_objects must be >= 1");
  Corpus corpus;
  int id = 0;
  auto add = [&](Split split, int count) {
    for (int i = 0; i < count; ++i, ++id) {
      const std::uint64_t seed = mix_seed(spec.seed, static_cast<std::uint64_t>(id));
      RawScene raw = generate_raw_scene(spec.height, spec.width, seed);
      bool has_ood = false;
      if (split == Split::kEval) {
        Rng rng(mix_seed(seed, kStreamEvalPlacement));
        const int n_objects = static_cast<int>(rng.uniform_int(1, spec.max_eval_objects));
        for (int k = 0; k < n_objects; ++k) {
          const std::uint64_t object_seed = mix_seed(seed, kStreamEvalObjects * 1000 + k);
          const OodObject object = generate_ood_object(OodFamily::kTest, object_seed, spec.height, spec.width);
          // Anomalies sit in the lower half of the frame, over the road band.
          const int row_hi = spec.height - object.height;
          const int row_lo = std::clamp(raw.road_start - object.height / 2, 0, row_hi);
          const int row = static_cast<int>(rng.uniform_int(row_lo, row_hi));
          const int col = static_cast<int>(rng.uniform_int(0, spec.width - object.width));
          paste_in_place(raw.sample, object, row, col);
          corpus.objects.push_back({id, object.family, object.shape_generator, object.texture_generator,
                                    object_seed, row, col, object.area()});
          has_ood = true;
        }
      }
      apply_style(raw.sample.image, spec.style, seed);
      quantize(raw.sample.image);
      corpus.entries.push_back({id, split, spec.style.name, has_ood, seed});
      corpus.samples.push_back(std::move(raw.sample));
    }
  };
  add(Split::kTrain, spec.n_train);
  add(Split::kVal, spec.n_val);
  add(Split::kEval, spec.n_ood_eval);
  return corpus;
}

Corpus build_corpus(const CorpusSpec& spec, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
  std::error_code ec;
  if (!parent.empty() && !fs::is_directory(parent, ec)) throw IoError("parent directory missing: " + parent.string());
  fs::create_directory(dir, ec);
  fs::create_directory(dir / "images", ec);
  fs::create_directory(dir / "labels", ec);
  if (!fs::is_directory(dir / "images") || !fs::is_directory(dir / "labels")) {
    throw IoError("cannot create corpus directory " + dir.string());
  }

  Corpus corpus = generate_corpus(spec);
  std::ostringstream index;
  index << "# rng=" << kRngAlgorithm << "\n";
  index << "id,split,style,has_ood,seed\n";
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const CorpusEntry& e = corpus.entries[i];
    const std::string stem = corpus_file_stem(e.id);
    write_image(corpus.samples[i].image, dir / "images" / (stem + ".ppm"));
    write_label_map(corpus.samples[i].labels, dir / "labels" / (stem + ".pgm"));
    index << stem << ',' << split_name(e.split) << ',' << e.style << ',' << (e.has_ood ? 1 : 0) << ',' << e.seed
          << "\n";
  }
  write_text(dir / "index.csv", index.str());

  std::ostringstream objects;
  objects << "id,family,shape,texture,object_seed,row,col,area\n";
  for (const PastedObjectRecord& o : corpus.objects) {
    objects << corpus_file_stem(o.id) << ',' << family_name(o.family) << ',' << o.shape_generator << ','
            << o.texture_generator << ',' << o.object_seed << ',' << o.row << ',' << o.col << ',' << o.area << "\n";
  }
  write_text(dir / "objects.csv", objects.str());
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& dir) {
  std::ifstream in(dir / "index.csv");
  if (!in) throw IoError("missing index.csv in " + dir.string());
  Corpus corpus;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "id,split,style,has_ood,seed") throw FormatError("unexpected index.csv header");
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 5) throw FormatError("malformed index.csv row: " + line);
    CorpusEntry e;
    try {
      e.id = std::stoi(fields[0]);
      e.seed = std::stoull(fields[4]);
    } catch (const std::exception&) {
      throw FormatError("malformed index.csv row: " + line);
    }
    e.split = parse_split(fields[1]);
    e.style = fields[2];
    e.has_ood = fields[3] == "1";
    const std::string stem = fields[0];
    corpus.samples.emplace_back(read_image(dir / "images" / (stem + ".ppm")),
                                read_label_map(dir / "labels" / (stem + ".pgm")));
    corpus.entries.push_back(std::move(e));
  }
  if (corpus.entries.empty()) throw ArgumentError("corpus " + dir.string() + " is empty");
  return corpus;
}

}  // namespace oodseg
