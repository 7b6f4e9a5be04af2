#include <algorithm>
#include <cmath>
#include <numbers>

#include <spdlog/spdlog.h>

#include "vcap/data/corpus.hpp"
#include "vcap/error.hpp"

namespace vcap::data {
namespace {

struct Rgb {
  float r, g, b;
};

const Rgb kColors[kMaxGrammarSize] = {{1.0f, 0.0f, 0.0f},  {0.0f, 1.0f, 0.0f}, {0.25f, 0.5f, 1.0f},
                                      {1.0f, 1.0f, 0.0f},  {0.0f, 1.0f, 1.0f}, {1.0f, 0.0f, 1.0f},
                                      {1.0f, 1.0f, 1.0f},  {1.0f, 0.5f, 0.0f}};

constexpr double kSpeed[2] = {1.5, 3.0};
constexpr double kRadius = 4.5;

bool inside(int subject, double dx, double dy, double r) {
  const double ax = std::fabs(dx), ay = std::fabs(dy);
  switch (subject) {
    case 0:  // ball
      return dx * dx + dy * dy <= r * r;
    case 1:  // square
      return std::max(ax, ay) <= 0.85 * r;
    case 2:  // triangle, apex up
      return dy >= -r && dy <= r && ax <= (dy + r) / 2.0;
    case 3: {  // ring
      const double d2 = dx * dx + dy * dy;
      return d2 <= r * r && d2 >= 0.3 * r * r;
    }
    case 4:  // cross
      return (ax <= 0.3 * r && ay <= r) || (ay <= 0.3 * r && ax <= r);
    case 5:  // bar
      return ax <= r && ay <= 0.35 * r;
    case 6:  // diamond
      return ax + ay <= r;
    default:  // pole
      return ax <= 0.35 * r && ay <= r;
  }
}

struct Pose {
  double x, y, r;
};

// Offsets from the start point; the start point itself is placed afterwards.
std::vector<Pose> trajectory(const SceneSpec& s, int frames) {
  const double d = kSpeed[s.speed];
  std::vector<Pose> out;
  for (int t = 0; t < frames; ++t) {
    const double tt = t;
    Pose p{0.0, 0.0, kRadius};
    switch (s.action) {
      case 0:  // slides: rightwards
        p.x = d * tt;
        break;
      case 1:  // rises
        p.y = -d * tt;
        break;
      case 2:  // falls
        p.y = d * tt;
        break;
      case 3:  // bounces
        p.y = -2.0 * d * std::fabs(std::sin(tt * std::numbers::pi / 3.0));
        break;
      case 4:  // drifts: leftwards
        p.x = -d * tt;
        break;
      case 5:  // grows
        p.r = 2.0 + 0.4 * d * tt;
        break;
      case 6:  // shrinks
        p.r = 2.0 + 0.4 * d * (frames - 1 - tt);
        break;
      default:  // shakes
        p.x = (t % 2 == 0 ? -0.75 : 0.75) * d;
        break;
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace

std::string to_string(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::val:
      return "val";
    default:
      return "test";
  }
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw UsageError("unknown split '" + name + "' (expected train, val or test)");
}

const std::vector<std::string>& color_words() {
  static const std::vector<std::string> w = {"red", "green", "blue", "yellow", "cyan", "magenta", "white", "orange"};
  return w;
}
const std::vector<std::string>& subject_words() {
  static const std::vector<std::string> w = {"ball", "square", "triangle", "ring", "cross", "bar", "diamond", "pole"};
  return w;
}
const std::vector<std::string>& action_ing_words() {
  static const std::vector<std::string> w = {"sliding",  "rising",  "falling",   "bouncing",
                                             "drifting", "growing", "shrinking", "shaking"};
  return w;
}
const std::vector<std::string>& action_s_words() {
  static const std::vector<std::string> w = {"slides", "rises", "falls", "bounces",
                                             "drifts", "grows", "shrinks", "shakes"};
  return w;
}
const std::vector<std::string>& speed_words() {
  static const std::vector<std::string> w = {"slowly", "quickly"};
  return w;
}
const std::vector<std::string>& template_function_words() {
  static const std::vector<std::string> w = {"a", "is", "the", "there"};
  return w;
}

void CorpusConfig::set_total(std::size_t clips) {
  val_clips = clips * 3 / 29;
  test_clips = clips * 6 / 29;
  if (clips >= 3) {
    val_clips = std::max<std::size_t>(val_clips, 1);
    test_clips = std::max<std::size_t>(test_clips, 1);
  }
  train_clips = clips - val_clips - test_clips;
}

void CorpusConfig::validate() const {
  if (grammar_size < 1 || grammar_size > kMaxGrammarSize) {
    throw RangeError("grammar size must be in [1, " + std::to_string(kMaxGrammarSize) + "], got " +
                     std::to_string(grammar_size));
  }
  if (frames_per_clip < 1) throw RangeError("frames per clip must be positive");
  if (frame_size < 8) throw RangeError("frame size must be at least 8");
  if (total() == 0) throw RangeError("corpus needs at least one clip");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t clip_seed(std::uint64_t corpus_seed, std::size_t index) {
  return splitmix64(splitmix64(corpus_seed) + static_cast<std::uint64_t>(index));
}

SceneSpec draw_scene(std::uint64_t seed, int grammar_size) {
  if (grammar_size < 1 || grammar_size > kMaxGrammarSize) throw RangeError("grammar size out of range");
  const auto g = static_cast<std::uint64_t>(grammar_size);
  std::uint64_t s = seed;
  auto next = [&s] { return s = splitmix64(s); };
  SceneSpec scene;
  scene.subject = static_cast<int>(next() % g);
  scene.action = static_cast<int>(next() % g);
  scene.color = static_cast<int>(next() % g);
  scene.speed = static_cast<int>(next() % 2);
  scene.seed = next();
  return scene;
}

std::vector<std::string> describe(const SceneSpec& s) {
  const auto& c = color_words()[static_cast<std::size_t>(s.color)];
  const auto& o = subject_words()[static_cast<std::size_t>(s.subject)];
  const auto& ing = action_ing_words()[static_cast<std::size_t>(s.action)];
  const auto& vs = action_s_words()[static_cast<std::size_t>(s.action)];
  const auto& sp = speed_words()[static_cast<std::size_t>(s.speed)];
  return {
      "a " + c + " " + o + " is " + ing,
      "the " + c + " " + o + " " + vs + " " + sp,
      "a " + o + " is " + ing + " " + sp,
      "there is a " + c + " " + o + " " + ing,
      "a " + c + " " + o + " " + vs,
  };
}

nn::Tensor render_clip(const SceneSpec& s, int frames, int size) {
  if (frames < 1 || size < 8) throw RangeError("render_clip: bad raster size");
  const auto poses = trajectory(s, frames);
  const double sz = size;
  // place the start point so the whole trajectory stays on the canvas
  double lo_x = -1e9, hi_x = 1e9, lo_y = -1e9, hi_y = 1e9;
  for (const auto& p : poses) {
    lo_x = std::max(lo_x, p.r - p.x);
    hi_x = std::min(hi_x, sz - p.r - p.x);
    lo_y = std::max(lo_y, p.r - p.y);
    hi_y = std::min(hi_y, sz - p.r - p.y);
  }
  const double ux = static_cast<double>(splitmix64(s.seed) >> 11) * 0x1.0p-53;
  const double uy = static_cast<double>(splitmix64(s.seed ^ 0x5bd1e995ULL) >> 11) * 0x1.0p-53;
  const double x0 = lo_x <= hi_x ? lo_x + ux * (hi_x - lo_x) : sz / 2.0;
  const double y0 = lo_y <= hi_y ? lo_y + uy * (hi_y - lo_y) : sz / 2.0;

  const auto n = static_cast<std::size_t>(size);
  nn::Tensor out({static_cast<std::size_t>(frames), n, n, 3});
  const Rgb col = kColors[s.color];
  for (int t = 0; t < frames; ++t) {
    const auto& p = poses[static_cast<std::size_t>(t)];
    const double cx = x0 + p.x, cy = y0 + p.y;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!inside(s.subject, (static_cast<double>(j) + 0.5) - cx, (static_cast<double>(i) + 0.5) - cy, p.r)) continue;
        const std::size_t base = ((static_cast<std::size_t>(t) * n + i) * n + j) * 3;
        out[base] = col.r;
        out[base + 1] = col.g;
        out[base + 2] = col.b;
      }
    }
  }
  return out;
}

std::vector<const ClipRecord*> DatasetManifest::split(Split s) const {
  std::vector<const ClipRecord*> out;
  for (const auto& c : clips) {
    if (c.split == s) out.push_back(&c);
  }
  return out;
}

DatasetManifest generate_corpus(const CorpusConfig& config, const fs::path& out_dir) {
  config.validate();
  fs::create_directories(out_dir / "frames");
  DatasetManifest m;
  m.config = config;
  m.root = out_dir;
  const std::size_t total = config.total();
  for (std::size_t i = 0; i < total; ++i) {
    ClipRecord rec;
    char id[32];
    std::snprintf(id, sizeof id, "clip%05zu", i);
    rec.id = id;
    rec.split = i < config.train_clips ? Split::train
                : i < config.train_clips + config.val_clips ? Split::val
                                                            : Split::test;
    rec.scene = draw_scene(clip_seed(config.seed, i), config.grammar_size);
    rec.captions = describe(rec.scene);
    rec.frames_path = "frames/" + rec.id + ".vcfr";
    write_frames(out_dir / rec.frames_path, render_clip(rec.scene, config.frames_per_clip, config.frame_size));
    m.clips.push_back(std::move(rec));
  }
  write_manifest(m, out_dir);
  spdlog::info("generated {} clips ({} train / {} val / {} test) under {}", total, config.train_clips,
               config.val_clips, config.test_clips, out_dir.string());
  return m;
}

std::vector<Tokens> training_captions(const DatasetManifest& manifest) {
  std::vector<Tokens> out;
  for (const auto* c : manifest.split(Split::train)) {
    for (const auto& cap : c->captions) out.push_back(tokenize(cap));
  }
  return out;
}

}  // namespace vcap::data
