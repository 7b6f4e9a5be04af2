#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vcap/data/corpus.hpp"
#include "vcap/error.hpp"
#include "vcap/io/binary.hpp"

namespace vcap::data {
namespace {

using nlohmann::json;

constexpr std::string_view kFramesMagic = "VCFR";
constexpr std::string_view kFeaturesMagic = "VCFT";
constexpr std::uint32_t kFramesVersion = 1;
constexpr std::uint32_t kFeaturesVersion = 1;

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path.string());
  return is;
}

}  // namespace

void write_frames(const fs::path& path, const nn::Tensor& frames) {
  if (frames.rank() != 4) throw DimensionError("frames must be (T,H,W,C), got " + nn::shape_string(frames.shape()));
  auto os = open_out(path);
  io::write_magic(os, kFramesMagic);
  io::write_le<std::uint32_t>(os, kFramesVersion);
  for (std::size_t d = 0; d < 4; ++d) io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(frames.dim(d)));
  for (double v : frames.values()) io::write_le<float>(os, static_cast<float>(v));
  if (!os) throw Error("write failed: " + path.string());
}

nn::Tensor read_frames(const fs::path& path) {
  auto is = open_in(path);
  io::expect_magic(is, kFramesMagic, path.string());
  const auto version = io::read_le<std::uint32_t>(is);
  if (version != kFramesVersion) throw FormatError(path.string() + ": unsupported frame file version");
  nn::Shape shape(4);
  for (auto& d : shape) d = io::read_le<std::uint32_t>(is);
  const std::size_t n = nn::shape_size(shape);
  if (n == 0 || n > (1u << 28)) throw FormatError(path.string() + ": implausible frame dims");
  std::vector<double> data(n);
  for (auto& v : data) v = io::read_le<float>(is);
  return nn::Tensor(shape, std::move(data));
}

void write_manifest(const DatasetManifest& m, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "manifest.jsonl", std::ios::trunc);
    if (!os) throw Error("cannot write manifest under " + dir.string());
    for (const auto& c : m.clips) {
      json j;
      j["id"] = c.id;
      j["split"] = to_string(c.split);
      j["frames"] = c.frames_path;
      j["captions"] = c.captions;
      j["scene"] = {{"subject", c.scene.subject},
                    {"action", c.scene.action},
                    {"color", c.scene.color},
                    {"speed", c.scene.speed},
                    {"seed", c.scene.seed}};
      os << j.dump() << '\n';
    }
  }
  json meta;
  meta["grammar_version"] = m.grammar_version;
  meta["seed"] = m.config.seed;
  meta["train_clips"] = m.config.train_clips;
  meta["val_clips"] = m.config.val_clips;
  meta["test_clips"] = m.config.test_clips;
  meta["frames_per_clip"] = m.config.frames_per_clip;
  meta["grammar_size"] = m.config.grammar_size;
  meta["frame_size"] = m.config.frame_size;
  std::ofstream os(dir / "meta.json", std::ios::trunc);
  os << meta.dump(2) << '\n';
}

DatasetManifest read_manifest(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "manifest.jsonl" : path;
  std::ifstream is(file);
  if (!is) throw Error("cannot read manifest " + file.string());
  DatasetManifest m;
  m.root = file.parent_path();
  std::string line;
  std::size_t lineno = 0;
  try {
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      const json j = json::parse(line);
      ClipRecord c;
      c.id = j.at("id").get<std::string>();
      c.split = parse_split(j.at("split").get<std::string>());
      c.frames_path = j.value("frames", std::string());
      c.captions = j.at("captions").get<std::vector<std::string>>();
      if (j.contains("scene")) {
        const auto& s = j["scene"];
        c.scene = {s.at("subject").get<int>(), s.at("action").get<int>(), s.at("color").get<int>(),
                   s.at("speed").get<int>(), s.at("seed").get<std::uint64_t>()};
      }
      m.clips.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw FormatError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
  } catch (const UsageError& e) {
    throw FormatError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
  }
  const fs::path meta_path = m.root / "meta.json";
  if (fs::exists(meta_path)) {
    std::ifstream ms(meta_path);
    try {
      const json meta = json::parse(ms);
      m.grammar_version = meta.value("grammar_version", kGrammarVersion);
      m.config.seed = meta.value("seed", std::uint64_t{0});
      m.config.train_clips = meta.value("train_clips", std::size_t{0});
      m.config.val_clips = meta.value("val_clips", std::size_t{0});
      m.config.test_clips = meta.value("test_clips", std::size_t{0});
      m.config.frames_per_clip = meta.value("frames_per_clip", 0);
      m.config.grammar_size = meta.value("grammar_size", 0);
      m.config.frame_size = meta.value("frame_size", 0);
    } catch (const json::exception& e) {
      throw FormatError(meta_path.string() + ": " + e.what());
    }
  }
  std::map<std::string, Split> seen;
  for (const auto& c : m.clips) {
    auto [it, fresh] = seen.emplace(c.id, c.split);
    if (!fresh) throw FormatError("manifest lists clip '" + c.id + "' twice");
  }
  return m;
}

void write_features(const fs::path& path, const FeatureMap& features) {
  std::size_t dim = 0;
  for (const auto& [id, t] : features) {
    if (t.rank() != 2) throw DimensionError("features for '" + id + "' must be (T, feat_dim)");
    if (dim == 0) dim = t.dim(1);
    if (t.dim(1) != dim) throw DimensionError("features for '" + id + "' have inconsistent feat_dim");
  }
  auto os = open_out(path);
  io::write_magic(os, kFeaturesMagic);
  io::write_le<std::uint32_t>(os, kFeaturesVersion);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(features.size()));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(dim));
  for (const auto& [id, t] : features) {
    io::write_string(os, id);
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.dim(0)));
    for (double v : t.values()) io::write_le<double>(os, v);
  }
  if (!os) throw Error("write failed: " + path.string());
}

FeatureMap load_features(const fs::path& path, std::size_t feat_dim) {
  auto is = open_in(path);
  io::expect_magic(is, kFeaturesMagic, path.string());
  if (io::read_le<std::uint32_t>(is) != kFeaturesVersion) {
    throw FormatError(path.string() + ": unsupported feature file version");
  }
  const auto count = io::read_le<std::uint32_t>(is);
  const auto dim = io::read_le<std::uint32_t>(is);
  if (dim != feat_dim) {
    throw DimensionError(path.string() + ": feature file has feat_dim " + std::to_string(dim) +
                         " but the model expects feat_dim " + std::to_string(feat_dim));
  }
  FeatureMap out;
  for (std::uint32_t k = 0; k < count; ++k) {
    auto id = io::read_string(is);
    const auto steps = io::read_le<std::uint32_t>(is);
    if (steps == 0 || steps > (1u << 20)) throw FormatError(path.string() + ": bad step count for '" + id + "'");
    nn::Tensor t({steps, dim});
    for (auto& v : t.values()) v = io::read_le<double>(is);
    out.emplace(std::move(id), std::move(t));
  }
  return out;
}

std::vector<Clip> load_clips(const DatasetManifest& manifest, Split split, const FeatureMap* features) {
  std::vector<Clip> out;
  for (const auto* rec : manifest.split(split)) {
    Clip c;
    c.id = rec->id;
    for (const auto& cap : rec->captions) c.captions.push_back(tokenize(cap));
    if (c.captions.empty()) throw FormatError("clip '" + rec->id + "' has no captions");
    if (features) {
      auto it = features->find(rec->id);
      if (it == features->end()) throw FormatError("no features for clip '" + rec->id + "'");
      c.features = it->second;
    } else {
      c.frames = read_frames(manifest.root / rec->frames_path);
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace vcap::data
