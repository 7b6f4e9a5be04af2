#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vcap/data/text.hpp"
#include "vcap/nn/tensor.hpp"

namespace vcap::data {

namespace fs = std::filesystem;

enum class Split { train, val, test };

std::string to_string(Split s);
Split parse_split(const std::string& name);

inline constexpr int kGrammarVersion = 1;
inline constexpr int kMaxGrammarSize = 8;
inline constexpr int kCaptionTemplates = 5;

/// Closed word tables of the synthetic grammar, each of length kMaxGrammarSize.
const std::vector<std::string>& color_words();
const std::vector<std::string>& subject_words();
const std::vector<std::string>& action_ing_words();
const std::vector<std::string>& action_s_words();
const std::vector<std::string>& speed_words();  // slowly, quickly
/// Function words used by the caption templates.
const std::vector<std::string>& template_function_words();

struct SceneSpec {
  int subject = 0;
  int action = 0;
  int color = 0;
  int speed = 0;
  std::uint64_t seed = 0;  // start position

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

struct CorpusConfig {
  std::size_t train_clips = 200;
  std::size_t val_clips = 30;
  std::size_t test_clips = 60;
  int frames_per_clip = 8;
  int grammar_size = 4;
  int frame_size = 32;
  std::uint64_t seed = 1;

  std::size_t total() const { return train_clips + val_clips + test_clips; }
  /// Splits `clips` in the default 20:3:6 ratio; train gets the remainder, val/test at least one clip each.
  void set_total(std::size_t clips);
  void validate() const;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t clip_seed(std::uint64_t corpus_seed, std::size_t index);

SceneSpec draw_scene(std::uint64_t seed, int grammar_size);
/// All kCaptionTemplates reference captions of a scene.
std::vector<std::string> describe(const SceneSpec& scene);
/// (T, size, size, 3) raster in [0,1]; every value is exactly representable as float.
nn::Tensor render_clip(const SceneSpec& scene, int frames, int size);

struct ClipRecord {
  std::string id;
  Split split = Split::train;
  std::string frames_path;  // relative to the manifest directory
  std::vector<std::string> captions;
  SceneSpec scene;
};

struct DatasetManifest {
  std::vector<ClipRecord> clips;
  int grammar_version = kGrammarVersion;
  CorpusConfig config;
  fs::path root;

  std::vector<const ClipRecord*> split(Split s) const;
};

/// Renders every clip, writes frame files, manifest.jsonl and meta.json under out_dir.
DatasetManifest generate_corpus(const CorpusConfig& config, const fs::path& out_dir);

void write_manifest(const DatasetManifest& manifest, const fs::path& dir);
/// Accepts the corpus directory or the manifest.jsonl path.
DatasetManifest read_manifest(const fs::path& path);

void write_frames(const fs::path& path, const nn::Tensor& frames);
nn::Tensor read_frames(const fs::path& path);

/// Per-clip (T, feat_dim) feature sequences keyed by clip id.
using FeatureMap = std::map<std::string, nn::Tensor>;

void write_features(const fs::path& path, const FeatureMap& features);
/// Throws DimensionError naming both sizes when the stored dim differs from feat_dim.
FeatureMap load_features(const fs::path& path, std::size_t feat_dim);

/// In-memory clip: exactly one of frames (T,H,W,C) or features (T,feat_dim) is set.
struct Clip {
  std::string id;
  nn::Tensor frames;
  nn::Tensor features;
  std::vector<Tokens> captions;

  bool has_frames() const { return !frames.empty(); }
  std::size_t length() const { return has_frames() ? frames.dim(0) : features.dim(0); }
};

/// Loads a split; with `features` set the clips carry features instead of frames.
std::vector<Clip> load_clips(const DatasetManifest& manifest, Split split, const FeatureMap* features = nullptr);

/// Training-split caption tokens, the input to vocabulary and attribute mining.
std::vector<Tokens> training_captions(const DatasetManifest& manifest);

}  // namespace vcap::data
