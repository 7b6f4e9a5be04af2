#include "vcap/train/checkpoint.hpp"

#include <fstream>

#include "vcap/error.hpp"
#include "vcap/io/binary.hpp"

namespace vcap::train {

namespace {

constexpr std::string_view kMagic = "VCCK";
constexpr std::uint32_t kVersion = 1;

void write_tensor(std::ostream& os, const nn::Tensor& t) {
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  for (double v : t.values()) io::write_le<double>(os, v);
}

nn::Tensor read_tensor(std::istream& is) {
  const auto rank = io::read_le<std::uint32_t>(is);
  if (rank > 8) throw FormatError("checkpoint: tensor rank " + std::to_string(rank) + " is implausible");
  nn::Shape shape(rank);
  for (auto& d : shape) d = io::read_le<std::uint32_t>(is);
  nn::Tensor t(shape);
  for (auto& v : t.values()) v = io::read_le<double>(is);
  return t;
}

void write_strings(std::ostream& os, const std::vector<std::string>& v) {
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(v.size()));
  for (const auto& s : v) io::write_string(os, s);
}

std::vector<std::string> read_strings(std::istream& is) {
  const auto n = io::read_le<std::uint32_t>(is);
  std::vector<std::string> v;
  v.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) v.push_back(io::read_string(is));
  return v;
}

}  // namespace

using io::write_le;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (!ckpt.adam.first_moment.empty() && !ckpt.adam.matches(ckpt.params)) {
    throw DimensionError("checkpoint: optimizer state does not match the parameters");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot write " + path.string());
  io::write_magic(os, kMagic);
  write_le<std::uint32_t>(os, kVersion);
  write_le<std::int32_t>(os, ckpt.stage);
  write_le<std::uint64_t>(os, ckpt.iteration);
  write_le<double>(os, ckpt.best_val_cider);
  io::write_string(os, ckpt.model.to_json().dump());
  write_strings(os, ckpt.vocabulary);
  write_strings(os, ckpt.attributes);

  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& p : ckpt.params) {
    io::write_string(os, p->name);
    write_le<std::uint8_t>(os, p->frozen ? 1 : 0);
    write_tensor(os, p->tensor);
  }
  write_le<std::uint64_t>(os, ckpt.adam.step);
  const bool moments = !ckpt.adam.first_moment.empty();
  write_le<std::uint8_t>(os, moments ? 1 : 0);
  if (moments) {
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
      write_tensor(os, ckpt.adam.first_moment[i]);
      write_tensor(os, ckpt.adam.second_moment[i]);
    }
  }
  if (!os) throw Error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read checkpoint " + path.string());
  const std::string what = "checkpoint " + path.string();
  io::expect_magic(is, kMagic, what);
  const auto version = io::read_le<std::uint32_t>(is);
  if (version != kVersion) throw FormatError(what + ": unsupported version " + std::to_string(version));
  Checkpoint c;
  c.stage = io::read_le<std::int32_t>(is);
  c.iteration = io::read_le<std::uint64_t>(is);
  c.best_val_cider = io::read_le<double>(is);
  try {
    c.model = model::CaptionerConfig::from_json(nlohmann::json::parse(io::read_string(is)));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(what + ": bad model config: " + e.what());
  }
  c.vocabulary = read_strings(is);
  c.attributes = read_strings(is);

  const auto count = io::read_le<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = io::read_string(is);
    const bool frozen = io::read_le<std::uint8_t>(is) != 0;
    c.params.add(name, read_tensor(is), frozen);
  }
  c.adam.step = io::read_le<std::uint64_t>(is);
  if (io::read_le<std::uint8_t>(is) != 0) {
    for (std::uint32_t i = 0; i < count; ++i) {
      c.adam.first_moment.push_back(read_tensor(is));
      c.adam.second_moment.push_back(read_tensor(is));
    }
    if (!c.adam.matches(c.params)) throw FormatError(what + ": optimizer moments do not match parameters");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError(what + ": trailing bytes");
  if (c.vocabulary.size() + Vocabulary::kReserved != c.model.vocab_size) {
    throw FormatError(what + ": vocabulary size disagrees with the model config");
  }
  return c;
}

}  // namespace vcap::train
