#include "sketchxai/data/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "sketchxai/util/binary_io.hpp"
#include "sketchxai/util/error.hpp"

namespace sketchxai::data {

Dataset split_dataset(const std::vector<Sketch>& collection, const std::vector<std::string>& categories,
                      SplitCounts counts, std::uint64_t seed) {
  Dataset ds;
  ds.categories = categories;
  const auto vocab = categories.size();
  std::vector<std::vector<std::size_t>> by_class(vocab);
  for (std::size_t i = 0; i < collection.size(); ++i) {
    const auto& s = collection[i];
    if (!s.label || *s.label < 0 || static_cast<std::size_t>(*s.label) >= vocab) {
      throw Error(ErrorCode::kInvalidArgument, "sketch " + std::to_string(i) + " has no valid label");
    }
    by_class[static_cast<std::size_t>(*s.label)].push_back(i);
  }

  std::mt19937_64 rng(seed);
  const std::size_t need = counts.train + counts.valid + counts.test;
  for (std::size_t c = 0; c < vocab; ++c) {
    auto& ids = by_class[c];
    if (ids.size() < need) {
      throw Error(ErrorCode::kInsufficientSamples, "class '" + categories[c] + "' has " + std::to_string(ids.size()) +
                                                       " samples, split needs " + std::to_string(need));
    }
    std::shuffle(ids.begin(), ids.end(), rng);
    auto take = [&](std::size_t begin, std::size_t n, std::vector<Sketch>& dst, std::vector<std::size_t>& dst_ids) {
      for (std::size_t k = begin; k < begin + n; ++k) {
        dst.push_back(collection[ids[k]]);
        dst_ids.push_back(ids[k]);
      }
    };
    take(0, counts.train, ds.train, ds.train_ids);
    take(counts.train, counts.valid, ds.valid, ds.valid_ids);
    take(counts.train + counts.valid, counts.test, ds.test, ds.test_ids);
  }
  return ds;
}

namespace {

void write_split(io::BinaryWriter& w, const std::vector<Sketch>& sketches, const std::vector<std::size_t>& ids) {
  w.write<std::uint64_t>(sketches.size());
  for (std::size_t i = 0; i < sketches.size(); ++i) {
    const auto& s = sketches[i];
    w.write<std::uint64_t>(i < ids.size() ? ids[i] : 0);
    w.write<std::int32_t>(s.label.value_or(-1));
    w.write<std::uint32_t>(static_cast<std::uint32_t>(s.strokes.size()));
    for (const auto& st : s.strokes) {
      w.write<std::uint32_t>(static_cast<std::uint32_t>(st.points.size()));
      for (const auto& p : st.points) {
        w.write(p.x);
        w.write(p.y);
      }
    }
  }
}

void read_split(io::BinaryReader& r, int vocab, std::vector<Sketch>& sketches, std::vector<std::size_t>& ids) {
  const auto n = r.read<std::uint64_t>();
  sketches.reserve(n);
  ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    ids.push_back(r.read<std::uint64_t>());
    Sketch s;
    const auto label = r.read<std::int32_t>();
    if (label >= 0) s.label = label;
    s.category_vocab_size = vocab;
    const auto strokes = r.read<std::uint32_t>();
    s.strokes.resize(strokes);
    for (auto& st : s.strokes) {
      const auto pts = r.read<std::uint32_t>();
      st.points.resize(pts);
      for (auto& p : st.points) {
        p.x = r.read<double>();
        p.y = r.read<double>();
      }
    }
    sketches.push_back(std::move(s));
  }
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  io::BinaryWriter w(out);
  w.write_magic("SXDS");
  w.write<std::uint32_t>(kDatasetFormatVersion);
  w.write<std::uint32_t>(static_cast<std::uint32_t>(dataset.categories.size()));
  for (const auto& c : dataset.categories) w.write_string(c);
  write_split(w, dataset.train, dataset.train_ids);
  write_split(w, dataset.valid, dataset.valid_ids);
  write_split(w, dataset.test, dataset.test_ids);
  if (!w.ok()) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  io::BinaryReader r(in);
  r.expect_magic("SXDS");
  const auto version = r.read<std::uint32_t>();
  if (version != kDatasetFormatVersion) {
    throw Error(ErrorCode::kFormat, "unsupported dataset cache version " + std::to_string(version));
  }
  Dataset ds;
  const auto vocab = r.read<std::uint32_t>();
  for (std::uint32_t i = 0; i < vocab; ++i) ds.categories.push_back(r.read_string());
  read_split(r, static_cast<int>(vocab), ds.train, ds.train_ids);
  read_split(r, static_cast<int>(vocab), ds.valid, ds.valid_ids);
  read_split(r, static_cast<int>(vocab), ds.test, ds.test_ids);
  return ds;
}

}  // namespace sketchxai::data
