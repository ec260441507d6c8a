#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sketchxai/data/sketch.hpp"

namespace sketchxai::data {

struct SplitCounts {
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
};

// Preprocessed, labeled sketches split into three disjoint sets. `*_ids` hold
// the index of each sketch in the collection it was split from.
struct Dataset {
  std::vector<std::string> categories;
  std::vector<Sketch> train, valid, test;
  std::vector<std::size_t> train_ids, valid_ids, test_ids;
};

// Per-class stratified split. Each class is shuffled with a generator seeded
// once from `seed`, then cut into train/valid/test in that order.
Dataset split_dataset(const std::vector<Sketch>& collection, const std::vector<std::string>& categories,
                      SplitCounts counts, std::uint64_t seed);

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

// Binary cache: magic "SXDS", u32 version, categories, then the three splits.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace sketchxai::data
