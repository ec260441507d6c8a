#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sketchxai/data/sketch.hpp"

namespace sketchxai::data {

// Procedural stand-in for QuickDraw when the public dump is not available.
// Ten of the study categories are modelled. Strokes start at a few shared
// anchor slots, so most classes differ by stroke shape; face/smiley_face and
// table/bed share shapes but not placement, and sun/flower differ mainly in
// drawing order.
const std::vector<std::string>& synthetic_categories();

// One hand-jittered sketch on the raw [0, 255] canvas with integer
// coordinates, simplified with a 2 px RDP epsilon like the simplified
// QuickDraw files.
Sketch synthesize_raw(const std::string& category, std::mt19937_64& rng);

// Writes `<dir>/<category>.ndjson` in the simplified QuickDraw schema.
void write_synthetic_corpus(const std::filesystem::path& dir, const std::vector<std::string>& categories,
                            std::size_t per_class, std::uint64_t seed);

}  // namespace sketchxai::data
