#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "sketchxai/data/decompose.hpp"
#include "sketchxai/data/sketch.hpp"
#include "sketchxai/model/network.hpp"

namespace sketchxai::analysis {

struct StrokeRef {
  std::size_t sketch = 0;
  std::size_t stroke = 0;
  int category = -1;
};

// One row per stroke (strokes beyond the model's max_strokes are skipped, as
// the model never sees them).
struct ShapeEmbeddings {
  Eigen::MatrixXd rows;  // strokes x d
  std::vector<StrokeRef> index;
  std::vector<std::vector<data::ShapePoint>> shapes;
};

ShapeEmbeddings collect_shape_embeddings(const model::Network<double>& net, const std::vector<data::Sketch>& sketches);

}  // namespace sketchxai::analysis
