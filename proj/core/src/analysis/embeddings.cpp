#include "sketchxai/analysis/embeddings.hpp"

namespace sketchxai::analysis {

ShapeEmbeddings collect_shape_embeddings(const model::Network<double>& net, const std::vector<data::Sketch>& sketches) {
  ShapeEmbeddings out;
  std::vector<Eigen::VectorXd> cols;
  for (std::size_t i = 0; i < sketches.size(); ++i) {
    const auto strokes = data::truncate(data::decompose(sketches[i]), net.config().limits());
    const auto input = model::make_input<double>(strokes, net.config());
    const auto emb = net.encode_shapes(input.shapes);
    for (std::size_t j = 0; j < strokes.size(); ++j) {
      cols.push_back(emb.col(static_cast<Eigen::Index>(j)));
      out.index.push_back({i, j, sketches[i].label.value_or(-1)});
      out.shapes.push_back(strokes[j].shape);
    }
  }
  out.rows.resize(static_cast<Eigen::Index>(cols.size()), net.config().embed_dim);
  for (std::size_t r = 0; r < cols.size(); ++r) out.rows.row(static_cast<Eigen::Index>(r)) = cols[r].transpose();
  return out;
}

}  // namespace sketchxai::analysis
