#include "sketchxai/analysis/inspect.hpp"

#include "sketchxai/data/decompose.hpp"
#include "sketchxai/util/error.hpp"

namespace sketchxai::analysis {

Eigen::MatrixXd order_similarity(const model::Network<double>& net, int m) {
  const auto& table = net.params().order_table;
  if (m < 1 || m > table.cols()) {
    throw Error(ErrorCode::kInvalidArgument, "order ids must be in [1, " + std::to_string(table.cols()) + "]");
  }
  Eigen::MatrixXd cols = table.leftCols(m);
  for (int j = 0; j < m; ++j) {
    const double n = cols.col(j).norm();
    if (n == 0.0) throw Error(ErrorCode::kNumerical, "order embedding " + std::to_string(j) + " is zero");
    cols.col(j) /= n;
  }
  Eigen::MatrixXd sim = cols.transpose() * cols;
  return sim;
}

model::AttentionCapture attention_export(const model::Network<double>& net, const data::Sketch& sketch,
                                         bool per_head) {
  model::AttentionCapture capture;
  capture.per_head = per_head;
  const auto input = model::make_input<double>(data::decompose(sketch), net.config());
  net.forward(input, &capture);
  return capture;
}

}  // namespace sketchxai::analysis
