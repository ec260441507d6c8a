#include "sketchxai/analysis/primitives.hpp"

#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "sketchxai/util/error.hpp"

namespace sketchxai::analysis {

int PrimitiveCodebook::nearest_centroid(const Eigen::RowVectorXd& embedding) const {
  return nearest_row(centroids, embedding);
}

int PrimitiveCodebook::nearest_primitive(const Eigen::RowVectorXd& embedding) const {
  return nearest_row(representative_embeddings, embedding);
}

PrimitiveCodebook build_codebook(const ShapeEmbeddings& embeddings, int k, std::uint64_t seed, int max_iters) {
  const auto km = kmeans(embeddings.rows, k, seed, max_iters);
  PrimitiveCodebook cb;
  cb.centroids = km.centroids;
  cb.member_counts = km.member_counts;
  cb.inertia_history = km.inertia_history;
  cb.representative_embeddings.resize(k, embeddings.rows.cols());
  for (int c = 0; c < k; ++c) {
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < embeddings.rows.rows(); ++i) {
      const double d = (embeddings.rows.row(i) - km.centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    cb.representative_embeddings.row(c) = embeddings.rows.row(best);
    cb.representatives.push_back(embeddings.index[static_cast<std::size_t>(best)]);
    cb.representative_shapes.push_back(embeddings.shapes[static_cast<std::size_t>(best)]);
  }
  return cb;
}

namespace {

nlohmann::ordered_json row_json(const Eigen::RowVectorXd& r) {
  return std::vector<double>(r.data(), r.data() + r.size());
}

Eigen::RowVectorXd row_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void save_codebook(const PrimitiveCodebook& cb, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["format"] = "sketchxai.codebook";
  j["version"] = 1;
  j["k"] = cb.size();
  j["embed_dim"] = cb.centroids.cols();
  j["centroids"] = nlohmann::json::array();
  for (Eigen::Index c = 0; c < cb.centroids.rows(); ++c) j["centroids"].push_back(row_json(cb.centroids.row(c)));
  j["representatives"] = nlohmann::json::array();
  for (int c = 0; c < cb.size(); ++c) {
    const auto& ref = cb.representatives[static_cast<std::size_t>(c)];
    nlohmann::ordered_json shape = nlohmann::ordered_json::array();
    for (const auto& p : cb.representative_shapes[static_cast<std::size_t>(c)]) shape.push_back(p.as_vector());
    j["representatives"].push_back({{"sketch", ref.sketch},
                                    {"stroke", ref.stroke},
                                    {"category", ref.category},
                                    {"shape", shape},
                                    {"embedding", row_json(cb.representative_embeddings.row(c))}});
  }
  j["member_counts"] = cb.member_counts;
  j["inertia_history"] = cb.inertia_history;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(1) << '\n';
}

PrimitiveCodebook load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  PrimitiveCodebook cb;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.value("format", "") != "sketchxai.codebook") throw Error(ErrorCode::kFormat, "not a codebook file");
    const int k = j.at("k").get<int>();
    const auto d = j.at("embed_dim").get<Eigen::Index>();
    cb.centroids.resize(k, d);
    cb.representative_embeddings.resize(k, d);
    for (int c = 0; c < k; ++c) {
      cb.centroids.row(c) = row_from(j.at("centroids").at(static_cast<std::size_t>(c)));
      const auto& r = j.at("representatives").at(static_cast<std::size_t>(c));
      cb.representative_embeddings.row(c) = row_from(r.at("embedding"));
      cb.representatives.push_back(
          {r.at("sketch").get<std::size_t>(), r.at("stroke").get<std::size_t>(), r.at("category").get<int>()});
      std::vector<data::ShapePoint> shape;
      for (const auto& v : r.at("shape")) {
        data::ShapePoint sp{v.at(0).get<double>(), v.at(1).get<double>(), data::PenState::kPadding};
        if (v.at(2).get<double>() > 0.5) sp.pen = data::PenState::kDrawing;
        else if (v.at(3).get<double>() > 0.5) sp.pen = data::PenState::kEnd;
        shape.push_back(sp);
      }
      cb.representative_shapes.push_back(std::move(shape));
    }
    cb.member_counts = j.at("member_counts").get<std::vector<std::size_t>>();
    cb.inertia_history = j.value("inertia_history", std::vector<double>{});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad codebook file: ") + e.what());
  }
  return cb;
}

double primitive_replace_accuracy(const model::Network<double>& net, const std::vector<data::Sketch>& sketches,
                                  const PrimitiveCodebook& codebook) {
  if (sketches.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : sketches) {
    const auto input = model::make_input<double>(data::decompose(s), net.config());
    model::Mat<double> emb = net.encode_shapes(input.shapes);
    for (Eigen::Index j = 0; j < emb.cols(); ++j) {
      const int c = codebook.nearest_centroid(emb.col(j).transpose());
      emb.col(j) = codebook.representative_embeddings.row(c).transpose();
    }
    const auto scores = net.forward_tokens(emb, input.locations, input.orders);
    if (s.label && scores.argmax() == *s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(sketches.size());
}

ShapeInversionResult shape_inversion(const model::Network<double>& net, const data::Sketch& sketch, int target,
                                     const PrimitiveCodebook& codebook, int steps, double learning_rate) {
  if (steps < 0) throw Error(ErrorCode::kInvalidArgument, "steps must be >= 0");
  if (codebook.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty codebook");
  const auto input = model::make_input<double>(data::decompose(sketch), net.config());
  model::Mat<double> emb = net.encode_shapes(input.shapes);

  ShapeInversionResult out;
  out.target_label = target;
  out.original_label = sketch.label ? *sketch.label : net.forward_tokens(emb, input.locations, input.orders).argmax();

  auto snap = [&](model::Mat<double>& e) {
    std::vector<int> ids(static_cast<std::size_t>(e.cols()));
    for (Eigen::Index j = 0; j < e.cols(); ++j) {
      const int c = codebook.nearest_primitive(e.col(j).transpose());
      ids[static_cast<std::size_t>(j)] = c;
      e.col(j) = codebook.representative_embeddings.row(c).transpose();
    }
    return ids;
  };

  auto ids = snap(emb);
  for (int s = 0; s <= steps; ++s) {
    const auto g = net.token_gradient(emb, input.locations, input.orders, target);
    ShapeInversionStep step;
    step.primitive_ids = ids;
    step.p_target = g.scores.probabilities[static_cast<std::size_t>(target)];
    step.p_orig = g.scores.probabilities[static_cast<std::size_t>(out.original_label)];
    out.steps.push_back(std::move(step));
    if (s == steps) break;
    emb -= learning_rate * g.d_shape_embeddings;
    ids = snap(emb);
  }
  return out;
}

}  // namespace sketchxai::analysis
