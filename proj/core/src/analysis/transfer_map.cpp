#include "sketchxai/analysis/transfer_map.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sketchxai/model/checkpoint.hpp"
#include "sketchxai/sli/trajectory_io.hpp"
#include "sketchxai/util/error.hpp"

namespace sketchxai::analysis {

std::uint64_t transfer_run_seed(std::uint64_t base, int source, int target, int sample, int num_classes) {
  const auto k = static_cast<std::uint64_t>(num_classes);
  return base + (static_cast<std::uint64_t>(source) * k + static_cast<std::uint64_t>(target)) * 1000003ULL +
         static_cast<std::uint64_t>(sample);
}

TransferMap transfer_map(const model::Network<double>& net, const std::vector<data::Sketch>& sketches,
                         const std::vector<std::string>& categories, int classes, int per_class,
                         const sli::SliConfig& config) {
  if (classes < 1 || classes > static_cast<int>(categories.size()) || classes > net.config().num_classes) {
    throw ValidationError("classes", "must be in [1, " + std::to_string(categories.size()) + "]");
  }
  if (per_class < 1) throw ValidationError("per_class", "must be >= 1");
  config.validate();

  std::vector<std::vector<const data::Sketch*>> by_class(static_cast<std::size_t>(classes));
  for (const auto& s : sketches) {
    if (!s.label || *s.label < 0 || *s.label >= classes) continue;
    auto& bucket = by_class[static_cast<std::size_t>(*s.label)];
    if (static_cast<int>(bucket.size()) < per_class) bucket.push_back(&s);
  }
  for (int c = 0; c < classes; ++c) {
    if (static_cast<int>(by_class[static_cast<std::size_t>(c)].size()) < per_class) {
      throw Error(ErrorCode::kInsufficientSamples, "class '" + categories[static_cast<std::size_t>(c)] + "' has " +
                                                       std::to_string(by_class[static_cast<std::size_t>(c)].size()) +
                                                       " sketches, need " + std::to_string(per_class));
    }
  }

  TransferMap map;
  map.categories.assign(categories.begin(), categories.begin() + classes);
  map.confidence = Eigen::MatrixXd::Zero(classes, classes);
  map.samples = Eigen::MatrixXi::Zero(classes, classes);
  map.per_class = per_class;
  map.config = config;
  map.config.target.reset();

  for (int source = 0; source < classes; ++source) {
    for (int target = 0; target < classes; ++target) {
      double sum = 0.0;
      for (int i = 0; i < per_class; ++i) {
        sli::SliConfig run = config;
        run.task = source == target ? sli::TaskKind::kRecovery : sli::TaskKind::kTransfer;
        run.target = target;
        run.seed = transfer_run_seed(config.seed, source, target, i, classes);
        const auto traj = sli::run_sli(net, *by_class[static_cast<std::size_t>(source)][static_cast<std::size_t>(i)], run);
        sum += traj.frames.back().p_target;
      }
      map.confidence(target, source) = sum / per_class;
      map.samples(target, source) = per_class;
    }
  }
  return map;
}

void save_transfer_map(const TransferMap& map, const std::filesystem::path& csv_path) {
  std::ofstream csv(csv_path);
  if (!csv) throw Error(ErrorCode::kIo, "cannot write " + csv_path.string());
  csv.precision(std::numeric_limits<double>::max_digits10);
  csv << "target\\source";
  for (const auto& c : map.categories) csv << ',' << c;
  csv << '\n';
  for (Eigen::Index t = 0; t < map.confidence.rows(); ++t) {
    csv << map.categories[static_cast<std::size_t>(t)];
    for (Eigen::Index s = 0; s < map.confidence.cols(); ++s) csv << ',' << map.confidence(t, s);
    csv << '\n';
  }

  nlohmann::ordered_json j;
  j["format"] = "sketchxai.transfer_map";
  j["version"] = 1;
  j["categories"] = map.categories;
  j["per_class"] = map.per_class;
  j["sli"] = sli::config_to_json(map.config);
  j["seed_rule"] = "base + (source * K + target) * 1000003 + sample";
  std::vector<std::vector<int>> samples;
  for (Eigen::Index t = 0; t < map.samples.rows(); ++t) {
    samples.emplace_back();
    for (Eigen::Index s = 0; s < map.samples.cols(); ++s) samples.back().push_back(map.samples(t, s));
  }
  j["samples"] = samples;
  const auto side = model::sidecar_path(csv_path);
  std::ofstream out(side);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + side.string());
  out << j.dump(1) << '\n';
}

TransferMap load_transfer_map(const std::filesystem::path& csv_path) {
  const auto side = model::sidecar_path(csv_path);
  std::ifstream meta(side);
  if (!meta) throw Error(ErrorCode::kIo, "cannot read " + side.string());
  TransferMap map;
  try {
    const auto j = nlohmann::json::parse(meta);
    map.categories = j.at("categories").get<std::vector<std::string>>();
    map.per_class = j.at("per_class").get<int>();
    map.config = sli::config_from_json(j.at("sli"));
    const auto samples = j.at("samples").get<std::vector<std::vector<int>>>();
    const auto k = static_cast<Eigen::Index>(map.categories.size());
    map.samples.resize(k, k);
    for (Eigen::Index t = 0; t < k; ++t)
      for (Eigen::Index s = 0; s < k; ++s) map.samples(t, s) = samples.at(static_cast<std::size_t>(t)).at(static_cast<std::size_t>(s));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("bad transfer map sidecar: ") + e.what());
  }

  std::ifstream csv(csv_path);
  if (!csv) throw Error(ErrorCode::kIo, "cannot read " + csv_path.string());
  const auto k = static_cast<Eigen::Index>(map.categories.size());
  map.confidence.resize(k, k);
  std::string line;
  std::getline(csv, line);
  for (Eigen::Index t = 0; t < k; ++t) {
    if (!std::getline(csv, line)) throw Error(ErrorCode::kFormat, "transfer map CSV has too few rows");
    std::stringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    if (cell != map.categories[static_cast<std::size_t>(t)]) {
      throw Error(ErrorCode::kFormat, "row " + std::to_string(t) + " is '" + cell + "', expected '" +
                                          map.categories[static_cast<std::size_t>(t)] + "'");
    }
    for (Eigen::Index s = 0; s < k; ++s) {
      if (!std::getline(row, cell, ',')) throw Error(ErrorCode::kFormat, "transfer map CSV row is short");
      map.confidence(t, s) = std::stod(cell);
    }
  }
  return map;
}

}  // namespace sketchxai::analysis
