#include "sketchxai/app/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sketchxai/analysis/embeddings.hpp"
#include "sketchxai/analysis/inspect.hpp"
#include "sketchxai/analysis/primitives.hpp"
#include "sketchxai/analysis/transfer_map.hpp"
#include "sketchxai/app/service.hpp"
#include "sketchxai/app/wire.hpp"
#include "sketchxai/data/dataset.hpp"
#include "sketchxai/data/quickdraw.hpp"
#include "sketchxai/data/rdp.hpp"
#include "sketchxai/data/synthetic.hpp"
#include "sketchxai/model/checkpoint.hpp"
#include "sketchxai/model/trainer.hpp"
#include "sketchxai/render/svg.hpp"
#include "sketchxai/sli/trajectory_io.hpp"
#include "sketchxai/util/error.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that collides with Eigen internals.
#include <httplib.h>

namespace sketchxai::app {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string default_data_dir() {
  const char* env = std::getenv("SKETCHXAI_DATA_DIR");
  return env ? env : "";
}

std::vector<std::string> parse_class_list(const std::string& spec) {
  if (spec == "study") return data::study_categories();
  if (spec == "synthetic" || spec.empty()) return data::synthetic_categories();
  std::vector<std::string> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ValidationError("classes", "empty class list");
  return out;
}

// Where train/eval/analyze read sketches from: an ingested dataset file, or
// raw NDJSON files that are preprocessed and split on the fly.
struct DataSource {
  std::string dataset;
  std::string data_dir = default_data_dir();
  std::string classes = "synthetic";
  std::size_t train = 5000, valid = 500, test = 500;
  std::uint64_t split_seed = 1;
  double epsilon = data::kDefaultRdpEpsilon;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--dataset", dataset, "Dataset file written by `ingest`");
    cmd->add_option("--data", data_dir, "Directory of <category>.ndjson files (default $SKETCHXAI_DATA_DIR)");
    cmd->add_option("--classes", classes, "Comma-separated categories, or `study` / `synthetic`");
    cmd->add_option("--train", train, "Training sketches per class");
    cmd->add_option("--valid", valid, "Validation sketches per class");
    cmd->add_option("--test", test, "Test sketches per class");
    cmd->add_option("--split-seed", split_seed, "Seed of the per-class shuffle");
    cmd->add_option("--epsilon", epsilon, "RDP tolerance in normalized units");
  }

  data::Dataset load() const {
    if (!dataset.empty()) return data::load_dataset(dataset);
    if (data_dir.empty()) throw ValidationError("data", "no --dataset or --data given and SKETCHXAI_DATA_DIR is unset");
    const auto cats = parse_class_list(classes);
    const auto raw = data::load_quickdraw(data_dir, cats, train + valid + test);
    std::vector<data::Sketch> pre;
    pre.reserve(raw.sketches.size());
    for (const auto& s : raw.sketches) pre.push_back(data::preprocess(s, epsilon));
    return data::split_dataset(pre, cats, {train, valid, test}, split_seed);
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
}

std::string matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& labels) {
  std::ostringstream os;
  os.precision(9);
  os << "id";
  for (const auto& l : labels) os << ',' << l;
  os << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << ',' << m(i, j);
    os << '\n';
  }
  return os.str();
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(r);
  }
  return rows;
}

struct SliOptions {
  std::string task = "recovery";
  std::string target;
  std::string init = "random_normal";
  int steps = 100;
  double eta_max = 10.0, eta_min = 1e-5, cap = 0.5, sigma = 0.25, lambda = 0.1;
  std::uint64_t seed = 0;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--task", task, "recovery | transfer | counterfactual");
    cmd->add_option("--target", target, "Target category name or index");
    cmd->add_option("--init", init, "random_normal | centre (recovery only)");
    cmd->add_option("--steps", steps, "Optimization steps");
    cmd->add_option("--eta-max", eta_max);
    cmd->add_option("--eta-min", eta_min);
    cmd->add_option("--cap", cap, "Per-axis displacement bound per step");
    cmd->add_option("--sigma", sigma, "Spread of random_normal init");
    cmd->add_option("--lambda", lambda, "Counterfactual distance weight");
    cmd->add_option("--seed", seed);
  }

  sli::SliConfig config(const std::vector<std::string>& categories) const {
    sli::SliConfig c;
    c.task = sli::task_from_string(task);
    c.init = sli::init_from_string(init);
    if (!target.empty()) c.target = resolve_category(target, categories, "target");
    c.steps = steps;
    c.eta_max = eta_max;
    c.eta_min = eta_min;
    c.cap = cap;
    c.sigma = sigma;
    c.lambda = lambda;
    c.seed = seed;
    c.validate();
    return c;
  }
};

std::atomic<httplib::Server*> g_server{nullptr};

void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stroke-level explainability workbench for vector sketch classifiers", "sketchxai"};
  app.require_subcommand(1);
  std::function<void()> action;

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic QuickDraw-format corpus");
  std::string synth_out = default_data_dir();
  std::string synth_classes = "synthetic";
  std::size_t synth_per_class = 6000;
  std::uint64_t synth_seed = 11;
  synth->add_option("--out", synth_out, "Output directory (default $SKETCHXAI_DATA_DIR)");
  synth->add_option("--classes", synth_classes);
  synth->add_option("--per-class", synth_per_class);
  synth->add_option("--seed", synth_seed);
  synth->callback([&] {
    action = [&] {
      if (synth_out.empty()) throw ValidationError("out", "no --out given and SKETCHXAI_DATA_DIR is unset");
      const auto cats = parse_class_list(synth_classes);
      data::write_synthetic_corpus(synth_out, cats, synth_per_class, synth_seed);
      out << ordered_json{{"dir", synth_out}, {"categories", cats}, {"per_class", synth_per_class}}.dump() << '\n';
    };
  });

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Preprocess and split raw NDJSON into a dataset file");
  DataSource ingest_src;
  std::string ingest_out;
  ingest_src.add_options(ingest);
  ingest->add_option("--out", ingest_out)->required();
  ingest->callback([&] {
    action = [&] {
      const auto ds = ingest_src.load();
      data::save_dataset(ds, ingest_out);
      out << ordered_json{{"out", ingest_out},
                          {"categories", ds.categories},
                          {"train", ds.train.size()},
                          {"valid", ds.valid.size()},
                          {"test", ds.test.size()}}
                 .dump()
          << '\n';
    };
  });

  // train
  auto* train = app.add_subcommand("train", "Train a classifier");
  DataSource train_src;
  std::string train_out, preset = "micro", ablation = "full";
  model::TrainOptions topt;
  topt.seed = 7;
  train_src.add_options(train);
  train->add_option("--config", preset, "micro | tiny | base");
  train->add_option("--ablation", ablation, "full | no_shape | no_location | no_order");
  train->add_option("--epochs", topt.epochs);
  train->add_option("--batch", topt.batch_size);
  train->add_option("--lr", topt.learning_rate);
  train->add_option("--seed", topt.seed);
  train->add_option("--out", train_out)->required();
  train->callback([&] {
    action = [&] {
      const auto ds = train_src.load();
      const auto cfg = model::ModelConfig::preset(preset, static_cast<int>(ds.categories.size())).with_ablation(ablation);
      topt.on_epoch = [&](const model::EpochReport& r) {
        out << ordered_json{{"epoch", r.epoch},
                            {"train_loss", r.train_loss},
                            {"train_accuracy", r.train_accuracy},
                            {"valid_accuracy", r.valid_accuracy},
                            {"seconds", r.seconds}}
                   .dump()
            << std::endl;
      };
      const auto ckpt = model::train(ds.train, ds.valid, cfg, ds.categories, topt);
      model::save_checkpoint(ckpt, train_out);
      out << ordered_json{{"out", train_out}, {"test_accuracy", model::evaluate(ckpt, ds.test)}}.dump() << '\n';
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Top-1 accuracy of a checkpoint");
  DataSource eval_src;
  std::string eval_ckpt, eval_split = "test";
  eval_src.add_options(eval);
  eval->add_option("--ckpt", eval_ckpt)->required();
  eval->add_option("--split", eval_split)->check(CLI::IsMember({"train", "valid", "test"}));
  eval->callback([&] {
    action = [&] {
      const auto ckpt = model::load_checkpoint(eval_ckpt);
      const auto ds = eval_src.load();
      const auto& set = eval_split == "train" ? ds.train : eval_split == "valid" ? ds.valid : ds.test;
      out << ordered_json{{"split", eval_split}, {"count", set.size()}, {"accuracy", model::evaluate(ckpt, set)}}.dump()
          << '\n';
    };
  });

  // sli
  auto* sli_cmd = app.add_subcommand("sli", "Run stroke location inversion on one sketch");
  std::string sli_ckpt, sli_input, sli_out;
  int sli_decimals = -1;
  SliOptions sli_opt;
  sli_cmd->add_option("--ckpt", sli_ckpt)->required();
  sli_cmd->add_option("--input", sli_input, "Sketch JSON in normalized coordinates")->required();
  sli_opt.add_options(sli_cmd);
  sli_cmd->add_option("--decimals", sli_decimals, "Round exported frame values (fixed-precision mode)");
  sli_cmd->add_option("--out", sli_out)->required();
  sli_cmd->callback([&] {
    action = [&] {
      const auto ckpt = model::load_checkpoint(sli_ckpt);
      const auto sketch = load_sketch_file(sli_input, ckpt.categories);
      const auto traj = sli::run_sli(ckpt.network<double>(), sketch, sli_opt.config(ckpt.categories));
      sli::save_trajectory(sli_out, traj, ckpt.categories, sli_decimals);
      const auto& last = traj.frames.back();
      out << ordered_json{{"out", sli_out},
                          {"frames", traj.frames.size()},
                          {"original", ckpt.categories[static_cast<std::size_t>(traj.original_label)]},
                          {"target", ckpt.categories[static_cast<std::size_t>(traj.target_label)]},
                          {"p_orig", last.p_orig},
                          {"p_target", last.p_target}}
                 .dump()
          << '\n';
    };
  });

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Post-hoc studies over a trained model");
  analyze->require_subcommand(1);

  auto* tmap = analyze->add_subcommand("transfer-map", "Mean SLI confidence for every class pair");
  DataSource tmap_src;
  std::string tmap_ckpt, tmap_out;
  int tmap_classes = 10, tmap_per_class = 50;
  SliOptions tmap_sli;
  tmap_src.add_options(tmap);
  tmap->add_option("--ckpt", tmap_ckpt)->required();
  tmap->add_option("--num-classes,--k", tmap_classes, "Use the first K categories");
  tmap->add_option("--per-class", tmap_per_class);
  tmap->add_option("--steps", tmap_sli.steps);
  tmap->add_option("--seed", tmap_sli.seed);
  tmap->add_option("--out", tmap_out)->required();
  tmap->callback([&] {
    action = [&] {
      const auto ckpt = model::load_checkpoint(tmap_ckpt);
      const auto ds = tmap_src.load();
      const auto map = analysis::transfer_map(ckpt.network<double>(), ds.test, ckpt.categories, tmap_classes,
                                              tmap_per_class, tmap_sli.config(ckpt.categories));
      analysis::save_transfer_map(map, tmap_out);
      out << ordered_json{{"out", tmap_out}, {"confidence", matrix_json(map.confidence)}}.dump() << '\n';
    };
  });

  auto* prim = analyze->add_subcommand("primitives", "Cluster stroke shape embeddings into a codebook");
  DataSource prim_src;
  std::string prim_ckpt, prim_out;
  int prim_k = 100, prim_iters = 100;
  std::uint64_t prim_seed = 0;
  prim_src.add_options(prim);
  prim->add_option("--ckpt", prim_ckpt)->required();
  prim->add_option("--k", prim_k);
  prim->add_option("--max-iters", prim_iters);
  prim->add_option("--seed", prim_seed);
  prim->add_option("--out", prim_out)->required();
  prim->callback([&] {
    action = [&] {
      const auto ckpt = model::load_checkpoint(prim_ckpt);
      const auto ds = prim_src.load();
      const auto net = ckpt.network<double>();
      const auto emb = analysis::collect_shape_embeddings(net, ds.train);
      const auto cb = analysis::build_codebook(emb, prim_k, prim_seed, prim_iters);
      analysis::save_codebook(cb, prim_out);
      out << ordered_json{{"out", prim_out},
                          {"k", prim_k},
                          {"strokes", emb.rows.rows()},
                          {"replace_accuracy", analysis::primitive_replace_accuracy(net, ds.test, cb)}}
                 .dump()
          << '\n';
    };
  });

  auto* osim = analyze->add_subcommand("order-sim", "Cosine similarity of order embeddings");
  std::string osim_ckpt, osim_out;
  int osim_m = 16;
  osim->add_option("--ckpt", osim_ckpt)->required();
  osim->add_option("--m", osim_m, "Number of order ids");
  osim->add_option("--out", osim_out)->required();
  osim->callback([&] {
    action = [&] {
      const auto ckpt = model::load_checkpoint(osim_ckpt);
      const auto sim = analysis::order_similarity(ckpt.network<double>(), osim_m);
      std::vector<std::string> ids;
      for (int i = 1; i <= osim_m; ++i) ids.push_back(std::to_string(i));
      write_text(osim_out, matrix_csv(sim, ids));
      out << ordered_json{{"out", osim_out}, {"m", osim_m}}.dump() << '\n';
    };
  });

  auto* att = analyze->add_subcommand("attention", "Per-layer attention maps for one sketch");
  std::string att_ckpt, att_input, att_out;
  bool att_per_head = false;
  att->add_option("--ckpt", att_ckpt)->required();
  att->add_option("--input", att_input)->required();
  att->add_flag("--per-head", att_per_head);
  att->add_option("--out", att_out)->required();
  att->callback([&] {
    action = [&] {
      const auto ckpt = model::load_checkpoint(att_ckpt);
      const auto sketch = load_sketch_file(att_input, ckpt.categories);
      const auto cap = analysis::attention_export(ckpt.network<double>(), sketch, att_per_head);
      ordered_json j;
      j["tokens"] = cap.layers.empty() ? 0 : cap.layers.front().rows();
      j["layers"] = ordered_json::array();
      for (const auto& m : cap.layers) j["layers"].push_back(matrix_json(m));
      if (att_per_head) {
        j["heads"] = ordered_json::array();
        for (const auto& layer : cap.heads) {
          ordered_json hs = ordered_json::array();
          for (const auto& m : layer) hs.push_back(matrix_json(m));
          j["heads"].push_back(hs);
        }
      }
      write_text(att_out, j.dump() + "\n");
      out << ordered_json{{"out", att_out}, {"layers", cap.layers.size()}, {"tokens", j["tokens"]}}.dump() << '\n';
    };
  });

  auto* sinv = analyze->add_subcommand("shape-inversion", "Gradient steps on shape embeddings snapped to primitives");
  std::string sinv_ckpt, sinv_cb, sinv_input, sinv_target, sinv_out;
  int sinv_steps = 20;
  double sinv_lr = 1.0;
  sinv->add_option("--ckpt", sinv_ckpt)->required();
  sinv->add_option("--codebook", sinv_cb)->required();
  sinv->add_option("--input", sinv_input)->required();
  sinv->add_option("--target", sinv_target)->required();
  sinv->add_option("--steps", sinv_steps);
  sinv->add_option("--lr", sinv_lr);
  sinv->add_option("--out", sinv_out)->required();
  sinv->callback([&] {
    action = [&] {
      const auto ckpt = model::load_checkpoint(sinv_ckpt);
      const auto cb = analysis::load_codebook(sinv_cb);
      const auto sketch = load_sketch_file(sinv_input, ckpt.categories);
      const int target = resolve_category(sinv_target, ckpt.categories, "target");
      const auto res = analysis::shape_inversion(ckpt.network<double>(), sketch, target, cb, sinv_steps, sinv_lr);
      ordered_json j;
      j["original_label"] = res.original_label;
      j["target_label"] = res.target_label;
      j["steps"] = ordered_json::array();
      for (const auto& s : res.steps) {
        j["steps"].push_back({{"primitive_ids", s.primitive_ids}, {"p_orig", s.p_orig}, {"p_target", s.p_target}});
      }
      write_text(sinv_out, j.dump() + "\n");
      out << ordered_json{{"out", sinv_out}, {"final_p_target", res.steps.back().p_target}}.dump() << '\n';
    };
  });

  // render
  auto* render = app.add_subcommand("render", "Render a sketch or a trajectory to SVG");
  std::string render_sketch, render_traj, render_out, render_format = "svg_frames";
  int render_stride = 1;
  render::SvgOptions svg_opt;
  auto* in_opt = render->add_option("--input", render_sketch, "Sketch JSON");
  auto* tr_opt = render->add_option("--trajectory", render_traj, "Trajectory NDJSON");
  in_opt->excludes(tr_opt);
  render->add_option("--out", render_out, "SVG file for a sketch, directory for a trajectory")->required();
  render->add_option("--format", render_format, "svg_frames | gif");
  render->add_option("--stride", render_stride);
  render->add_option("--pixels", svg_opt.pixels);
  render->callback([&] {
    action = [&] {
      if (!render_traj.empty()) {
        const auto loaded = sli::load_trajectory(render_traj);
        const auto files = render::render_trajectory(loaded.trajectory, loaded.categories, render_out,
                                                     render::frame_format_from_string(render_format), render_stride,
                                                     svg_opt);
        out << ordered_json{{"out", render_out}, {"frames", files.size()}}.dump() << '\n';
      } else if (!render_sketch.empty()) {
        write_text(render_out, render::render_svg(load_sketch_file(render_sketch, {}, false), svg_opt));
        out << ordered_json{{"out", render_out}}.dump() << '\n';
      } else {
        throw ValidationError("input", "give --input or --trajectory");
      }
    };
  });

  // serve
  auto* serve = app.add_subcommand("serve", "Run the workbench HTTP service");
  std::string serve_ckpt, serve_dataset, serve_host = "127.0.0.1";
  int serve_port = 8080;
  long serve_idle = 900;
  serve->add_option("--ckpt", serve_ckpt)->required();
  serve->add_option("--dataset", serve_dataset, "Dataset file whose test split backs /samples");
  serve->add_option("--host", serve_host);
  serve->add_option("--port", serve_port);
  serve->add_option("--idle-timeout", serve_idle, "Seconds before an untouched SLI session is dropped");
  serve->callback([&] {
    action = [&] {
      auto ckpt = model::load_checkpoint(serve_ckpt);
      std::vector<data::Sketch> samples;
      if (!serve_dataset.empty()) samples = data::load_dataset(serve_dataset).test;
      ServiceOptions sopt;
      sopt.idle_timeout = std::chrono::seconds(serve_idle);
      Service service(std::move(ckpt), std::move(samples), sopt);
      httplib::Server server;
      service.mount(server);
      if (!server.bind_to_port(serve_host, serve_port)) {
        throw Error(ErrorCode::kIo, "cannot bind " + serve_host + ":" + std::to_string(serve_port));
      }
      out << ordered_json{{"listening", serve_host + ":" + std::to_string(serve_port)}}.dump() << std::endl;
      g_server.store(&server);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.listen_after_bind();
      g_server.store(nullptr);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << ordered_json{{"error", {{"code", "usage"}, {"message", e.what()}}}}.dump() << '\n';
    return 2;
  }

  try {
    if (action) action();
    return 0;
  } catch (const ValidationError& e) {
    err << ordered_json{{"error", {{"code", error_code_name(e.code())}, {"message", e.what()}, {"field", e.field()}}}}
               .dump()
        << '\n';
  } catch (const Error& e) {
    err << ordered_json{{"error", {{"code", error_code_name(e.code())}, {"message", e.what()}}}}.dump() << '\n';
  } catch (const std::exception& e) {
    err << ordered_json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << '\n';
  }
  return 1;
}

}  // namespace sketchxai::app
