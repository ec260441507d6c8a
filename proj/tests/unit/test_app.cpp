#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "sketchxai/app/cli.hpp"
#include "sketchxai/app/service.hpp"
#include "sketchxai/app/wire.hpp"
#include "sketchxai/data/dataset.hpp"
#include "sketchxai/sli/trajectory_io.hpp"
#include "sketchxai/util/error.hpp"

// After the Eigen-bearing headers: resolv.h defines a _res macro.
#include <httplib.h>

using namespace sketchxai;
using namespace sketchxai::app;
using nlohmann::json;
using sketchxai::testing::lively_parameters;
using sketchxai::testing::small_config;
using sketchxai::testing::TempDir;

namespace {

const std::vector<std::string> kCats = {"face", "sun", "table"};

model::Checkpoint test_checkpoint() {
  const auto cfg = small_config(3);
  return {cfg, kCats, lively_parameters(cfg, 31).cast<float>()};
}

json sample_sketch(std::uint64_t seed, int label = 0) {
  std::mt19937_64 rng(seed);
  auto s = sketchxai::testing::random_sketch(rng, 5, 6);
  s.label = label;
  return json::parse(sketch_to_json(s).dump());
}

std::vector<double> probs(const json& body) { return body.at("probabilities").get<std::vector<double>>(); }

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Frames of a finished run, polled through the HTTP API.
json poll_all(httplib::Client& cli, const std::string& id) {
  json frames = json::array();
  std::size_t next = 0;
  for (int guard = 0; guard < 10000; ++guard) {
    auto res = cli.Get("/sli/" + id + "/frames?from=" + std::to_string(next) + "&wait_ms=2000");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    const auto body = json::parse(res->body);
    CHECK(body.at("from").get<std::size_t>() == next);
    for (const auto& f : body.at("frames")) frames.push_back(f);
    next = body.at("next").get<std::size_t>();
    CHECK(next == frames.size());
    const auto status = body.at("status").get<std::string>();
    if (status == "done" || status == "failed") return frames;
  }
  FAIL("run never finished");
  return frames;
}

json reference_frames(const model::Checkpoint& ckpt, const json& sketch, const json& config) {
  const auto s = sketch_from_json(sketch, ckpt.categories);
  const auto traj = sli::run_sli(ckpt.network<double>(), s, sli_config_from_json(config, ckpt.categories));
  json out = json::array();
  for (const auto& f : traj.frames) out.push_back(json::parse(sli::frame_to_json(f).dump()));
  return out;
}

struct TestServer {
  explicit TestServer(Service& service) {
    service.mount(server);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~TestServer() {
    server.stop();
    thread.join();
  }
  httplib::Server server;
  int port = 0;
  std::thread thread;
};

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  args.insert(args.begin(), "sketchxai");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

}  // namespace

TEST_SUITE("app") {
  TEST_CASE("wire: sketch round trip and field paths") {
    const auto j = sample_sketch(1, 2);
    const auto s = sketch_from_json(j, kCats);
    CHECK(*s.label == 2);
    CHECK(sketch_from_json(json::parse(sketch_to_json(s).dump()), kCats) == s);

    json named = j;
    named["label"] = "sun";
    CHECK(*sketch_from_json(named, kCats).label == 1);

    json bad = j;
    bad["strokes"][1][0] = json::array({0.1});
    try {
      sketch_from_json(bad, kCats);
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(e.field() == "sketch.strokes[1][0]");
    }
    CHECK_THROWS_AS(sketch_from_json(json{{"strokes", json::array()}}, kCats), ValidationError);
    CHECK_THROWS_AS(resolve_category(std::string("dragon"), kCats, "target"), Error);
  }

  TEST_CASE("wire: SLI config fields") {
    const auto c = sli_config_from_json(json{{"task", "transfer"}, {"target", "table"}, {"steps", 7}}, kCats);
    CHECK(c.task == sli::TaskKind::kTransfer);
    CHECK(*c.target == 2);
    CHECK(c.steps == 7);
    for (const auto& [body, field] : std::vector<std::pair<json, std::string>>{
             {json{{"steps", -1}}, "config.steps"},
             {json{{"steps", "many"}}, "config.steps"},
             {json{{"task", "explode"}}, "config.task"},
             {json{{"target", "dragon"}}, "config.target"},
             {json{{"cap", 0.0}}, "config.cap"}}) {
      try {
        sli_config_from_json(body, kCats);
        FAIL("expected a validation error for " << body.dump());
      } catch (const ValidationError& e) {
        CHECK(e.field() == field);
      }
    }
  }

  TEST_CASE("service: classify and what-if") {
    Service service(test_checkpoint());
    const auto sketch = sample_sketch(2);
    const auto c = service.classify(json{{"sketch", sketch}});
    REQUIRE(c.status == 200);
    const auto p = probs(json::parse(c.body.dump()));
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

    const auto still = service.whatif(json{{"sketch", sketch}});
    CHECK(max_diff(probs(json::parse(still.body.dump())), p) < 1e-12);
    const auto home = json::parse(still.body.dump()).at("locations").at(0);

    const auto moved = service.whatif(json{{"sketch", sketch}, {"moves", {{{"stroke", 0}, {"location", {0.6, -0.4}}}}}});
    CHECK(json::parse(moved.body.dump()).at("locations").at(0) == json::array({0.6, -0.4}));
    const auto back = service.whatif(json{{"sketch", sketch}, {"moves", {{{"stroke", 0}, {"location", home}}}}});
    CHECK(max_diff(probs(json::parse(back.body.dump())), p) < 1e-6);
  }

  TEST_CASE("service: error mapping") {
    Service service(test_checkpoint());
    const auto sketch = sample_sketch(3);
    auto r = [&](auto&& f) {
      try {
        return f();
      } catch (const std::exception& e) {
        return error_response(e);
      }
    };
    const auto missing = r([&] { return service.classify(json::object()); });
    CHECK(missing.status == 400);
    CHECK(missing.body["error"]["field"] == "sketch");
    const auto bad_move = r([&] {
      return service.whatif(json{{"sketch", sketch}, {"moves", {{{"stroke", 99}, {"location", {0, 0}}}}}});
    });
    CHECK(bad_move.status == 400);
    CHECK(bad_move.body["error"]["field"] == "moves[0].stroke");
    CHECK(r([&] { return service.samples("dragon", 2); }).status == 404);
    CHECK(r([&] { return service.frames("run-999999", 0, std::chrono::milliseconds(0)); }).status == 404);
    const auto same_target = r([&] {
      return service.start_sli(json{{"sketch", sketch}, {"config", {{"task", "transfer"}, {"target", 0}}}});
    });
    CHECK(same_target.status == 400);
    CHECK(same_target.body["error"]["field"] == "config.target");
  }

  TEST_CASE("http: SLI sessions stream the same frames as a direct run") {
    const auto ckpt = test_checkpoint();
    Service service(ckpt);
    TestServer ts(service);
    httplib::Client client("127.0.0.1", ts.port);
    client.set_read_timeout(30, 0);

    auto cats = client.Get("/categories");
    REQUIRE(cats);
    CHECK(json::parse(cats->body).at("categories") == json(kCats));
    CHECK(cats->get_header_value("Access-Control-Allow-Origin") == "*");

    const auto sketch = sample_sketch(4);
    const json cfg_a = {{"task", "transfer"}, {"target", "table"}, {"steps", 40}, {"seed", 1}};
    const json cfg_b = {{"task", "recovery"}, {"steps", 60}, {"seed", 2}};
    std::string ids[2];
    int k = 0;
    for (const auto& cfg : {cfg_a, cfg_b}) {
      auto res = client.Post("/sli", json{{"sketch", sketch}, {"config", cfg}}.dump(), "application/json");
      REQUIRE(res);
      REQUIRE(res->status == 200);
      ids[k++] = json::parse(res->body).at("run_id").get<std::string>();
    }
    CHECK(ids[0] != ids[1]);

    json got[2];
    std::thread other([&] {
      httplib::Client c2("127.0.0.1", ts.port);
      c2.set_read_timeout(30, 0);
      got[1] = poll_all(c2, ids[1]);
    });
    got[0] = poll_all(client, ids[0]);
    other.join();
    CHECK(got[0] == reference_frames(ckpt, sketch, cfg_a));
    CHECK(got[1] == reference_frames(ckpt, sketch, cfg_b));
    CHECK(got[0].size() == 41);

    auto head = client.Get("/sli/" + ids[0] + "/frames?from=0");
    REQUIRE(head);
    const auto hb = json::parse(head->body);
    CHECK(hb.contains("header"));
    CHECK(hb.at("status") == "done");
    auto tail = client.Get("/sli/" + ids[0] + "/frames?from=38");
    CHECK(json::parse(tail->body).at("frames").size() == 3);
    CHECK_FALSE(json::parse(tail->body).contains("header"));

    auto del = client.Delete("/sli/" + ids[0]);
    REQUIRE(del);
    CHECK(del->status == 200);
    auto gone = client.Get("/sli/" + ids[0] + "/frames?from=0");
    CHECK(gone->status == 404);
    CHECK(client.Delete("/sli/run-424242")->status == 404);

    auto bad = client.Post("/classify", "{not json", "application/json");
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body)["error"]["field"] == "body");
  }

  TEST_CASE("http: cancelling a running session") {
    Service service(test_checkpoint());
    const auto sketch = sample_sketch(5);
    const auto start = service.start_sli(json{{"sketch", sketch}, {"config", {{"steps", 100000}}}});
    REQUIRE(start.status == 200);
    const auto id = start.body.at("run_id").get<std::string>();
    const auto first = service.frames(id, 0, std::chrono::milliseconds(5000));
    CHECK(first.body.at("frames").size() >= 1);
    CHECK(service.cancel(id).status == 200);
    CHECK(service.session_count() == 0);
  }

  TEST_CASE("service: idle sessions expire") {
    ServiceOptions opt;
    opt.idle_timeout = std::chrono::milliseconds(50);
    opt.sweep_interval = std::chrono::milliseconds(20);
    Service service(test_checkpoint(), {}, opt);
    const auto start = service.start_sli(json{{"sketch", sample_sketch(6)}, {"config", {{"steps", 5}}}});
    const auto id = start.body.at("run_id").get<std::string>();
    CHECK(service.session_count() == 1);
    for (int i = 0; i < 200 && service.session_count() > 0; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    CHECK(service.session_count() == 0);
    try {
      service.frames(id, 0, std::chrono::milliseconds(0));
      FAIL("expected not found");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNotFound);
    }
  }

  TEST_CASE("cli: end to end on a tiny corpus") {
    TempDir dir("cli");
    const auto p = [&](const char* name) { return (dir / name).string(); };
    std::string out, err;
    REQUIRE(cli({"synth", "--out", p("raw"), "--classes", "face,sun", "--per-class", "12", "--seed", "3"}, &out, &err) == 0);
    REQUIRE(cli({"ingest", "--data", p("raw"), "--classes", "face,sun", "--train", "8", "--valid", "2", "--test", "2",
                 "--out", p("ds.bin")},
                &out, &err) == 0);
    CHECK(json::parse(out).at("train") == 16);
    REQUIRE(cli({"train", "--dataset", p("ds.bin"), "--epochs", "1", "--batch", "8", "--out", p("m.ckpt")}, &out, &err) == 0);
    CHECK(std::filesystem::exists(p("m.ckpt.json")));

    const auto ds = data::load_dataset(p("ds.bin"));
    save_sketch_file(p("s.json"), ds.test.front());
    const std::vector<std::string> sli_args = {"sli", "--ckpt", p("m.ckpt"), "--input", p("s.json"), "--task", "transfer",
                                               "--target", ds.test.front().label == 0 ? "sun" : "face", "--steps", "12",
                                               "--decimals", "6", "--out"};
    auto a = sli_args, b = sli_args;
    a.push_back(p("a.ndjson"));
    b.push_back(p("b.ndjson"));
    REQUIRE(cli(a, &out, &err) == 0);
    REQUIRE(cli(b, &out, &err) == 0);
    CHECK(read_file(p("a.ndjson")) == read_file(p("b.ndjson")));
    CHECK(json::parse(out).at("frames") == 13);

    REQUIRE(cli({"render", "--trajectory", p("a.ndjson"), "--out", p("frames"), "--stride", "6"}, &out, &err) == 0);
    CHECK(std::filesystem::exists(dir / "frames/frame_0012.svg"));
    REQUIRE(cli({"render", "--input", p("s.json"), "--out", p("s.svg")}, &out, &err) == 0);
    CHECK(read_file(p("s.svg")).find("<polyline") != std::string::npos);

    REQUIRE(cli({"analyze", "order-sim", "--ckpt", p("m.ckpt"), "--m", "4", "--out", p("o.csv")}, &out, &err) == 0);
    REQUIRE(cli({"analyze", "primitives", "--ckpt", p("m.ckpt"), "--dataset", p("ds.bin"), "--k", "3", "--out",
                 p("cb.json")},
                &out, &err) == 0);
    REQUIRE(cli({"analyze", "shape-inversion", "--ckpt", p("m.ckpt"), "--codebook", p("cb.json"), "--input", p("s.json"),
                 "--target", "sun", "--steps", "2", "--out", p("si.json")},
                &out, &err) == 0);
    REQUIRE(cli({"analyze", "transfer-map", "--ckpt", p("m.ckpt"), "--dataset", p("ds.bin"), "--k", "2", "--per-class",
                 "1", "--steps", "3", "--out", p("tm.csv")},
                &out, &err) == 0);
    CHECK(std::filesystem::exists(p("tm.csv.json")));
    REQUIRE(cli({"analyze", "attention", "--ckpt", p("m.ckpt"), "--input", p("s.json"), "--out", p("att.json")}, &out,
                &err) == 0);
    REQUIRE(cli({"eval", "--ckpt", p("m.ckpt"), "--dataset", p("ds.bin")}, &out, &err) == 0);
    CHECK(json::parse(out).at("count") == 4);
  }

  TEST_CASE("cli: failures print one machine-readable line") {
    TempDir dir("clierr");
    std::string out, err;
    CHECK(cli({"sli", "--ckpt", (dir / "none.ckpt").string(), "--input", "x.json", "--out", "y"}, &out, &err) == 1);
    const auto e = json::parse(err);
    CHECK(e.at("error").contains("code"));
    CHECK(e.at("error").contains("message"));
    CHECK(cli({"train"}, &out, &err) == 2);
    CHECK(json::parse(err).at("error").at("code") == "usage");
    CHECK(cli({"sli", "--ckpt", "a", "--input", "b", "--out", "c", "--steps", "-3"}, &out, &err) == 1);
  }
}
