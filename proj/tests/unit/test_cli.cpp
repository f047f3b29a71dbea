#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "doctest.h"
#include "excirec/checkpoint.hpp"
#include "excirec/config.hpp"
#include "excirec/csv.hpp"
#include "excirec/pipelines.hpp"
#include "excirec/svg.hpp"

using namespace excirec;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Fresh scratch directory per test, removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("excirec_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

json minimal_generate_config() {
  return json{{"schema_version", 1},
              {"master_seed", 42},
              {"geometry", {{"kind", "chain1d"}, {"n", 5}}},
              {"sigma_d", {0.1}},
              {"realizations_per_sigma", 4},
              {"n_tip", 64}};
}

std::string file_text(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return text;
}

}  // namespace

TEST_CASE("config: schema_version is pinned") {
  json j = minimal_generate_config();
  j["schema_version"] = 2;
  CHECK_THROWS_AS(parse_generate_config(j), config_error);
  j.erase("schema_version");
  CHECK_THROWS_AS(parse_generate_config(j), config_error);
}

TEST_CASE("config: unknown keys rejected with pointer paths") {
  json j = minimal_generate_config();
  j["typo_key"] = 1;
  try {
    parse_generate_config(j);
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("'/typo_key'") != std::string::npos);
  }

  j = minimal_generate_config();
  j["geometry"]["weird"] = true;
  try {
    parse_generate_config(j);
    FAIL("expected config_error");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("'/geometry/weird'") != std::string::npos);
  }
}

TEST_CASE("config: type errors carry path and expected type") {
  json j = minimal_generate_config();
  j["n_tip"] = "many";
  try {
    parse_generate_config(j);
    FAIL("expected config_error");
  } catch (const config_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("integer") != std::string::npos);
    CHECK(msg.find("'/n_tip'") != std::string::npos);
  }

  j = minimal_generate_config();
  j["master_seed"] = -3;
  CHECK_THROWS_AS(parse_generate_config(j), config_error);
}

TEST_CASE("config: defaults fill optional fields") {
  const auto cfg = parse_generate_config(minimal_generate_config());
  CHECK(cfg.common.master_seed == 42);
  CHECK(cfg.common.output_dir == ".");
  CHECK(cfg.ensemble.geometry.n == 5);
  CHECK(cfg.ensemble.n_tip == 64);
  CHECK(cfg.ensemble.split_fraction == doctest::Approx(0.8));
  CHECK(cfg.train_file == "train.exds");
}

TEST_CASE("config: network block round-trips into layer specs") {
  json j{{"schema_version", 1},
         {"master_seed", 1},
         {"train_file", "t.exds"},
         {"network",
          {{"layers",
            {{{"kind", "conv"}, {"kernel", 5}, {"channels", 4}},
             {{"kind", "relu"}},
             {{"kind", "avgpool"}, {"width", 2}},
             {{"kind", "flatten"}},
             {{"kind", "dense"}, {"units", 7}}}}}}};
  const auto cfg = parse_train_config(j);
  REQUIRE(cfg.network.has_value());
  REQUIRE(cfg.network->layers.size() == 5);
  CHECK(cfg.network->layers[0].kind == nn::LayerKind::conv);
  CHECK(cfg.network->layers[0].kernel == 5);
  CHECK(cfg.network->layers[0].channels == 4);
  CHECK(cfg.network->layers[4].units == 7);

  j["network"]["layers"][4].erase("units");
  CHECK_THROWS_AS(parse_train_config(j), config_error);
  j["network"]["layers"][4]["units"] = 7;
  j["network"]["layers"][0]["kind"] = "deconv";
  CHECK_THROWS_AS(parse_train_config(j), config_error);
}

TEST_CASE("config: baseline method and problem validation") {
  json j{{"schema_version", 1}, {"master_seed", 3}};
  auto cfg = parse_baseline_config(j);
  CHECK(cfg.problem == "spectrum");
  CHECK(cfg.methods.size() == 3);

  j["methods"] = {"nelder_mead", "annealing"};
  CHECK_THROWS_AS(parse_baseline_config(j), config_error);

  j.erase("methods");
  j["problem"] = "toy_quadratic";
  CHECK_THROWS_AS(parse_baseline_config(j), config_error);
  j["toy_minimum"] = {0.1, 0.2};
  CHECK(parse_baseline_config(j).toy_minimum.size() == 2);
}

TEST_CASE("config: localfield predict requires a checkpoint") {
  json j{{"schema_version", 1}, {"master_seed", 0}, {"n", 4}};
  CHECK_THROWS_AS(parse_localfield_config(j), config_error);
  j["predict"] = false;
  CHECK(parse_localfield_config(j).n == 4);
  j["predict"] = true;
  j["checkpoint_file"] = "model.exnn";
  CHECK(parse_localfield_config(j).checkpoint_file == "model.exnn");
}

TEST_CASE("config: EXCIREC_SEED override") {
  CommonConfig c;
  c.master_seed = 5;

  setenv("EXCIREC_SEED", "123456789", 1);
  apply_seed_override(c);
  CHECK(c.master_seed == 123456789ull);

  setenv("EXCIREC_SEED", "12x", 1);
  CHECK_THROWS_AS(apply_seed_override(c), config_error);

  unsetenv("EXCIREC_SEED");
  apply_seed_override(c);
  CHECK(c.master_seed == 123456789ull);
}

TEST_CASE("csv: vector round-trip with and without header") {
  TempDir dir("csv");
  Eigen::VectorXd v(4);
  v << 1.5, -2.25, 3.0625, 1e-12;

  write_vector_csv(dir.file("plain.csv"), v);
  const Eigen::VectorXd back = read_vector_csv(dir.file("plain.csv"));
  REQUIRE(back.size() == 4);
  CHECK((back - v).cwiseAbs().maxCoeff() == 0.0);

  write_vector_csv(dir.file("head.csv"), v, "value");
  const Eigen::VectorXd back2 = read_vector_csv(dir.file("head.csv"));
  CHECK((back2 - v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("csv: corruption raises format errors") {
  TempDir dir("csv_bad");
  {
    std::ofstream out(dir.file("bad.csv"));
    out << "1.0\n2.0\nnot_a_number\n";
  }
  CHECK_THROWS_AS(read_vector_csv(dir.file("bad.csv")), format_error);
  {
    std::ofstream out(dir.file("empty.csv"));
  }
  CHECK_THROWS_AS(read_vector_csv(dir.file("empty.csv")), format_error);
  CHECK_THROWS_AS(read_vector_csv(dir.file("missing.csv")), format_error);
}

TEST_CASE("svg: writers emit well-formed documents") {
  TempDir dir("svg");
  Eigen::VectorXd x(5), y(5);
  for (int i = 0; i < 5; ++i) {
    x[i] = i;
    y[i] = i * i;
  }
  write_line_svg(dir.file("line.svg"), x, {y}, "probe");
  const std::string line = file_text(dir.file("line.svg"));
  CHECK(line.find("<svg") != std::string::npos);
  CHECK(line.find("</svg>") != std::string::npos);
  CHECK(line.find("polyline") != std::string::npos);

  write_heatmap_svg(dir.file("map.svg"), Eigen::MatrixXd::Random(20, 30),
                    "probe map");
  const std::string map = file_text(dir.file("map.svg"));
  CHECK(map.find("<svg") != std::string::npos);
  CHECK(map.find("</svg>") != std::string::npos);
}

TEST_CASE("pipeline: generate is idempotent and writes a manifest") {
  TempDir dir("gen");
  json j = minimal_generate_config();
  auto cfg = parse_generate_config(j);
  cfg.common.output_dir = dir.file("a");
  REQUIRE(cmd_generate(cfg, 1) == 0);

  const json manifest =
      json::parse(file_text(dir.file("a") + "/manifest.json"));
  CHECK(manifest.at("schema_version") == 1);
  CHECK(manifest.at("total_samples") == 20);  // 1 sigma * 4 realizations * 5
  CHECK(manifest.at("n_tip") == 64);
  const std::string train_sum =
      manifest.at("files").at("train").at("checksum_fnv1a64");

  cfg.common.output_dir = dir.file("b");
  REQUIRE(cmd_generate(cfg, 1) == 0);
  const json manifest2 =
      json::parse(file_text(dir.file("b") + "/manifest.json"));
  CHECK(manifest2.at("files").at("train").at("checksum_fnv1a64") == train_sum);
  CHECK(manifest2.at("files").at("test").at("checksum_fnv1a64") ==
        manifest.at("files").at("test").at("checksum_fnv1a64"));
}

TEST_CASE("pipeline: train, evaluate, predict on a tiny run") {
  TempDir dir("flow");

  json gen = minimal_generate_config();
  gen["realizations_per_sigma"] = 30;
  auto gen_cfg = parse_generate_config(gen);
  gen_cfg.common.output_dir = dir.path.string();
  REQUIRE(cmd_generate(gen_cfg, 1) == 0);

  TrainCommandConfig train_cfg;
  train_cfg.common.master_seed = 9;
  train_cfg.common.output_dir = dir.path.string();
  train_cfg.train_file = dir.file("train.exds");
  train_cfg.val_fraction = 0.2;
  train_cfg.network = nn::NetworkConfig{
      nn::Shape{1, 64, 1},
      {nn::conv_spec(5, 4), nn::relu_spec(), nn::avgpool_spec(2),
       nn::flatten_spec(), nn::dense_spec(5)}};
  train_cfg.epochs = 3;
  train_cfg.batch_size = 16;
  train_cfg.verbose = false;
  REQUIRE(cmd_train(train_cfg) == 0);
  CHECK(fs::exists(dir.file("model.exnn")));
  const std::string history = file_text(dir.file("history.csv"));
  CHECK(history.find("epoch,train_loss,val_loss") != std::string::npos);

  EvaluateConfig eval_cfg;
  eval_cfg.common.master_seed = 9;
  eval_cfg.common.output_dir = dir.path.string();
  eval_cfg.checkpoint_file = dir.file("model.exnn");
  eval_cfg.dataset_file = dir.file("test.exds");
  eval_cfg.svg = true;
  REQUIRE(cmd_evaluate(eval_cfg) == 0);
  const std::string hist = file_text(dir.file("loss_histogram.csv"));
  CHECK(hist.find("sample,state,sigma_d,sigma_od,loss") != std::string::npos);
  CHECK(fs::exists(dir.file("state_mean_loss.csv")));
  CHECK(fs::exists(dir.file("state_mean_loss.svg")));

  // One spectrum from the test set as a prediction input.
  const DataSet test_set = load_dataset(dir.file("test.exds"));
  write_vector_csv(dir.file("spectrum.csv"),
                   test_set.inputs.row(0).cast<double>().transpose());
  PredictConfig pred_cfg;
  pred_cfg.common.master_seed = 9;
  pred_cfg.common.output_dir = dir.path.string();
  pred_cfg.checkpoint_file = dir.file("model.exnn");
  pred_cfg.spectrum_file = dir.file("spectrum.csv");
  REQUIRE(cmd_predict(pred_cfg) == 0);
  const Eigen::VectorXd c = read_vector_csv(dir.file("coefficients.csv"));
  CHECK(c.size() == 2 * 5);  // site,coefficient pairs flattened row-wise
}

TEST_CASE("pipeline: shape mismatches are invalid input") {
  TempDir dir("mismatch");

  json gen = minimal_generate_config();
  auto gen_cfg = parse_generate_config(gen);
  gen_cfg.common.output_dir = dir.path.string();
  REQUIRE(cmd_generate(gen_cfg, 1) == 0);

  // Checkpoint with a 32-wide input cannot consume 64-wide spectra.
  nn::Network<float> small(
      nn::NetworkConfig{nn::Shape{1, 32, 1},
                        {nn::flatten_spec(), nn::dense_spec(5)}},
      1);
  save_checkpoint(dir.file("small.exnn"), small);

  EvaluateConfig eval_cfg;
  eval_cfg.common.output_dir = dir.path.string();
  eval_cfg.checkpoint_file = dir.file("small.exnn");
  eval_cfg.dataset_file = dir.file("test.exds");
  CHECK_THROWS_AS(cmd_evaluate(eval_cfg), invalid_input);
}

TEST_CASE("pipeline: localfield map dimensions and slice files") {
  TempDir dir("lf");
  LocalFieldCommandConfig cfg;
  cfg.common.master_seed = 1;
  cfg.common.output_dir = dir.path.string();
  cfg.n = 4;
  cfg.n_omega = 400;
  cfg.pad_gammas = 30.0;
  cfg.n_tip = 48;
  cfg.extent_nm = 12.0;
  cfg.z_nm = 3.75;
  cfg.predict = false;
  cfg.svg = true;
  REQUIRE(cmd_localfield(cfg) == 0);

  int rows = 0;
  std::ifstream map(dir.file("localfield_map.csv"));
  std::string line;
  size_t cols = 0;
  while (std::getline(map, line)) {
    if (line.empty()) continue;
    ++rows;
    if (rows == 1) cols = 1 + std::count(line.begin(), line.end(), ',');
  }
  CHECK(rows == 400);
  CHECK(cols == 48);
  CHECK(read_vector_csv(dir.file("localfield_omegas.csv")).size() == 400);
  CHECK(fs::exists(dir.file("peak_slices.csv")));
  CHECK(fs::exists(dir.file("localfield_map.svg")));
}

TEST_CASE("pipeline: baseline toy quadratic record") {
  TempDir dir("toy");
  BaselineCommandConfig cfg;
  cfg.common.master_seed = 7;
  cfg.common.output_dir = dir.path.string();
  cfg.problem = "toy_quadratic";
  cfg.toy_minimum = {0.3, -0.2};
  cfg.methods = {baseline::Method::nelder_mead};
  cfg.max_iterations = 600;
  cfg.target_cost = 1e-10;
  REQUIRE(cmd_baseline(cfg) == 0);

  const json doc = json::parse(file_text(dir.file("baseline_results.json")));
  REQUIRE(doc.at("records").size() == 1);
  const json& rec = doc["records"][0];
  CHECK(rec.at("method") == "nelder_mead");
  CHECK(rec.at("converged") == true);
  CHECK(rec.at("best_cost").get<double>() <= 1e-10);
  CHECK(rec.at("distance_to_minimum").get<double>() < 1e-4);

  cfg.require_convergence = true;
  cfg.max_iterations = 3;
  CHECK_THROWS_AS(cmd_baseline(cfg), convergence_error);
}
