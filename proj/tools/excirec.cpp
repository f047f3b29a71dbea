// excirec: generate datasets, train and run reconstruction networks, compute
// physical near-field maps, and benchmark classical baselines. Each
// subcommand takes a JSON config; see presets/ for working examples.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "excirec/common.hpp"
#include "excirec/pipelines.hpp"

namespace {

struct Args {
  std::string config_path;
  int threads = 1;
  std::string out_dir;  // overrides output_dir from the config when set
};

void add_common(CLI::App* sub, Args& args) {
  sub->add_option("--config", args.config_path, "JSON config file")
      ->required();
  sub->add_option("--threads", args.threads, "worker threads")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", args.out_dir, "output directory override");
}

template <typename Config>
void finalize(Config& cfg, const Args& args) {
  if (!args.out_dir.empty()) cfg.common.output_dir = args.out_dir;
  excirec::apply_seed_override(cfg.common);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"near-field exciton spectroscopy toolkit"};
  app.require_subcommand(1);

  Args args;
  auto* gen = app.add_subcommand("generate", "build a disorder ensemble");
  auto* train = app.add_subcommand("train", "train a reconstruction network");
  auto* eval = app.add_subcommand("evaluate", "score a network on a dataset");
  auto* predict =
      app.add_subcommand("predict", "reconstruct one spectrum from CSV");
  auto* local = app.add_subcommand(
      "localfield", "physical-units near-field map and peak slices");
  auto* base =
      app.add_subcommand("baseline", "classical optimizer reconstruction");
  for (auto* sub : {gen, train, eval, predict, local, base})
    add_common(sub, args);

  CLI11_PARSE(app, argc, argv);

  try {
    const nlohmann::json doc = excirec::load_config_file(args.config_path);
    if (gen->parsed()) {
      auto cfg = excirec::parse_generate_config(doc);
      finalize(cfg, args);
      return excirec::cmd_generate(cfg, args.threads);
    }
    if (train->parsed()) {
      auto cfg = excirec::parse_train_config(doc);
      finalize(cfg, args);
      return excirec::cmd_train(cfg);
    }
    if (eval->parsed()) {
      auto cfg = excirec::parse_evaluate_config(doc);
      finalize(cfg, args);
      return excirec::cmd_evaluate(cfg);
    }
    if (predict->parsed()) {
      auto cfg = excirec::parse_predict_config(doc);
      finalize(cfg, args);
      return excirec::cmd_predict(cfg);
    }
    if (local->parsed()) {
      auto cfg = excirec::parse_localfield_config(doc);
      finalize(cfg, args);
      return excirec::cmd_localfield(cfg);
    }
    auto cfg = excirec::parse_baseline_config(doc);
    finalize(cfg, args);
    return excirec::cmd_baseline(cfg);
  } catch (const excirec::numerical_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const excirec::convergence_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const excirec::error& e) {
    // config_error, invalid_input, format_error
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
