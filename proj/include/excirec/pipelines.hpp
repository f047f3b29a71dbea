#pragma once

#include "excirec/config.hpp"

namespace excirec {

// Command bodies behind the CLI; each returns 0 on success and throws the
// error hierarchy of common.hpp otherwise (main maps those to exit codes).
int cmd_generate(const GenerateConfig& cfg, int n_threads);
int cmd_train(const TrainCommandConfig& cfg);
int cmd_evaluate(const EvaluateConfig& cfg);
int cmd_predict(const PredictConfig& cfg);
int cmd_localfield(const LocalFieldCommandConfig& cfg);
int cmd_baseline(const BaselineCommandConfig& cfg);

}  // namespace excirec
