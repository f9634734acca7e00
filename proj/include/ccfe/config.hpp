#pragma once

#include <string>

#include "ccfe/eval.hpp"

namespace ccfe {

/// Everything a CLI invocation may need, assembled from one declarative
/// config file with explicit defaults.
struct AppConfig {
  BenchmarkScenario scenario;
  int n_demos = 3;  // for the simulate command
  ModelKind train_model = ModelKind::kFcn;
  int train_hidden = 0;  // 0 = architecture default
  TrainingConfig training = TrainingConfig::fcn_defaults();
  ClassifierTrainingConfig classifier_training;
  SweepConfig sweep;
};

AppConfig default_app_config();

/// Parses and validates a config document. Unknown keys and invalid values
/// raise ValidationError naming the offending field.
AppConfig parse_app_config(const std::string& text);

/// Canonical JSON of the defaults, suitable for --dump-defaults.
std::string dump_default_config();

}  // namespace ccfe
