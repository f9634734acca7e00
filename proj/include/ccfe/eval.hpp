#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ccfe/contact.hpp"
#include "ccfe/estimators.hpp"
#include "ccfe/posnet.hpp"
#include "ccfe/simulator.hpp"
#include "ccfe/stiffness.hpp"
#include "ccfe/types.hpp"

namespace ccfe {

/// Root-mean-square error divided by the ground-truth range, per axis, plus
/// the same measure on the Euclidean norms of both series. An axis whose
/// ground-truth range is zero is flagged degenerate instead of reporting
/// infinity.
struct NrmseResult {
  double norm = 0.0;
  Vec3 per_axis = Vec3::Zero();
  std::array<bool, 3> axis_degenerate{false, false, false};
  bool norm_degenerate = false;
};

NrmseResult nrmse(const Vec3Series& f_est, const Vec3Series& f_gt);

struct PositionRmse {
  double overall = 0.0;  // pooled over all axes
  Vec3 per_axis = Vec3::Zero();
};

PositionRmse rmse_normalized_position(const NormalizedPositionSeries& est,
                                      const NormalizedPositionSeries& gt);

/// Multiplies the unitless series per axis by a reference range in meters.
Vec3Series rescale_to_test_range(const NormalizedPositionSeries& est,
                                 const Vec3& reference_range);

/// Confusion-matrix metrics of the positive (contact) class. A metric whose
/// denominator is empty is reported as absent, not zero.
struct ClassificationMetrics {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::size_t true_positives = 0, false_positives = 0;
  std::size_t true_negatives = 0, false_negatives = 0;
};

ClassificationMetrics classification_metrics(const ContactSignal& pred,
                                             const ContactSignal& truth);

/// Sample mean and standard deviation over demonstrations; std is absent
/// for single-demonstration reports.
struct MeanStd {
  double mean = 0.0;
  std::optional<double> stddev;
  std::size_t count = 0;
};

MeanStd mean_std(const std::vector<double>& values);

struct StiffnessRow {
  std::string method;
  MeanStd k_x, k_y, k_z_plus, k_z_minus;
  // Difference of means against the reference (first) row, N/m.
  Vec3 delta_vs_reference = Vec3::Zero();
  double delta_z_minus_vs_reference = 0.0;
  // Relative error of means against the simulator truth.
  double rel_error_x = 0.0, rel_error_y = 0.0;
  double rel_error_z_plus = 0.0, rel_error_z_minus = 0.0;
};

/// Aggregates per-demonstration stiffness fits per method; the first entry
/// of `fits` is the reference method for the delta columns.
std::vector<StiffnessRow> stiffness_error_report(
    const std::vector<std::pair<std::string, std::vector<StiffnessModel>>>&
        fits,
    const MaterialProfile& truth);

struct MethodRow {
  std::string method;
  MeanStd norm, x, y, z;
};

struct ContactSourceRow {
  std::string source;
  MeanStd accuracy, precision, recall, f1;
};

struct PositionRow {
  std::string model;
  MeanStd overall, x, y, z;             // normalized units
  MeanStd rescaled_overall;             // meters, test-range rescaling
};

struct PerDemoNrmse {
  std::string demo_id;
  std::string method;
  NrmseResult value;
};

struct EvalReport {
  std::string scenario_name;
  std::uint64_t seed = 0;
  std::size_t n_test_demos = 0;
  std::vector<MethodRow> methods;
  std::vector<ContactSourceRow> contact_sources;
  std::vector<StiffnessRow> stiffness;
  std::vector<PositionRow> position;
  std::vector<PerDemoNrmse> per_demo;  // plot-ready columnar rows
};

/// Scenario of a full benchmark run: dataset generation, label sources,
/// per-demonstration fits, and metric aggregation.
struct BenchmarkScenario {
  std::string name = "silicone-default";
  MaterialProfile material = MaterialProfile::silicone();
  NoiseProfile noise = NoiseProfile::standard();
  CameraRig rig = CameraRig::standard();
  WorkerModel workers;
  double duration_s = 60.0;
  double sample_rate_hz = 50.0;
  int n_train = 4;
  int n_val = 2;
  int n_test = 20;
  std::uint64_t seed = 1;
  std::vector<Method> methods = {Method::kFPsm, Method::kCfsKfs,
                                 Method::kCvKfs, Method::kCvKpsm,
                                 Method::kPosDiff};
  std::string contact_source = "crowd";  // gt-force | crowd | classifier
  double force_threshold_n = 0.2;
  double vote_threshold = 0.5;
  int debounce_frames = 3;
  ClassifierTrainingConfig classifier_training;
  // FullVision settings, used when methods include kFullVision.
  ModelKind fullvision_model = ModelKind::kFcn;
  int fullvision_hidden = 0;  // 0 = architecture default
  TrainingConfig fullvision_training = TrainingConfig::fcn_defaults();
  FullVisionMode fullvision_mode = FullVisionMode::kOnsetDisplacement;

  void validate() const;
};

/// Simulated train/validation/test demonstrations of one scenario.
struct ScenarioData {
  std::vector<Demonstration> train, val, test;
};

ScenarioData simulate_scenario(const BenchmarkScenario& scenario);

/// Builds the vision contact signal for one demonstration per the
/// scenario's contact source (classifier source requires trained params).
ContactSignal vision_contact(const BenchmarkScenario& scenario,
                             const Demonstration& demo,
                             const ContactClassifierParams* classifier);

/// End-to-end pipeline: simulate, fit every model per demonstration,
/// evaluate every requested method, aggregate. Deterministic per seed.
EvalReport run_benchmark(const BenchmarkScenario& scenario);

/// One point of a data-efficiency curve.
struct SweepPoint {
  int size = 0;
  std::vector<double> values;  // one per repeat
  MeanStd stats;
};

struct SweepReport {
  std::string task;  // "contact" | "position"
  std::string arm;   // "pretrained" | "scratch"
  std::string metric;
  std::vector<SweepPoint> points;
  std::optional<double> zero_shot;  // metric before any fine-tuning
};

struct SweepConfig {
  std::string task = "contact";
  std::vector<int> sizes = {50, 150, 300};
  int repeats = 5;
  std::uint64_t seed = 1;
  bool run_pretrained_arm = true;
  bool run_scratch_arm = false;
  BenchmarkScenario source;  // pretraining pool
  BenchmarkScenario target;  // fine-tuning pool and test set
  ModelKind position_model = ModelKind::kFcn;
  int position_hidden = 0;
  TrainingConfig pretrain_training = TrainingConfig::fcn_defaults();
  TrainingConfig finetune_training = TrainingConfig::fcn_defaults();
  ClassifierTrainingConfig classifier_training;

  void validate() const;
};

std::vector<SweepReport> data_efficiency_sweep(const SweepConfig& cfg);

}  // namespace ccfe
