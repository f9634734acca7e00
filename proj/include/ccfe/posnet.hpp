#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ccfe/types.hpp"

namespace ccfe {

/// Divides each axis by its range over the series (no offset subtraction),
/// recording the range endpoints. A constant axis maps to zero.
NormalizedPositionSeries normalize_positions(const Vec3Series& p);

/// One node of the keypoint graph. `onehot_id` is the node's identity label
/// in the feature encoding and is independent of storage order, so a
/// consistent renumbering of storage indices leaves the model output
/// unchanged.
struct GraphNode {
  std::string name;
  int onehot_id = 0;
  int view = 0;      // 0 left, 1 right
  int kp_index = 0;  // index into the view's keypoint array
};

/// Fixed 16-node stereo tool graph: a directed shaft-to-jaw chain in each
/// view plus 8 undirected cross-view links between corresponding keypoints.
/// Messages flow along directed edges; cross-view edges pass both ways.
struct GraphSpec {
  static constexpr int kNumNodes = 16;
  static constexpr int kFeatureDim = kNumNodes + 2;

  std::vector<GraphNode> nodes;
  std::vector<std::pair<int, int>> directed_edges;  // source -> target
  std::vector<std::pair<int, int>> cross_edges;     // undirected

  /// in_neighbors(i, j) is true when node j sends messages to node i.
  Eigen::Matrix<double, kNumNodes, kNumNodes> in_neighbors;

  /// Rebuilds the membership matrix from the edge lists.
  void finalize();
};

GraphSpec build_tool_graph();

enum class ModelKind { kFcn, kGnn };
enum class Activation { kRelu, kIdentity };

/// A dense block; biases are stored as single-column matrices so every
/// parameter block has one shape type.
struct DenseLayer {
  Eigen::MatrixXd w;  // out x in
  Eigen::MatrixXd b;  // out x 1
};

struct SageLayer {
  Eigen::MatrixXd w_self;   // out x in
  Eigen::MatrixXd w_neigh;  // out x in
  Eigen::MatrixXd b;        // out x 1
};

/// Symmetric stereo network: one 4-layer sub-network per view over the 16
/// pixel coordinates, fused by a final linear layer into 3 outputs.
struct FcnParams {
  static constexpr int kViewInputDim = 2 * StereoKeypoints::kPointsPerView;
  static constexpr int kLayersPerSide = 4;
  std::array<std::array<DenseLayer, kLayersPerSide>, 2> sides;
  DenseLayer fuse;  // 3 x (2 * hidden)
};

/// Graph network: mean-aggregating convolution, a per-node dense layer,
/// a second convolution, mean pooling over nodes, and a linear head.
struct GnnParams {
  SageLayer conv1;   // hidden x 18
  DenseLayer dense;  // hidden x hidden
  SageLayer conv2;   // hidden x hidden
  DenseLayer head;   // 3 x hidden
};

struct TrainingMeta {
  std::uint64_t seed = 0;
  int epochs = 0;
  double final_loss = 0.0;
};

struct PositionEstimatorParams {
  ModelKind kind = ModelKind::kFcn;
  Activation activation = Activation::kRelu;
  FcnParams fcn;
  GnnParams gnn;
  TrainingMeta meta;

  int hidden_units() const;
};

/// Mutable view over every parameter block of a model, used by the
/// optimizer, the serializer, and the finite-difference checker.
struct ParamBlockRef {
  std::string name;
  Eigen::MatrixXd* block;
  bool is_weight;  // false for biases (excluded from the L2 penalty)
};

std::vector<ParamBlockRef> param_blocks(PositionEstimatorParams& params);

/// Seeded uniform init in +/- sqrt(6 / (fan_in + fan_out)); biases zero.
PositionEstimatorParams make_fcn_params(std::uint64_t seed, int hidden = 16);
PositionEstimatorParams make_gnn_params(std::uint64_t seed, int hidden = 512);

Vec3 fcn_forward(const PositionEstimatorParams& params,
                 const StereoKeypoints& kp);
Vec3 gnn_forward(const PositionEstimatorParams& params, const GraphSpec& graph,
                 const StereoKeypoints& kp);

/// Dispatches on params.kind; the GNN uses the canonical tool graph.
Vec3 predict_position(const PositionEstimatorParams& params,
                      const StereoKeypoints& kp);

struct TrainingSample {
  StereoKeypoints kp;
  Vec3 target = Vec3::Zero();  // normalized position
};

struct TrainingConfig {
  double learning_rate = 1e-3;
  double l2_weight = 1e-4;
  int epochs = 200;
  int batch_size = 512;
  std::uint64_t seed = 0;

  static TrainingConfig gnn_defaults();
  static TrainingConfig fcn_defaults();
};

/// Mean squared error over all output scalars plus l2 * sum of squared
/// weights — the training objective.
double evaluate_loss(const PositionEstimatorParams& params,
                     const std::vector<TrainingSample>& dataset,
                     double l2_weight);

/// Trains with shuffled mini-batches and adaptive-moment updates
/// (decays 0.9 / 0.999, epsilon 1e-8), deterministic per seed. Returns the
/// parameters with the best full-dataset objective over all epochs,
/// including the initial state.
PositionEstimatorParams train_estimator(ModelKind kind,
                                        const std::vector<TrainingSample>& dataset,
                                        const TrainingConfig& cfg,
                                        int hidden_units = 0,
                                        std::vector<double>* loss_history = nullptr);

/// Continues training from existing parameters under the same contract.
PositionEstimatorParams fine_tune(const PositionEstimatorParams& params,
                                  const std::vector<TrainingSample>& dataset,
                                  const TrainingConfig& cfg,
                                  std::vector<double>* loss_history = nullptr);

/// Max relative disagreement between analytic gradients and central finite
/// differences of the training objective on one sample.
double gradient_check(const PositionEstimatorParams& params,
                      const TrainingSample& sample, double eps,
                      double l2_weight = 0.0);

/// Runs the model over every frame's keypoints.
Vec3Series predict_positions(const PositionEstimatorParams& params,
                             const Demonstration& demo);

/// (keypoints, normalized position) pairs over a set of demonstrations.
std::vector<TrainingSample> make_position_dataset(
    const std::vector<Demonstration>& demos);

}  // namespace ccfe
