#include "ccfe/posnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ccfe/rng.hpp"

namespace ccfe {

using Eigen::MatrixXd;

NormalizedPositionSeries normalize_positions(const Vec3Series& p) {
  NormalizedPositionSeries out;
  if (p.empty()) return out;
  out.p_min = p.front();
  out.p_max = p.front();
  for (const auto& v : p) {
    out.p_min = out.p_min.cwiseMin(v);
    out.p_max = out.p_max.cwiseMax(v);
  }
  const Vec3 range = out.p_max - out.p_min;
  out.p_hat.reserve(p.size());
  for (const auto& v : p) {
    Vec3 h;
    for (int a = 0; a < 3; ++a) h[a] = range[a] > 0.0 ? v[a] / range[a] : 0.0;
    out.p_hat.push_back(h);
  }
  return out;
}

void GraphSpec::finalize() {
  in_neighbors.setZero();
  for (const auto& [src, dst] : directed_edges) in_neighbors(dst, src) = 1.0;
  for (const auto& [a, b] : cross_edges) {
    in_neighbors(a, b) = 1.0;
    in_neighbors(b, a) = 1.0;
  }
}

GraphSpec build_tool_graph() {
  GraphSpec g;
  const char* names[8] = {"shaft",         "wrist",          "jaw_left_base",
                          "jaw_left_tip",  "jaw_right_base", "jaw_right_tip",
                          "jaw_left_mid",  "jaw_right_mid"};
  for (int view = 0; view < 2; ++view)
    for (int k = 0; k < 8; ++k) {
      GraphNode node;
      node.name = std::string(view == 0 ? "L:" : "R:") + names[k];
      node.onehot_id = view * 8 + k;
      node.view = view;
      node.kp_index = k;
      g.nodes.push_back(node);
    }
  // Shaft -> wrist -> jaw chain with jaw-middle leaves, per view.
  const std::pair<int, int> chain[7] = {{0, 1}, {1, 2}, {2, 3}, {1, 4},
                                        {4, 5}, {2, 6}, {4, 7}};
  for (int view = 0; view < 2; ++view)
    for (const auto& [s, d] : chain)
      g.directed_edges.emplace_back(view * 8 + s, view * 8 + d);
  for (int k = 0; k < 8; ++k) g.cross_edges.emplace_back(k, k + 8);
  g.finalize();
  return g;
}

namespace {

// Ascending in-neighbor index lists; summation order is fixed by node index
// rather than edge storage order.
std::vector<std::vector<int>> neighbor_lists(const GraphSpec& g) {
  std::vector<std::vector<int>> nbrs(GraphSpec::kNumNodes);
  for (int i = 0; i < GraphSpec::kNumNodes; ++i)
    for (int j = 0; j < GraphSpec::kNumNodes; ++j)
      if (g.in_neighbors(i, j) != 0.0) nbrs[i].push_back(j);
  return nbrs;
}

// out.row(i) = mean of x rows over i's in-neighbors, per 16-row block. An
// empty neighborhood contributes the zero vector.
void aggregate_blocks(const std::vector<std::vector<int>>& nbrs,
                      const MatrixXd& x, MatrixXd& out) {
  const int n = GraphSpec::kNumNodes;
  out.resize(x.rows(), x.cols());
  const auto blocks = static_cast<int>(x.rows()) / n;
  for (int b = 0; b < blocks; ++b) {
    const int base = b * n;
    for (int i = 0; i < n; ++i) {
      auto row = out.row(base + i);
      if (nbrs[i].empty()) {
        row.setZero();
        continue;
      }
      row = x.row(base + nbrs[i][0]);
      for (std::size_t k = 1; k < nbrs[i].size(); ++k)
        row += x.row(base + nbrs[i][k]);
      row /= static_cast<double>(nbrs[i].size());
    }
  }
}

// Adjoint of aggregate_blocks.
void aggregate_blocks_transpose(const std::vector<std::vector<int>>& nbrs,
                                const MatrixXd& dm, MatrixXd& out) {
  const int n = GraphSpec::kNumNodes;
  out.setZero(dm.rows(), dm.cols());
  const auto blocks = static_cast<int>(dm.rows()) / n;
  for (int b = 0; b < blocks; ++b) {
    const int base = b * n;
    for (int i = 0; i < n; ++i) {
      if (nbrs[i].empty()) continue;
      const double w = 1.0 / static_cast<double>(nbrs[i].size());
      for (int j : nbrs[i]) out.row(base + j) += dm.row(base + i) * w;
    }
  }
}

MatrixXd activate(const MatrixXd& z, Activation act) {
  if (act == Activation::kIdentity) return z;
  return z.cwiseMax(0.0);
}

MatrixXd activate_grad(const MatrixXd& z, Activation act) {
  if (act == Activation::kIdentity) return MatrixXd::Ones(z.rows(), z.cols());
  return (z.array() > 0.0).cast<double>();
}

MatrixXd affine(const MatrixXd& x, const MatrixXd& w, const MatrixXd& b) {
  if (x.cols() != w.cols())
    throw ValidationError("posnet: layer input width " +
                          std::to_string(x.cols()) + " does not match weight " +
                          std::to_string(w.cols()));
  return (x * w.transpose()).rowwise() + b.col(0).transpose();
}

MatrixXd dense(const MatrixXd& x, const DenseLayer& l) {
  return affine(x, l.w, l.b);
}

struct FcnCache {
  MatrixXd x[2];
  MatrixXd z[2][FcnParams::kLayersPerSide];
  MatrixXd h[2][FcnParams::kLayersPerSide];
  MatrixXd concat;
  MatrixXd y;
};

void fcn_batch_forward(const PositionEstimatorParams& p, const MatrixXd& xl,
                       const MatrixXd& xr, FcnCache& c) {
  c.x[0] = xl;
  c.x[1] = xr;
  for (int s = 0; s < 2; ++s) {
    const MatrixXd* in = &c.x[s];
    for (int l = 0; l < FcnParams::kLayersPerSide; ++l) {
      c.z[s][l] = dense(*in, p.fcn.sides[s][l]);
      c.h[s][l] = activate(c.z[s][l], p.activation);
      in = &c.h[s][l];
    }
  }
  const auto last = FcnParams::kLayersPerSide - 1;
  c.concat.resize(xl.rows(), c.h[0][last].cols() + c.h[1][last].cols());
  c.concat << c.h[0][last], c.h[1][last];
  c.y = dense(c.concat, p.fcn.fuse);
}

struct GnnCache {
  MatrixXd h0, m0, z1, h1, z2, h2, m2, z3, h3, pooled, y;
};

void gnn_batch_forward(const PositionEstimatorParams& p,
                       const std::vector<std::vector<int>>& nbrs,
                       const MatrixXd& h0, GnnCache& c) {
  const int n = GraphSpec::kNumNodes;
  c.h0 = h0;
  aggregate_blocks(nbrs, c.h0, c.m0);
  c.z1 = affine(c.h0, p.gnn.conv1.w_self, p.gnn.conv1.b);
  c.z1.noalias() += c.m0 * p.gnn.conv1.w_neigh.transpose();
  c.h1 = activate(c.z1, p.activation);
  c.z2 = dense(c.h1, p.gnn.dense);
  c.h2 = activate(c.z2, p.activation);
  aggregate_blocks(nbrs, c.h2, c.m2);
  c.z3 = affine(c.h2, p.gnn.conv2.w_self, p.gnn.conv2.b);
  c.z3.noalias() += c.m2 * p.gnn.conv2.w_neigh.transpose();
  c.h3 = activate(c.z3, p.activation);
  const auto batch = static_cast<int>(h0.rows()) / n;
  c.pooled.resize(batch, c.h3.cols());
  for (int b = 0; b < batch; ++b)
    c.pooled.row(b) = c.h3.middleRows(b * n, n).colwise().mean();
  c.y = dense(c.pooled, p.gnn.head);
}

MatrixXd keypoints_to_fcn_input(const StereoKeypoints& kp, int view) {
  MatrixXd x(1, FcnParams::kViewInputDim);
  const auto& pts = view == 0 ? kp.left : kp.right;
  for (int k = 0; k < StereoKeypoints::kPointsPerView; ++k) {
    x(0, 2 * k) = pts[k].x();
    x(0, 2 * k + 1) = pts[k].y();
  }
  return x;
}

void fill_graph_features(const GraphSpec& graph, const StereoKeypoints& kp,
                         MatrixXd& h0, int block) {
  const int n = GraphSpec::kNumNodes;
  for (int i = 0; i < n; ++i) {
    const GraphNode& node = graph.nodes[static_cast<std::size_t>(i)];
    auto row = h0.row(block * n + i);
    row.setZero();
    row(node.onehot_id) = 1.0;
    const auto& pt =
        node.view == 0 ? kp.left[node.kp_index] : kp.right[node.kp_index];
    row(n) = pt.x();
    row(n + 1) = pt.y();
  }
}

const GraphSpec& canonical_graph() {
  static const GraphSpec g = build_tool_graph();
  return g;
}

}  // namespace

int PositionEstimatorParams::hidden_units() const {
  return kind == ModelKind::kFcn ? static_cast<int>(fcn.sides[0][0].w.rows())
                                 : static_cast<int>(gnn.conv1.w_self.rows());
}

std::vector<ParamBlockRef> param_blocks(PositionEstimatorParams& params) {
  std::vector<ParamBlockRef> blocks;
  if (params.kind == ModelKind::kFcn) {
    for (int s = 0; s < 2; ++s)
      for (int l = 0; l < FcnParams::kLayersPerSide; ++l) {
        const std::string base =
            "side" + std::to_string(s) + ".layer" + std::to_string(l);
        blocks.push_back({base + ".w", &params.fcn.sides[s][l].w, true});
        blocks.push_back({base + ".b", &params.fcn.sides[s][l].b, false});
      }
    blocks.push_back({"fuse.w", &params.fcn.fuse.w, true});
    blocks.push_back({"fuse.b", &params.fcn.fuse.b, false});
  } else {
    blocks.push_back({"conv1.w_self", &params.gnn.conv1.w_self, true});
    blocks.push_back({"conv1.w_neigh", &params.gnn.conv1.w_neigh, true});
    blocks.push_back({"conv1.b", &params.gnn.conv1.b, false});
    blocks.push_back({"dense.w", &params.gnn.dense.w, true});
    blocks.push_back({"dense.b", &params.gnn.dense.b, false});
    blocks.push_back({"conv2.w_self", &params.gnn.conv2.w_self, true});
    blocks.push_back({"conv2.w_neigh", &params.gnn.conv2.w_neigh, true});
    blocks.push_back({"conv2.b", &params.gnn.conv2.b, false});
    blocks.push_back({"head.w", &params.gnn.head.w, true});
    blocks.push_back({"head.b", &params.gnn.head.b, false});
  }
  return blocks;
}

namespace {

MatrixXd glorot_uniform(int rows, int cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-limit, limit);
  return m;
}

DenseLayer make_dense(int out, int in, Rng& rng) {
  return DenseLayer{glorot_uniform(out, in, rng), MatrixXd::Zero(out, 1)};
}

SageLayer make_sage(int out, int in, Rng& rng) {
  return SageLayer{glorot_uniform(out, in, rng), glorot_uniform(out, in, rng),
                   MatrixXd::Zero(out, 1)};
}

}  // namespace

PositionEstimatorParams make_fcn_params(std::uint64_t seed, int hidden) {
  if (hidden < 1) throw ValidationError("make_fcn_params: hidden must be >= 1");
  Rng rng(mix_seed(seed, 0xFC1));
  PositionEstimatorParams p;
  p.kind = ModelKind::kFcn;
  for (int s = 0; s < 2; ++s) {
    int in = FcnParams::kViewInputDim;
    for (int l = 0; l < FcnParams::kLayersPerSide; ++l) {
      p.fcn.sides[s][l] = make_dense(hidden, in, rng);
      in = hidden;
    }
  }
  p.fcn.fuse = make_dense(3, 2 * hidden, rng);
  p.meta.seed = seed;
  return p;
}

PositionEstimatorParams make_gnn_params(std::uint64_t seed, int hidden) {
  if (hidden < 1) throw ValidationError("make_gnn_params: hidden must be >= 1");
  Rng rng(mix_seed(seed, 0x6A2E));
  PositionEstimatorParams p;
  p.kind = ModelKind::kGnn;
  p.gnn.conv1 = make_sage(hidden, GraphSpec::kFeatureDim, rng);
  p.gnn.dense = make_dense(hidden, hidden, rng);
  p.gnn.conv2 = make_sage(hidden, hidden, rng);
  p.gnn.head = make_dense(3, hidden, rng);
  p.meta.seed = seed;
  return p;
}

Vec3 fcn_forward(const PositionEstimatorParams& params,
                 const StereoKeypoints& kp) {
  if (params.kind != ModelKind::kFcn)
    throw ValidationError("fcn_forward: parameters are not an FCN");
  FcnCache c;
  fcn_batch_forward(params, keypoints_to_fcn_input(kp, 0),
                    keypoints_to_fcn_input(kp, 1), c);
  return Vec3(c.y(0, 0), c.y(0, 1), c.y(0, 2));
}

Vec3 gnn_forward(const PositionEstimatorParams& params, const GraphSpec& graph,
                 const StereoKeypoints& kp) {
  if (params.kind != ModelKind::kGnn)
    throw ValidationError("gnn_forward: parameters are not a GNN");
  if (graph.nodes.size() != GraphSpec::kNumNodes)
    throw ValidationError("gnn_forward: graph must have 16 nodes");
  MatrixXd h0(GraphSpec::kNumNodes, GraphSpec::kFeatureDim);
  fill_graph_features(graph, kp, h0, 0);
  GnnCache c;
  gnn_batch_forward(params, neighbor_lists(graph), h0, c);
  return Vec3(c.y(0, 0), c.y(0, 1), c.y(0, 2));
}

Vec3 predict_position(const PositionEstimatorParams& params,
                      const StereoKeypoints& kp) {
  return params.kind == ModelKind::kFcn
             ? fcn_forward(params, kp)
             : gnn_forward(params, canonical_graph(), kp);
}

TrainingConfig TrainingConfig::gnn_defaults() {
  TrainingConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.l2_weight = 1e-4;
  cfg.epochs = 200;
  cfg.batch_size = 512;
  return cfg;
}

TrainingConfig TrainingConfig::fcn_defaults() {
  TrainingConfig cfg;
  cfg.learning_rate = 1e-4;
  cfg.l2_weight = 1e-4;
  cfg.epochs = 200;
  cfg.batch_size = 32;
  return cfg;
}

namespace {

struct GradientAccumulator {
  PositionEstimatorParams grads;  // same shapes, zeroed

  explicit GradientAccumulator(const PositionEstimatorParams& like)
      : grads(like) {
    for (auto& blk : param_blocks(grads)) blk.block->setZero();
  }
};

double weight_penalty(const PositionEstimatorParams& params, double l2) {
  if (l2 == 0.0) return 0.0;
  double sum = 0.0;
  auto& mut = const_cast<PositionEstimatorParams&>(params);
  for (const auto& blk : param_blocks(mut))
    if (blk.is_weight) sum += blk.block->squaredNorm();
  return l2 * sum;
}

// Fills `out` with d(objective)/d(params) and returns the objective on the
// batch: mean squared error over output scalars plus the L2 penalty.
double fcn_batch_gradients(const PositionEstimatorParams& p,
                           const MatrixXd& xl, const MatrixXd& xr,
                           const MatrixXd& targets, double l2,
                           PositionEstimatorParams& out) {
  FcnCache c;
  fcn_batch_forward(p, xl, xr, c);
  const auto batch = static_cast<double>(xl.rows());
  const MatrixXd diff = c.y - targets;
  const double data_loss = diff.squaredNorm() / (3.0 * batch);

  const MatrixXd dy = diff * (2.0 / (3.0 * batch));
  out.fcn.fuse.w = dy.transpose() * c.concat;
  out.fcn.fuse.b = dy.colwise().sum().transpose();
  const MatrixXd dconcat = dy * p.fcn.fuse.w;
  const int hidden = static_cast<int>(c.h[0][0].cols());
  for (int s = 0; s < 2; ++s) {
    MatrixXd dh = dconcat.middleCols(s * hidden, hidden);
    for (int l = FcnParams::kLayersPerSide - 1; l >= 0; --l) {
      const MatrixXd dz =
          dh.cwiseProduct(activate_grad(c.z[s][l], p.activation));
      const MatrixXd& input = l == 0 ? c.x[s] : c.h[s][l - 1];
      out.fcn.sides[s][l].w = dz.transpose() * input;
      out.fcn.sides[s][l].b = dz.colwise().sum().transpose();
      if (l > 0) dh = dz * p.fcn.sides[s][l].w;
    }
  }
  double total = data_loss;
  if (l2 != 0.0) {
    total += weight_penalty(p, l2);
    for (int s = 0; s < 2; ++s)
      for (int l = 0; l < FcnParams::kLayersPerSide; ++l)
        out.fcn.sides[s][l].w += 2.0 * l2 * p.fcn.sides[s][l].w;
    out.fcn.fuse.w += 2.0 * l2 * p.fcn.fuse.w;
  }
  return total;
}

double gnn_batch_gradients(const PositionEstimatorParams& p,
                           const std::vector<std::vector<int>>& nbrs,
                           const MatrixXd& h0, const MatrixXd& targets,
                           double l2, PositionEstimatorParams& out) {
  GnnCache c;
  gnn_batch_forward(p, nbrs, h0, c);
  const int n = GraphSpec::kNumNodes;
  const auto batch = static_cast<int>(targets.rows());
  const MatrixXd diff = c.y - targets;
  const double data_loss = diff.squaredNorm() / (3.0 * batch);

  const MatrixXd dy = diff * (2.0 / (3.0 * batch));
  out.gnn.head.w = dy.transpose() * c.pooled;
  out.gnn.head.b = dy.colwise().sum().transpose();
  const MatrixXd dpooled = dy * p.gnn.head.w;

  MatrixXd dh3(c.h3.rows(), c.h3.cols());
  for (int b = 0; b < batch; ++b)
    dh3.middleRows(b * n, n) =
        (dpooled.row(b) / static_cast<double>(n)).replicate(n, 1);

  const MatrixXd dz3 = dh3.cwiseProduct(activate_grad(c.z3, p.activation));
  out.gnn.conv2.w_self = dz3.transpose() * c.h2;
  out.gnn.conv2.w_neigh = dz3.transpose() * c.m2;
  out.gnn.conv2.b = dz3.colwise().sum().transpose();
  MatrixXd dh2 = dz3 * p.gnn.conv2.w_self;
  MatrixXd dm2_back;
  aggregate_blocks_transpose(nbrs, dz3 * p.gnn.conv2.w_neigh, dm2_back);
  dh2 += dm2_back;

  const MatrixXd dz2 = dh2.cwiseProduct(activate_grad(c.z2, p.activation));
  out.gnn.dense.w = dz2.transpose() * c.h1;
  out.gnn.dense.b = dz2.colwise().sum().transpose();
  const MatrixXd dh1 = dz2 * p.gnn.dense.w;

  const MatrixXd dz1 = dh1.cwiseProduct(activate_grad(c.z1, p.activation));
  out.gnn.conv1.w_self = dz1.transpose() * c.h0;
  out.gnn.conv1.w_neigh = dz1.transpose() * c.m0;
  out.gnn.conv1.b = dz1.colwise().sum().transpose();

  double total = data_loss;
  if (l2 != 0.0) {
    total += weight_penalty(p, l2);
    out.gnn.conv1.w_self += 2.0 * l2 * p.gnn.conv1.w_self;
    out.gnn.conv1.w_neigh += 2.0 * l2 * p.gnn.conv1.w_neigh;
    out.gnn.dense.w += 2.0 * l2 * p.gnn.dense.w;
    out.gnn.conv2.w_self += 2.0 * l2 * p.gnn.conv2.w_self;
    out.gnn.conv2.w_neigh += 2.0 * l2 * p.gnn.conv2.w_neigh;
    out.gnn.head.w += 2.0 * l2 * p.gnn.head.w;
  }
  return total;
}

void assemble_fcn_batch(const std::vector<TrainingSample>& dataset,
                        const std::vector<std::size_t>& idx, std::size_t lo,
                        std::size_t hi, MatrixXd& xl, MatrixXd& xr,
                        MatrixXd& t) {
  const auto rows = static_cast<int>(hi - lo);
  xl.resize(rows, FcnParams::kViewInputDim);
  xr.resize(rows, FcnParams::kViewInputDim);
  t.resize(rows, 3);
  for (std::size_t r = lo; r < hi; ++r) {
    const auto& s = dataset[idx[r]];
    xl.row(static_cast<int>(r - lo)) = keypoints_to_fcn_input(s.kp, 0);
    xr.row(static_cast<int>(r - lo)) = keypoints_to_fcn_input(s.kp, 1);
    t.row(static_cast<int>(r - lo)) = s.target.transpose();
  }
}

void assemble_gnn_batch(const std::vector<TrainingSample>& dataset,
                        const std::vector<std::size_t>& idx, std::size_t lo,
                        std::size_t hi, const GraphSpec& graph, MatrixXd& h0,
                        MatrixXd& t) {
  const auto rows = static_cast<int>(hi - lo);
  h0.resize(rows * GraphSpec::kNumNodes, GraphSpec::kFeatureDim);
  t.resize(rows, 3);
  for (std::size_t r = lo; r < hi; ++r) {
    const auto& s = dataset[idx[r]];
    fill_graph_features(graph, s.kp, h0, static_cast<int>(r - lo));
    t.row(static_cast<int>(r - lo)) = s.target.transpose();
  }
}

struct AdamState {
  std::vector<MatrixXd> m, v;
  long step = 0;

  explicit AdamState(PositionEstimatorParams& like) {
    for (const auto& blk : param_blocks(like)) {
      m.push_back(MatrixXd::Zero(blk.block->rows(), blk.block->cols()));
      v.push_back(MatrixXd::Zero(blk.block->rows(), blk.block->cols()));
    }
  }

  void update(PositionEstimatorParams& params, PositionEstimatorParams& grads,
              double lr) {
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    ++step;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
    auto pblocks = param_blocks(params);
    auto gblocks = param_blocks(grads);
    for (std::size_t i = 0; i < pblocks.size(); ++i) {
      const MatrixXd& g = *gblocks[i].block;
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g.cwiseProduct(g);
      const MatrixXd mhat = m[i] / bc1;
      const MatrixXd vhat = v[i] / bc2;
      *pblocks[i].block -=
          lr * (mhat.array() / (vhat.array().sqrt() + kEps)).matrix();
    }
  }
};

PositionEstimatorParams train_impl(PositionEstimatorParams params,
                                   const std::vector<TrainingSample>& dataset,
                                   const TrainingConfig& cfg,
                                   std::vector<double>* loss_history) {
  if (dataset.empty()) throw ValidationError("train: empty dataset");
  if (!(cfg.learning_rate > 0.0))
    throw ValidationError("training.learning_rate: must be > 0");
  if (cfg.epochs < 0) throw ValidationError("training.epochs: must be >= 0");
  if (cfg.batch_size < 1)
    throw ValidationError("training.batch_size: must be >= 1");

  const GraphSpec& graph = canonical_graph();
  const auto nbrs = neighbor_lists(graph);

  PositionEstimatorParams best = params;
  double best_loss = evaluate_loss(params, dataset, cfg.l2_weight);
  if (loss_history) loss_history->push_back(best_loss);

  AdamState adam(params);
  GradientAccumulator acc(params);
  Rng shuffle_rng(mix_seed(cfg.seed, 0x5FFF1E));
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});

  MatrixXd a, b, t;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(idx);
    for (std::size_t lo = 0; lo < idx.size();
         lo += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t hi =
          std::min(idx.size(), lo + static_cast<std::size_t>(cfg.batch_size));
      if (params.kind == ModelKind::kFcn) {
        assemble_fcn_batch(dataset, idx, lo, hi, a, b, t);
        fcn_batch_gradients(params, a, b, t, cfg.l2_weight, acc.grads);
      } else {
        assemble_gnn_batch(dataset, idx, lo, hi, graph, a, t);
        gnn_batch_gradients(params, nbrs, a, t, cfg.l2_weight, acc.grads);
      }
      adam.update(params, acc.grads, cfg.learning_rate);
    }
    const double loss = evaluate_loss(params, dataset, cfg.l2_weight);
    if (loss_history) loss_history->push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best = params;
    }
  }
  best.meta.seed = cfg.seed;
  best.meta.epochs = cfg.epochs;
  best.meta.final_loss = best_loss;
  return best;
}

}  // namespace

double evaluate_loss(const PositionEstimatorParams& params,
                     const std::vector<TrainingSample>& dataset,
                     double l2_weight) {
  if (dataset.empty()) throw ValidationError("evaluate_loss: empty dataset");
  const GraphSpec& graph = canonical_graph();
  const auto nbrs = neighbor_lists(graph);
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});

  constexpr std::size_t kChunk = 512;
  double sq_sum = 0.0;
  MatrixXd a, b, t;
  for (std::size_t lo = 0; lo < dataset.size(); lo += kChunk) {
    const std::size_t hi = std::min(dataset.size(), lo + kChunk);
    if (params.kind == ModelKind::kFcn) {
      assemble_fcn_batch(dataset, idx, lo, hi, a, b, t);
      FcnCache c;
      fcn_batch_forward(params, a, b, c);
      sq_sum += (c.y - t).squaredNorm();
    } else {
      assemble_gnn_batch(dataset, idx, lo, hi, graph, a, t);
      GnnCache c;
      gnn_batch_forward(params, nbrs, a, c);
      sq_sum += (c.y - t).squaredNorm();
    }
  }
  return sq_sum / (3.0 * static_cast<double>(dataset.size())) +
         weight_penalty(params, l2_weight);
}

PositionEstimatorParams train_estimator(
    ModelKind kind, const std::vector<TrainingSample>& dataset,
    const TrainingConfig& cfg, int hidden_units,
    std::vector<double>* loss_history) {
  PositionEstimatorParams init =
      kind == ModelKind::kFcn
          ? make_fcn_params(mix_seed(cfg.seed, 1),
                            hidden_units > 0 ? hidden_units : 16)
          : make_gnn_params(mix_seed(cfg.seed, 1),
                            hidden_units > 0 ? hidden_units : 512);
  return train_impl(std::move(init), dataset, cfg, loss_history);
}

PositionEstimatorParams fine_tune(const PositionEstimatorParams& params,
                                  const std::vector<TrainingSample>& dataset,
                                  const TrainingConfig& cfg,
                                  std::vector<double>* loss_history) {
  // Shape consistency guards against loading parameters of a different
  // architecture instance.
  auto mut = const_cast<PositionEstimatorParams&>(params);
  for (const auto& blk : param_blocks(mut))
    if (blk.block->size() == 0)
      throw ValidationError("fine_tune: parameter block '" + blk.name +
                            "' is empty; architecture mismatch");
  return train_impl(params, dataset, cfg, loss_history);
}

double gradient_check(const PositionEstimatorParams& params,
                      const TrainingSample& sample, double eps,
                      double l2_weight) {
  if (!(eps >= 1e-7 && eps <= 1e-3))
    throw ValidationError("gradient_check: eps must be in [1e-7, 1e-3]");
  PositionEstimatorParams work = params;
  const GraphSpec& graph = canonical_graph();
  const auto nbrs = neighbor_lists(graph);

  MatrixXd xl, xr, h0;
  MatrixXd t(1, 3);
  t.row(0) = sample.target.transpose();
  if (params.kind == ModelKind::kFcn) {
    xl = keypoints_to_fcn_input(sample.kp, 0);
    xr = keypoints_to_fcn_input(sample.kp, 1);
  } else {
    h0.resize(GraphSpec::kNumNodes, GraphSpec::kFeatureDim);
    fill_graph_features(graph, sample.kp, h0, 0);
  }

  auto objective = [&]() {
    if (work.kind == ModelKind::kFcn) {
      FcnCache c;
      fcn_batch_forward(work, xl, xr, c);
      return (c.y - t).squaredNorm() / 3.0 + weight_penalty(work, l2_weight);
    }
    GnnCache c;
    gnn_batch_forward(work, nbrs, h0, c);
    return (c.y - t).squaredNorm() / 3.0 + weight_penalty(work, l2_weight);
  };

  GradientAccumulator acc(work);
  if (work.kind == ModelKind::kFcn)
    fcn_batch_gradients(work, xl, xr, t, l2_weight, acc.grads);
  else
    gnn_batch_gradients(work, nbrs, h0, t, l2_weight, acc.grads);

  double max_rel = 0.0;
  auto wblocks = param_blocks(work);
  auto gblocks = param_blocks(acc.grads);
  for (std::size_t bi = 0; bi < wblocks.size(); ++bi) {
    MatrixXd& blk = *wblocks[bi].block;
    const MatrixXd& g = *gblocks[bi].block;
    for (int cidx = 0; cidx < blk.cols(); ++cidx)
      for (int ridx = 0; ridx < blk.rows(); ++ridx) {
        const double saved = blk(ridx, cidx);
        blk(ridx, cidx) = saved + eps;
        const double lp = objective();
        blk(ridx, cidx) = saved - eps;
        const double lm = objective();
        blk(ridx, cidx) = saved;
        const double fd = (lp - lm) / (2.0 * eps);
        const double ga = g(ridx, cidx);
        const double rel = std::abs(ga - fd) /
                           std::max({std::abs(ga), std::abs(fd), 1e-12});
        max_rel = std::max(max_rel, rel);
      }
  }
  return max_rel;
}

Vec3Series predict_positions(const PositionEstimatorParams& params,
                             const Demonstration& demo) {
  if (!demo.has_keypoints())
    throw ValidationError("predict_positions: demonstration '" + demo.id +
                          "' has no keypoint channel");
  Vec3Series out;
  out.reserve(demo.frames.size());
  for (const auto& fr : demo.frames)
    out.push_back(predict_position(params, *fr.keypoints));
  return out;
}

std::vector<TrainingSample> make_position_dataset(
    const std::vector<Demonstration>& demos) {
  std::vector<TrainingSample> out;
  for (const auto& demo : demos) {
    if (!demo.has_keypoints())
      throw ValidationError("make_position_dataset: demonstration '" +
                            demo.id + "' has no keypoint channel");
    const auto norm = normalize_positions(demo.positions());
    for (std::size_t i = 0; i < demo.frames.size(); ++i) {
      TrainingSample s;
      s.kp = *demo.frames[i].keypoints;
      s.target = norm.p_hat[i];
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace ccfe
