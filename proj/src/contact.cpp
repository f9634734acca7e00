#include "ccfe/contact.hpp"

#include <algorithm>
#include <cmath>

namespace ccfe {

ContactSignal contact_from_force(const Vec3Series& f, double threshold_n) {
  if (!(threshold_n > 0.0))
    throw ValidationError("contact_from_force: threshold must be > 0");
  BoolSeries contact;
  contact.reserve(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f[i].allFinite())
      throw ValidationError("contact_from_force: non-finite force at frame " +
                            std::to_string(i));
    contact.push_back(f[i].norm() > threshold_n);
  }
  return ContactSignal::from_bools(std::move(contact));
}

ContactSignal aggregate_crowd_labels(
    const std::vector<std::vector<bool>>& labels, double vote_threshold) {
  if (!(vote_threshold > 0.0 && vote_threshold < 1.0))
    throw ValidationError(
        "aggregate_crowd_labels: vote threshold must be in (0, 1)");
  std::vector<double> probability;
  probability.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty())
      throw ValidationError(
          "aggregate_crowd_labels: no worker labels at frame " +
          std::to_string(i));
    double sum = 0.0;
    for (bool b : labels[i]) sum += b ? 1.0 : 0.0;
    probability.push_back(sum / static_cast<double>(labels[i].size()));
  }
  return ContactSignal::from_probabilities(std::move(probability),
                                           vote_threshold);
}

ContactSignal debounce(const ContactSignal& signal, int min_frames) {
  if (min_frames < 1)
    throw ValidationError("debounce: min_frames must be >= 1");
  const auto min_len = static_cast<std::size_t>(min_frames);
  BoolSeries out = signal.contact;

  // Pass 1: drop short true-runs.
  for (const auto& ep : segment_contacts(out))
    if (ep.release - ep.onset + 1 < min_len)
      for (std::size_t i = ep.onset; i <= ep.release; ++i) out[i] = false;

  // Pass 2: merge short interior false-runs. Runs touching either boundary
  // are not between two contacts and stay as they are.
  const auto episodes = segment_contacts(out);
  for (std::size_t e = 1; e < episodes.size(); ++e) {
    const std::size_t gap = episodes[e].onset - episodes[e - 1].release - 1;
    if (gap < min_len)
      for (std::size_t i = episodes[e - 1].release + 1; i < episodes[e].onset;
           ++i)
        out[i] = true;
  }
  return ContactSignal::from_bools(std::move(out));
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<std::string> contact_feature_names() {
  return {"left_mean_v", "left_mean_u",  "mean_disparity",
          "left_spread", "vertical_velocity"};
}

std::vector<std::vector<double>> contact_features(const Demonstration& demo) {
  if (!demo.has_keypoints())
    throw ValidationError("contact features require the keypoint channel");
  const std::size_t n = demo.frames.size();
  std::vector<std::vector<double>> feats(n);
  double prev_mean_v = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const StereoKeypoints& kp = *demo.frames[i].keypoints;
    double mean_u = 0.0, mean_v = 0.0, mean_disp = 0.0;
    for (int j = 0; j < StereoKeypoints::kPointsPerView; ++j) {
      mean_u += kp.left[j].x();
      mean_v += kp.left[j].y();
      mean_disp += kp.left[j].x() - kp.right[j].x();
    }
    mean_u /= StereoKeypoints::kPointsPerView;
    mean_v /= StereoKeypoints::kPointsPerView;
    mean_disp /= StereoKeypoints::kPointsPerView;
    double spread = 0.0;
    for (int j = 0; j < StereoKeypoints::kPointsPerView; ++j)
      spread += (kp.left[j] - Eigen::Vector2d(mean_u, mean_v)).squaredNorm();
    spread = std::sqrt(spread / StereoKeypoints::kPointsPerView);
    const double vel =
        i == 0 ? 0.0 : (mean_v - prev_mean_v) * demo.sample_rate_hz;
    prev_mean_v = mean_v;
    feats[i] = {mean_v, mean_u, mean_disp, spread, vel};
  }
  return feats;
}

std::vector<ContactExample> make_contact_examples(
    const Demonstration& demo, const ContactSignal& labels) {
  if (labels.size() != demo.frames.size())
    throw ValidationError("make_contact_examples: label/frame misalignment");
  const auto feats = contact_features(demo);
  std::vector<ContactExample> out(feats.size());
  for (std::size_t i = 0; i < feats.size(); ++i) {
    out[i].features = feats[i];
    out[i].target = labels.probability.empty()
                        ? (labels.contact[i] ? 1.0 : 0.0)
                        : labels.probability[i];
  }
  return out;
}

ContactClassifierParams train_contact_classifier(
    const std::vector<ContactExample>& examples,
    const ClassifierTrainingConfig& cfg, std::uint64_t /*seed*/,
    const ContactClassifierParams* init, std::vector<double>* loss_history) {
  if (examples.empty())
    throw ValidationError("train_contact_classifier: empty training set");
  const std::size_t dim = examples.front().features.size();
  bool has_pos = false, has_neg = false;
  for (const auto& ex : examples) {
    if (ex.features.size() != dim)
      throw ValidationError(
          "train_contact_classifier: inconsistent feature dimension");
    if (ex.target > 0.5) has_pos = true;
    if (ex.target < 0.5) has_neg = true;
  }
  if (!has_pos || !has_neg)
    throw ValidationError(
        "train_contact_classifier: training labels contain a single class");
  if (cfg.epochs == 0 && init) return *init;

  // Standardize features for conditioning; the affine map folds back into
  // the returned raw-feature weights.
  std::vector<double> mean(dim, 0.0), stddev(dim, 0.0);
  for (const auto& ex : examples)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += ex.features[d];
  for (auto& m : mean) m /= static_cast<double>(examples.size());
  for (const auto& ex : examples)
    for (std::size_t d = 0; d < dim; ++d) {
      const double c = ex.features[d] - mean[d];
      stddev[d] += c * c;
    }
  for (auto& s : stddev) {
    s = std::sqrt(s / static_cast<double>(examples.size()));
    if (s < 1e-12) s = 1.0;  // constant feature, leave unscaled
  }

  // Weights in standardized feature space.
  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  if (init) {
    if (init->weights.size() != dim)
      throw ValidationError(
          "train_contact_classifier: init weight dimension mismatch");
    for (std::size_t d = 0; d < dim; ++d) w[d] = init->weights[d] * stddev[d];
    b = init->bias;
    for (std::size_t d = 0; d < dim; ++d) b += init->weights[d] * mean[d];
  }

  const double inv_n = 1.0 / static_cast<double>(examples.size());
  double loss = 0.0;
  std::vector<double> gw(dim);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    loss = 0.0;
    for (const auto& ex : examples) {
      double z = b;
      for (std::size_t d = 0; d < dim; ++d)
        z += w[d] * (ex.features[d] - mean[d]) / stddev[d];
      const double p = sigmoid(z);
      const double err = p - ex.target;
      for (std::size_t d = 0; d < dim; ++d)
        gw[d] += err * (ex.features[d] - mean[d]) / stddev[d];
      gb += err;
      const double eps = 1e-12;
      loss -= ex.target * std::log(p + eps) +
              (1.0 - ex.target) * std::log(1.0 - p + eps);
    }
    loss *= inv_n;
    for (std::size_t d = 0; d < dim; ++d) loss += cfg.l2_weight * w[d] * w[d];
    if (loss_history) loss_history->push_back(loss);
    for (std::size_t d = 0; d < dim; ++d)
      w[d] -= cfg.learning_rate * (gw[d] * inv_n + 2.0 * cfg.l2_weight * w[d]);
    b -= cfg.learning_rate * gb * inv_n;
  }

  ContactClassifierParams params;
  params.feature_spec = contact_feature_names();
  params.feature_spec.resize(dim, "feature");
  params.weights.resize(dim);
  params.bias = b;
  for (std::size_t d = 0; d < dim; ++d) {
    params.weights[d] = w[d] / stddev[d];
    params.bias -= w[d] * mean[d] / stddev[d];
  }
  params.final_loss = loss;
  return params;
}

ContactSignal predict_contact(const ContactClassifierParams& params,
                              const Demonstration& demo) {
  const auto feats = contact_features(demo);
  if (!feats.empty() && feats.front().size() != params.weights.size())
    throw ValidationError("predict_contact: feature dimension mismatch");
  std::vector<double> probability;
  probability.reserve(feats.size());
  for (const auto& x : feats) {
    double z = params.bias;
    for (std::size_t d = 0; d < x.size(); ++d) z += params.weights[d] * x[d];
    probability.push_back(sigmoid(z));
  }
  return ContactSignal::from_probabilities(std::move(probability), 0.5);
}

}  // namespace ccfe
