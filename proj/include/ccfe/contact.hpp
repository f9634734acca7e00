#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccfe/types.hpp"

namespace ccfe {

/// Thresholds the force magnitude: contact[t] = (||f[t]|| > threshold_n),
/// strictly above. Rejects non-finite entries.
ContactSignal contact_from_force(const Vec3Series& f, double threshold_n);

/// Per-frame mean of worker booleans as the probability channel; contact is
/// probability strictly above vote_threshold.
ContactSignal aggregate_crowd_labels(
    const std::vector<std::vector<bool>>& labels, double vote_threshold);

/// Removes true-runs shorter than min_frames, then merges interior
/// false-runs shorter than min_frames. Idempotent.
ContactSignal debounce(const ContactSignal& signal, int min_frames);

/// Logistic contact classifier over engineered per-frame features — the
/// robot-state-free stand-in for an image-based detector.
struct ContactClassifierParams {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<std::string> feature_spec;
  double final_loss = 0.0;
};

/// The per-frame feature vector computed from the stereo keypoint channel:
/// apparent tool height, spread, disparity, and vertical velocity.
std::vector<std::string> contact_feature_names();
std::vector<std::vector<double>> contact_features(const Demonstration& demo);

struct ClassifierTrainingConfig {
  double learning_rate = 0.5;
  double l2_weight = 1e-4;
  int epochs = 150;
};

/// One labeled training frame.
struct ContactExample {
  std::vector<double> features;
  double target = 0.0;  // soft label in [0, 1]
};

std::vector<ContactExample> make_contact_examples(const Demonstration& demo,
                                                  const ContactSignal& labels);

/// Full-batch gradient descent on cross-entropy with L2 on the weights.
/// Weights start at zero, so the fit is deterministic; `seed` is kept for
/// interface stability. Throws if all targets are on one side of 0.5.
/// Pass `init` to continue training from earlier parameters (fine-tuning);
/// `loss_history`, when given, receives the loss before each update.
ContactClassifierParams train_contact_classifier(
    const std::vector<ContactExample>& examples,
    const ClassifierTrainingConfig& cfg, std::uint64_t seed,
    const ContactClassifierParams* init = nullptr,
    std::vector<double>* loss_history = nullptr);

/// probability = sigmoid(w.x + b); contact = probability > 0.5.
ContactSignal predict_contact(const ContactClassifierParams& params,
                              const Demonstration& demo);

double sigmoid(double z);

}  // namespace ccfe
