#pragma once

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccfe {

using Vec3 = Eigen::Vector3d;
using Vec3Series = std::vector<Vec3>;
using BoolSeries = std::vector<bool>;

/// Raised when an input fails a precondition (bad config, misaligned series,
/// missing channel). Maps to exit code 1 in the CLI.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when a least-squares design is rank deficient for some axis-regime.
class RankDeficientError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Pixel coordinates of the 8 tracked tool points in each view, normalized
/// to [0, 1] by the image size.
struct StereoKeypoints {
  static constexpr int kPointsPerView = 8;
  std::array<Eigen::Vector2d, kPointsPerView> left;
  std::array<Eigen::Vector2d, kPointsPerView> right;
};

/// One time sample of a demonstration. Optional channels are present either
/// for every frame of a demonstration or for none.
struct DemonstrationFrame {
  double t = 0.0;   // seconds
  Vec3 p = Vec3::Zero();      // measured end-effector position, m
  Vec3 p_des = Vec3::Zero();  // desired end-effector position, m
  Vec3 f_psm = Vec3::Zero();  // joint-torque force estimate, N
  Vec3 f_gt = Vec3::Zero();   // ground-truth force, N
  std::optional<StereoKeypoints> keypoints;
  std::optional<bool> contact_gt;
  std::optional<std::vector<bool>> crowd_labels;
};

struct Demonstration {
  std::string id;
  std::string material_profile;
  double sample_rate_hz = 0.0;
  std::vector<DemonstrationFrame> frames;

  std::size_t size() const { return frames.size(); }
  bool has_keypoints() const {
    return !frames.empty() && frames.front().keypoints.has_value();
  }
  bool has_contact_gt() const {
    return !frames.empty() && frames.front().contact_gt.has_value();
  }
  bool has_crowd_labels() const {
    return !frames.empty() && frames.front().crowd_labels.has_value();
  }

  /// Channel series extraction; throws ValidationError on a missing channel.
  Vec3Series positions() const;
  Vec3Series desired_positions() const;
  Vec3Series psm_forces() const;
  Vec3Series gt_forces() const;
  BoolSeries contact_gt_series() const;

  /// Checks frame ordering, finiteness, and demonstration-wide channel
  /// availability. Throws ValidationError on the first violation.
  void validate() const;
};

/// A maximal run of in-contact frames: [onset, release], inclusive indices.
struct ContactEpisode {
  std::size_t onset = 0;
  std::size_t release = 0;
};

/// Boolean contact series aligned to demonstration frames, with the derived
/// episodes and an optional probability channel.
struct ContactSignal {
  BoolSeries contact;
  std::vector<double> probability;  // empty when the source is hard labels
  std::vector<ContactEpisode> episodes;

  static ContactSignal from_bools(BoolSeries contact);
  static ContactSignal from_probabilities(std::vector<double> probability,
                                          double threshold);

  std::size_t size() const { return contact.size(); }
};

/// Maximal true-runs of a boolean series, in order.
std::vector<ContactEpisode> segment_contacts(const BoolSeries& contact);

/// Inverse of segment_contacts for a known length.
BoolSeries episodes_to_bools(const std::vector<ContactEpisode>& episodes,
                             std::size_t length);

/// Per-demonstration linear force-displacement fit. The Z axis carries
/// separate constants for tension (s_z > 0) and compression (s_z < 0).
struct StiffnessModel {
  double k_x = 0.0;       // N/m
  double k_y = 0.0;       // N/m
  double k_z_plus = 0.0;  // N/m, tension
  double k_z_minus = 0.0; // N/m, compression
  Vec3 c = Vec3::Zero();  // N (Z offset shared by both regimes)
  double fit_residual = 0.0;  // RMS over all fitted frames, N
};

/// Per-axis scale and offset mapping servo deflection to force.
struct PosDiffModel {
  Vec3 d = Vec3::Zero();  // N/m
  Vec3 e = Vec3::Zero();  // N
};

/// Position series divided per axis by its range over the demonstration.
struct NormalizedPositionSeries {
  Vec3Series p_hat;           // unitless
  Vec3 p_min = Vec3::Zero();  // m
  Vec3 p_max = Vec3::Zero();  // m
};

enum class Method {
  kFPsm,        // joint-torque force passthrough
  kCfsKfs,      // ground-truth contact, stiffness fit on ground-truth force
  kCvKfs,       // vision contact, stiffness fit on ground-truth force
  kCvKpsm,      // vision contact, stiffness fit on joint-torque force
  kPosDiff,     // servo-deflection regression
  kFullVision,  // normalized vision positions with a fitted scale
};

std::string method_name(Method m);
Method method_from_name(const std::string& name);

/// Force series produced by one estimation method.
struct ForceSeries {
  Vec3Series f;        // N, or unitless for FullVision before rescaling
  Method method = Method::kFPsm;
  std::string source_tag;  // method name plus contact provenance
};

}  // namespace ccfe
