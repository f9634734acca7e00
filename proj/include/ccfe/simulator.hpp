#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ccfe/types.hpp"

namespace ccfe {

/// Per-axis linear stiffness of the simulated tissue, with the Z axis split
/// into tension and compression constants.
struct MaterialProfile {
  std::string name = "silicone";
  double k_x = 168.0;        // N/m
  double k_y = 182.0;        // N/m
  double k_z_plus = 108.0;   // N/m, tension
  double k_z_minus = 332.0;  // N/m, compression
  double stiffness_jitter = 0.0;  // relative std-dev per demonstration
  bool plastic = false;
  double plastic_relaxation_time = 2.0;  // s

  void validate() const;

  static MaterialProfile silicone();
  static MaterialProfile realistic();  // soft profile with plastic mode on
};

/// Sensor and servo imperfections applied on top of the ideal trajectory.
struct NoiseProfile {
  Vec3 f_psm_bias = Vec3::Zero();  // N
  double f_psm_std = 0.0;          // N, white noise per axis
  double f_psm_lowpass_hz = 0.0;   // first-order lag on f_gt; <= 0 disables
  double encoder_std = 0.0;        // m, position measurement noise
  double pixel_std = 0.0;          // normalized pixels, keypoint noise
  double servo_compliance = 2e-3;  // m/N, deflection of p_des - p under load

  void validate() const;

  static NoiseProfile zero();
  /// Calibrated so the joint-torque force estimate lands near 8% norm NRMSE
  /// on the silicone profile.
  static NoiseProfile standard();
};

/// Rectified stereo rig observing the workspace. The left camera sits at
/// `position` looking at `target`; the right camera is offset by `baseline`
/// along the image x-axis.
struct CameraRig {
  double focal_px = 1100.0;
  double baseline_m = 0.03;
  double image_width = 1280.0;
  double image_height = 720.0;
  Vec3 position = Vec3(0.0, -0.28, 0.01);
  Vec3 target = Vec3::Zero();

  void validate() const;

  /// Camera frame axes (rows: right, down, forward) from the look-at pose.
  Eigen::Matrix3d rotation() const;

  static CameraRig standard();
  /// Shifted viewpoint used by the transfer experiments.
  static CameraRig shifted();
};

/// Crowd of annotators producing noisy contact labels.
struct WorkerModel {
  int n_workers = 5;
  double flip_rate = 0.0;  // per-frame label flip probability
  int lag_frames = 0;      // shared reaction delay

  void validate() const;
};

/// Fixed tool geometry: named 3D offsets of the 8 tracked points from the
/// end-effector reference point.
struct ToolModel {
  static constexpr int kNumPoints = 8;
  std::array<Vec3, kNumPoints> offsets;
  std::array<std::string, kNumPoints> names;

  static ToolModel standard();
};

/// Projects the tool points into both views, normalizes to [0, 1], and adds
/// Gaussian pixel noise. Throws ValidationError naming the keypoint if a
/// point falls behind either camera.
StereoKeypoints project_keypoints(const Vec3& tool_position,
                                  const ToolModel& tool, const CameraRig& rig,
                                  const NoiseProfile& noise,
                                  std::uint64_t seed);

/// Generates one demonstration: a seeded sum-of-sinusoids trajectory dips
/// through a horizontal tissue plane at z = 0. Contact engages at
/// penetration and releases once the tool rises past a small grasp height,
/// so both Z regimes are exercised. While engaged, f_gt = k (.) s with the
/// Z constant picked by sign(s_z); in plastic mode the force additionally
/// relaxes toward zero over the episode while contact stays true.
Demonstration simulate_demonstration(const MaterialProfile& material,
                                     const NoiseProfile& noise,
                                     const CameraRig& rig, double duration_s,
                                     std::uint64_t seed,
                                     double sample_rate_hz = 50.0);

/// Per-frame labels from each simulated worker: the ground-truth contact
/// delayed by lag_frames, flipped independently with flip_rate.
std::vector<std::vector<bool>> simulate_worker_labels(
    const BoolSeries& contact_gt, const WorkerModel& workers,
    std::uint64_t seed);

/// simulate_demonstration plus attached crowd labels.
Demonstration simulate_with_crowd(const MaterialProfile& material,
                                  const NoiseProfile& noise,
                                  const CameraRig& rig,
                                  const WorkerModel& workers,
                                  double duration_s, std::uint64_t seed,
                                  double sample_rate_hz = 50.0);

}  // namespace ccfe
