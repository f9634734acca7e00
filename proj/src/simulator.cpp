#include "ccfe/simulator.hpp"

#include <cmath>

#include "ccfe/rng.hpp"

namespace ccfe {

namespace {

constexpr double kTissuePlaneZ = 0.0;
// Engaged contact persists until the tool rises this far above the plane,
// modelling tissue that sticks to the grasper during retraction. This is
// what produces tension (s_z > 0) frames.
constexpr double kReleaseHeight = 0.003;
constexpr double kMinCameraDepth = 1e-3;

void require_finite(double v, const std::string& field) {
  if (!std::isfinite(v))
    throw ValidationError("non-finite value for " + field);
}

// One axis of the quasi-periodic palpation/retraction motion.
struct SinusoidAxis {
  double bias = 0.0;
  std::array<double, 2> amp{};
  std::array<double, 2> freq_hz{};
  std::array<double, 2> phase{};

  double eval(double t) const {
    double v = bias;
    for (int j = 0; j < 2; ++j)
      v += amp[j] * std::sin(2.0 * M_PI * freq_hz[j] * t + phase[j]);
    return v;
  }
};

struct Trajectory {
  SinusoidAxis x, y, z;
  Vec3 eval(double t) const { return Vec3(x.eval(t), y.eval(t), z.eval(t)); }
};

SinusoidAxis draw_axis(Rng& rng, double bias, double a1, double f1_lo,
                       double f1_hi, double a2, double f2_lo, double f2_hi) {
  SinusoidAxis ax;
  ax.bias = bias;
  ax.amp[0] = a1 * (1.0 + 0.05 * rng.gaussian());
  ax.amp[1] = a2 * (1.0 + 0.05 * rng.gaussian());
  ax.freq_hz[0] = rng.uniform(f1_lo, f1_hi);
  ax.freq_hz[1] = rng.uniform(f2_lo, f2_hi);
  ax.phase[0] = rng.uniform(0.0, 2.0 * M_PI);
  ax.phase[1] = rng.uniform(0.0, 2.0 * M_PI);
  return ax;
}

// Dominant Z frequency of 0.05-0.11 Hz gives 3-7 contact episodes/minute.
Trajectory draw_trajectory(Rng& rng) {
  Trajectory tr;
  tr.x = draw_axis(rng, 0.0, 0.010, 0.07, 0.15, 0.004, 0.20, 0.35);
  tr.y = draw_axis(rng, 0.0, 0.008, 0.06, 0.13, 0.003, 0.18, 0.30);
  tr.z = draw_axis(rng, 0.004, 0.009, 0.05, 0.11, 0.0025, 0.23, 0.37);
  return tr;
}

struct DemoStiffness {
  double k_x, k_y, k_z_plus, k_z_minus;
};

DemoStiffness draw_stiffness(const MaterialProfile& m, Rng& rng) {
  auto jitter = [&](double k) {
    const double v = k * (1.0 + m.stiffness_jitter * rng.gaussian());
    return std::max(v, 0.1 * k);
  };
  return DemoStiffness{jitter(m.k_x), jitter(m.k_y), jitter(m.k_z_plus),
                       jitter(m.k_z_minus)};
}

Vec3 contact_force(const DemoStiffness& k, const Vec3& s) {
  const double kz = s.z() > 0.0 ? k.k_z_plus : k.k_z_minus;
  return Vec3(k.k_x * s.x(), k.k_y * s.y(), kz * s.z());
}

}  // namespace

void MaterialProfile::validate() const {
  for (auto [v, f] : {std::pair{k_x, "material.k_x"},
                      {k_y, "material.k_y"},
                      {k_z_plus, "material.k_z_plus"},
                      {k_z_minus, "material.k_z_minus"}}) {
    require_finite(v, f);
    if (v <= 0.0)
      throw ValidationError(std::string(f) + ": stiffness must be > 0");
  }
  require_finite(stiffness_jitter, "material.stiffness_jitter");
  if (stiffness_jitter < 0.0)
    throw ValidationError("material.stiffness_jitter: must be >= 0");
  require_finite(plastic_relaxation_time, "material.plastic_relaxation_time");
  if (plastic && plastic_relaxation_time <= 0.0)
    throw ValidationError(
        "material.plastic_relaxation_time: must be > 0 in plastic mode");
}

MaterialProfile MaterialProfile::silicone() {
  MaterialProfile m;
  m.name = "silicone";
  m.k_x = 168.0;
  m.k_y = 182.0;
  m.k_z_plus = 108.0;
  m.k_z_minus = 332.0;
  m.stiffness_jitter = 0.08;
  m.plastic = false;
  return m;
}

MaterialProfile MaterialProfile::realistic() {
  MaterialProfile m;
  m.name = "realistic";
  m.k_x = 126.0;
  m.k_y = 131.0;
  m.k_z_plus = 96.0;
  m.k_z_minus = 245.0;
  m.stiffness_jitter = 0.10;
  m.plastic = true;
  m.plastic_relaxation_time = 2.0;
  return m;
}

void NoiseProfile::validate() const {
  for (int i = 0; i < 3; ++i) require_finite(f_psm_bias[i], "noise.f_psm_bias");
  require_finite(f_psm_std, "noise.f_psm_std");
  require_finite(f_psm_lowpass_hz, "noise.f_psm_lowpass_hz");
  require_finite(encoder_std, "noise.encoder_std");
  require_finite(pixel_std, "noise.pixel_std");
  require_finite(servo_compliance, "noise.servo_compliance");
  if (f_psm_std < 0.0) throw ValidationError("noise.f_psm_std: must be >= 0");
  if (encoder_std < 0.0)
    throw ValidationError("noise.encoder_std: must be >= 0");
  if (pixel_std < 0.0) throw ValidationError("noise.pixel_std: must be >= 0");
  if (servo_compliance < 0.0)
    throw ValidationError("noise.servo_compliance: must be >= 0");
}

NoiseProfile NoiseProfile::zero() {
  NoiseProfile n;
  n.f_psm_bias = Vec3::Zero();
  n.f_psm_std = 0.0;
  n.f_psm_lowpass_hz = 0.0;
  n.encoder_std = 0.0;
  n.pixel_std = 0.0;
  n.servo_compliance = 2e-3;
  return n;
}

NoiseProfile NoiseProfile::standard() {
  NoiseProfile n;
  n.f_psm_bias = Vec3(0.06, -0.05, 0.08);
  n.f_psm_std = 0.17;
  n.f_psm_lowpass_hz = 0.35;
  n.encoder_std = 1e-4;
  n.pixel_std = 0.002;
  n.servo_compliance = 5e-4;
  return n;
}

void CameraRig::validate() const {
  require_finite(focal_px, "camera.focal_px");
  require_finite(baseline_m, "camera.baseline_m");
  require_finite(image_width, "camera.image_width");
  require_finite(image_height, "camera.image_height");
  for (int i = 0; i < 3; ++i) {
    require_finite(position[i], "camera.position");
    require_finite(target[i], "camera.target");
  }
  if (focal_px <= 0.0) throw ValidationError("camera.focal_px: must be > 0");
  if (baseline_m < 0.0)
    throw ValidationError("camera.baseline_m: must be >= 0");
  if (image_width <= 0.0 || image_height <= 0.0)
    throw ValidationError("camera.image_size: must be > 0");
  if ((target - position).norm() < 1e-9)
    throw ValidationError("camera.target: coincides with camera position");
}

Eigen::Matrix3d CameraRig::rotation() const {
  const Vec3 forward = (target - position).normalized();
  Vec3 right = forward.cross(Vec3(0.0, 0.0, 1.0));
  if (right.norm() < 1e-9) right = Vec3(1.0, 0.0, 0.0);  // looking straight down
  right.normalize();
  const Vec3 down = forward.cross(right);
  Eigen::Matrix3d r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  return r;
}

CameraRig CameraRig::standard() { return CameraRig{}; }

CameraRig CameraRig::shifted() {
  CameraRig rig;
  rig.position = Vec3(0.16, -0.22, 0.06);
  rig.target = Vec3(0.0, 0.0, -0.002);
  return rig;
}

void WorkerModel::validate() const {
  if (n_workers < 1) throw ValidationError("workers.n_workers: must be >= 1");
  require_finite(flip_rate, "workers.flip_rate");
  if (flip_rate < 0.0 || flip_rate > 0.5)
    throw ValidationError("workers.flip_rate: must be in [0, 0.5]");
  if (lag_frames < 0)
    throw ValidationError("workers.lag_frames: must be >= 0");
}

ToolModel ToolModel::standard() {
  ToolModel tool;
  tool.offsets = {Vec3(0.0, 0.0, 0.015),      Vec3(0.0, 0.0, 0.004),
                  Vec3(-0.003, 0.0, 0.0),     Vec3(-0.004, 0.0, -0.009),
                  Vec3(0.003, 0.0, 0.0),      Vec3(0.004, 0.0, -0.009),
                  Vec3(-0.0035, 0.0, -0.0045), Vec3(0.0035, 0.0, -0.0045)};
  tool.names = {"shaft",         "wrist",         "jaw_left_base",
                "jaw_left_tip",  "jaw_right_base", "jaw_right_tip",
                "jaw_left_mid",  "jaw_right_mid"};
  return tool;
}

StereoKeypoints project_keypoints(const Vec3& tool_position,
                                  const ToolModel& tool, const CameraRig& rig,
                                  const NoiseProfile& noise,
                                  std::uint64_t seed) {
  rig.validate();
  const Eigen::Matrix3d rot = rig.rotation();
  const Vec3 right_center =
      rig.position + rot.row(0).transpose() * rig.baseline_m;
  const double cx = 0.5 * rig.image_width;
  const double cy = 0.5 * rig.image_height;
  Rng rng(seed);

  auto project_view = [&](const Vec3& cam_center, const std::string& view,
                          int idx) {
    const Vec3 pc = rot * (tool_position + tool.offsets[idx] - cam_center);
    if (pc.z() < kMinCameraDepth)
      throw ValidationError("keypoint '" + tool.names[idx] +
                            "' is behind the " + view + " camera");
    const double u = (rig.focal_px * pc.x() / pc.z() + cx) / rig.image_width;
    const double v = (rig.focal_px * pc.y() / pc.z() + cy) / rig.image_height;
    return Eigen::Vector2d(u, v);
  };

  StereoKeypoints kp;
  for (int i = 0; i < ToolModel::kNumPoints; ++i) {
    kp.left[i] = project_view(rig.position, "left", i);
    kp.right[i] = project_view(right_center, "right", i);
    for (auto* pt : {&kp.left[i], &kp.right[i]}) {
      (*pt)[0] += noise.pixel_std * rng.gaussian();
      (*pt)[1] += noise.pixel_std * rng.gaussian();
      (*pt)[0] = std::clamp((*pt)[0], 0.0, 1.0);
      (*pt)[1] = std::clamp((*pt)[1], 0.0, 1.0);
    }
  }
  return kp;
}

Demonstration simulate_demonstration(const MaterialProfile& material,
                                     const NoiseProfile& noise,
                                     const CameraRig& rig, double duration_s,
                                     std::uint64_t seed,
                                     double sample_rate_hz) {
  material.validate();
  noise.validate();
  rig.validate();
  require_finite(duration_s, "duration_s");
  if (duration_s <= 0.0) throw ValidationError("duration_s: must be > 0");
  if (!(sample_rate_hz > 0.0))
    throw ValidationError("sample_rate_hz: must be > 0");

  Rng traj_rng(mix_seed(seed, 0));
  Rng stiff_rng(mix_seed(seed, 1));
  Rng force_rng(mix_seed(seed, 2));
  Rng enc_rng(mix_seed(seed, 3));
  const std::uint64_t kp_seed = mix_seed(seed, 4);

  const Trajectory traj = draw_trajectory(traj_rng);
  const DemoStiffness k = draw_stiffness(material, stiff_rng);
  const ToolModel tool = ToolModel::standard();

  const double dt = 1.0 / sample_rate_hz;
  const auto n_frames = static_cast<std::size_t>(
      std::max(1.0, std::floor(duration_s * sample_rate_hz)));

  Demonstration demo;
  demo.id = material.name + "-" + std::to_string(seed);
  demo.material_profile = material.name;
  demo.sample_rate_hz = sample_rate_hz;
  demo.frames.reserve(n_frames);

  const double lp_alpha =
      noise.f_psm_lowpass_hz > 0.0
          ? 1.0 - std::exp(-2.0 * M_PI * noise.f_psm_lowpass_hz * dt)
          : 1.0;

  bool engaged = false;
  Vec3 onset_pos = Vec3::Zero();
  double onset_time = 0.0;
  Vec3 f_filtered = Vec3::Zero();

  for (std::size_t i = 0; i < n_frames; ++i) {
    const double t = static_cast<double>(i) * dt;
    const Vec3 p_true = traj.eval(t);

    if (!engaged && p_true.z() < kTissuePlaneZ) {
      engaged = true;
      onset_pos = p_true;
      onset_time = t;
    } else if (engaged && p_true.z() > kTissuePlaneZ + kReleaseHeight) {
      engaged = false;
    }

    Vec3 f_gt = Vec3::Zero();
    if (engaged) {
      f_gt = contact_force(k, p_true - onset_pos);
      if (material.plastic)
        f_gt *= std::exp(-(t - onset_time) / material.plastic_relaxation_time);
    }

    f_filtered = i == 0 ? f_gt : Vec3(f_filtered + lp_alpha * (f_gt - f_filtered));

    DemonstrationFrame fr;
    fr.t = t;
    fr.f_gt = f_gt;
    fr.contact_gt = engaged;
    const Vec3 enc_noise(noise.encoder_std * enc_rng.gaussian(),
                         noise.encoder_std * enc_rng.gaussian(),
                         noise.encoder_std * enc_rng.gaussian());
    fr.p = p_true + enc_noise;
    // The servo deflects by compliance * load; commanded position is clean.
    fr.p_des = p_true + noise.servo_compliance * f_gt;
    fr.f_psm = f_filtered + noise.f_psm_bias +
               Vec3(noise.f_psm_std * force_rng.gaussian(),
                    noise.f_psm_std * force_rng.gaussian(),
                    noise.f_psm_std * force_rng.gaussian());
    fr.keypoints =
        project_keypoints(p_true, tool, rig, noise, mix_seed(kp_seed, i));
    demo.frames.push_back(std::move(fr));
  }
  return demo;
}

std::vector<std::vector<bool>> simulate_worker_labels(
    const BoolSeries& contact_gt, const WorkerModel& workers,
    std::uint64_t seed) {
  workers.validate();
  if (contact_gt.empty())
    throw ValidationError("simulate_worker_labels: empty contact series");

  const std::size_t n = contact_gt.size();
  std::vector<std::vector<bool>> per_frame(
      n, std::vector<bool>(static_cast<std::size_t>(workers.n_workers)));
  for (int w = 0; w < workers.n_workers; ++w) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(w)));
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t src =
          i >= static_cast<std::size_t>(workers.lag_frames)
              ? i - static_cast<std::size_t>(workers.lag_frames)
              : 0;
      bool label = contact_gt[src];
      if (rng.bernoulli(workers.flip_rate)) label = !label;
      per_frame[i][static_cast<std::size_t>(w)] = label;
    }
  }
  return per_frame;
}

Demonstration simulate_with_crowd(const MaterialProfile& material,
                                  const NoiseProfile& noise,
                                  const CameraRig& rig,
                                  const WorkerModel& workers,
                                  double duration_s, std::uint64_t seed,
                                  double sample_rate_hz) {
  Demonstration demo = simulate_demonstration(material, noise, rig, duration_s,
                                              seed, sample_rate_hz);
  const auto labels = simulate_worker_labels(demo.contact_gt_series(), workers,
                                             mix_seed(seed, 1000));
  for (std::size_t i = 0; i < demo.frames.size(); ++i)
    demo.frames[i].crowd_labels = labels[i];
  return demo;
}

}  // namespace ccfe
