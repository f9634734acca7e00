#include "ccfe/estimators.hpp"

#include <cmath>

#include "ccfe/stiffness.hpp"

namespace ccfe {

ForceSeries estimate_force_contact_conditional(const Demonstration& demo,
                                               const ContactSignal& contact,
                                               const StiffnessModel& model) {
  const Vec3Series s = displacement_from_onset(demo, contact);
  ForceSeries out;
  out.f.assign(demo.frames.size(), Vec3::Zero());
  for (const auto& ep : contact.episodes) {
    for (std::size_t i = ep.onset; i <= ep.release; ++i) {
      const double kz =
          s[i].z() > 0.0 ? model.k_z_plus : model.k_z_minus;
      out.f[i] =
          Vec3(model.k_x * s[i].x(), model.k_y * s[i].y(), kz * s[i].z());
    }
  }
  return out;
}

ForceSeries estimate_force_posdiff(const Demonstration& demo,
                                   const PosDiffModel& model) {
  ForceSeries out;
  out.method = Method::kPosDiff;
  out.f.reserve(demo.frames.size());
  for (const auto& fr : demo.frames)
    out.f.push_back(model.d.cwiseProduct(fr.p_des - fr.p) + model.e);
  return out;
}

ForceSeries estimate_force_fullvision(const NormalizedPositionSeries& p_hat,
                                      const ContactSignal& contact,
                                      const Vec3& k_scale,
                                      FullVisionMode mode) {
  const std::size_t n = p_hat.p_hat.size();
  if (contact.size() != n)
    throw ValidationError("estimate_force_fullvision: misaligned inputs");
  ForceSeries out;
  out.method = Method::kFullVision;
  out.f.assign(n, Vec3::Zero());
  for (const auto& ep : contact.episodes) {
    for (std::size_t i = ep.onset; i <= ep.release; ++i) {
      if (mode == FullVisionMode::kOnsetDisplacement) {
        out.f[i] = k_scale.cwiseProduct(p_hat.p_hat[i] -
                                        p_hat.p_hat[ep.onset]);
      } else {
        if (i + 1 < n)
          out.f[i] = k_scale.cwiseProduct(p_hat.p_hat[i + 1] - p_hat.p_hat[i]);
        else
          out.f[i] = i > 0 ? out.f[i - 1] : Vec3::Zero();  // hold last value
      }
    }
  }
  return out;
}

ForceSeries smooth_force(const ForceSeries& f, int window_frames) {
  if (window_frames < 1 || window_frames % 2 == 0)
    throw ValidationError("smooth_force: window must be odd and >= 1");
  const auto n = static_cast<std::ptrdiff_t>(f.f.size());
  const std::ptrdiff_t half = window_frames / 2;
  ForceSeries out = f;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min(n - 1, i + half);
    Vec3 acc = Vec3::Zero();
    for (std::ptrdiff_t j = lo; j <= hi; ++j) acc += f.f[j];
    out.f[i] = acc / static_cast<double>(hi - lo + 1);
  }
  return out;
}

namespace {

const ContactSignal& require_contact(const std::optional<ContactSignal>& c,
                                     const std::string& method,
                                     const std::string& what) {
  if (!c)
    throw ValidationError(method + " requires a " + what + " contact signal");
  return *c;
}

template <typename T>
const T& require_artifact(const std::optional<T>& a, const std::string& method,
                          const std::string& what) {
  if (!a) throw ValidationError(method + " requires " + what);
  return *a;
}

}  // namespace

ForceSeries run_method(Method method, const Demonstration& demo,
                       const MethodArtifacts& artifacts) {
  ForceSeries out;
  switch (method) {
    case Method::kFPsm: {
      out.f = demo.psm_forces();
      out.source_tag = "F_PSM";
      break;
    }
    case Method::kCfsKfs: {
      const auto& contact =
          require_contact(artifacts.contact_gt, "C_FS-K_FS", "ground-truth");
      const auto& model = require_artifact(
          artifacts.stiffness_gt, "C_FS-K_FS",
          "a stiffness model fitted from the ground-truth force");
      out = estimate_force_contact_conditional(demo, contact, model);
      out.source_tag = "C_FS-K_FS";
      break;
    }
    case Method::kCvKfs: {
      const auto& contact =
          require_contact(artifacts.contact_vision, "C_V-K_FS", "vision");
      const auto& model = require_artifact(
          artifacts.stiffness_gt, "C_V-K_FS",
          "a stiffness model fitted from the ground-truth force");
      out = estimate_force_contact_conditional(demo, contact, model);
      out.source_tag = "C_V(" + artifacts.vision_contact_source + ")-K_FS";
      break;
    }
    case Method::kCvKpsm: {
      const auto& contact =
          require_contact(artifacts.contact_vision, "C_V-K_PSM", "vision");
      const auto& model = require_artifact(
          artifacts.stiffness_psm, "C_V-K_PSM",
          "a stiffness model fitted from F_PSM");
      out = estimate_force_contact_conditional(demo, contact, model);
      out.source_tag = "C_V(" + artifacts.vision_contact_source + ")-K_PSM";
      break;
    }
    case Method::kPosDiff: {
      const auto& model = require_artifact(artifacts.posdiff, "PosDiff",
                                           "a fitted deflection model");
      out = estimate_force_posdiff(demo, model);
      out.source_tag = "PosDiff";
      break;
    }
    case Method::kFullVision: {
      const auto& contact =
          require_contact(artifacts.contact_vision, "FullVision", "vision");
      const auto& p_hat = require_artifact(artifacts.p_hat, "FullVision",
                                           "a normalized position series");
      const auto& scale = require_artifact(artifacts.fullvision_scale,
                                           "FullVision", "a fitted scale");
      out = estimate_force_fullvision(p_hat, contact, scale,
                                      artifacts.fullvision_mode);
      out.source_tag = "FullVision";
      break;
    }
  }
  out.method = method;
  if (out.source_tag.empty()) out.source_tag = method_name(method);
  return out;
}

}  // namespace ccfe
