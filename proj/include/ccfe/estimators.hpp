#pragma once

#include <optional>
#include <string>

#include "ccfe/types.hpp"

namespace ccfe {

/// F[t] = k (.) s[t] while in contact (Z constant picked by sign of s_z),
/// zero otherwise. The fitted offset c is intentionally dropped.
ForceSeries estimate_force_contact_conditional(const Demonstration& demo,
                                               const ContactSignal& contact,
                                               const StiffnessModel& model);

/// F[t] = d (.) (p_des[t] - p[t]) + e at every frame.
ForceSeries estimate_force_posdiff(const Demonstration& demo,
                                   const PosDiffModel& model);

enum class FullVisionMode {
  kOnsetDisplacement,      // p_hat replaces p in the contact-conditional rule
  kConsecutiveDifference,  // scaled frame-to-frame difference of p_hat
};

/// Vision-only force estimate from normalized positions and a scale. Output
/// is unitless until the scale comes from fit_fullvision_scale. In
/// consecutive-difference mode the final frame holds the previous value.
ForceSeries estimate_force_fullvision(const NormalizedPositionSeries& p_hat,
                                      const ContactSignal& contact,
                                      const Vec3& k_scale,
                                      FullVisionMode mode);

/// Centered moving average per axis with an odd window; edge windows shrink.
ForceSeries smooth_force(const ForceSeries& f, int window_frames);

/// Everything a method dispatch may need. Missing prerequisites raise a
/// ValidationError naming the method and the gap.
struct MethodArtifacts {
  std::optional<ContactSignal> contact_gt;      // ground-truth contact
  std::optional<ContactSignal> contact_vision;  // crowd / classifier contact
  std::string vision_contact_source;            // "crowd", "classifier", ...
  std::optional<StiffnessModel> stiffness_gt;   // fit against f_gt
  std::optional<StiffnessModel> stiffness_psm;  // fit against f_psm
  std::optional<PosDiffModel> posdiff;
  std::optional<NormalizedPositionSeries> p_hat;
  std::optional<Vec3> fullvision_scale;
  FullVisionMode fullvision_mode = FullVisionMode::kOnsetDisplacement;
};

ForceSeries run_method(Method method, const Demonstration& demo,
                       const MethodArtifacts& artifacts);

}  // namespace ccfe
