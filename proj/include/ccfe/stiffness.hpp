#pragma once

#include <optional>

#include "ccfe/types.hpp"

namespace ccfe {

enum class ForceSource { kGroundTruth, kPsm };

/// Displacement from the onset of the contact episode containing each frame:
/// s[t] = p[t] - p[onset]; zero outside contact.
Vec3Series displacement_from_onset(const Demonstration& demo,
                                   const ContactSignal& contact);

/// Optional per-regime fallback used when a regime has too few frames.
struct StiffnessPrior {
  double k_x = 0.0;
  double k_y = 0.0;
  double k_z_plus = 0.0;
  double k_z_minus = 0.0;
};

/// Fits (k, c) per axis-regime by closed-form least squares of force against
/// onset displacement over the contact frames. X and Y use every contact
/// frame; Z frames split by sign(s_z) into tension (s_z > 0) and compression
/// (s_z < 0). Regimes with fewer than min_frames_per_regime samples fall
/// back to the prior when provided, otherwise the fit fails naming the
/// regime. A regime whose displacements are all identical raises
/// RankDeficientError.
StiffnessModel fit_stiffness(
    const Demonstration& demo, const ContactSignal& contact,
    ForceSource force_source,
    const std::optional<StiffnessPrior>& prior = std::nullopt,
    int min_frames_per_regime = 5);

/// Per-axis least squares of f_psm against the servo deflection
/// (p_des - p) over all frames, with intercept.
PosDiffModel fit_posdiff(const Demonstration& demo);

/// Per-axis no-intercept scale mapping normalized onset displacement to the
/// ground-truth force over contact frames (benchmarking only).
Vec3 fit_fullvision_scale(const NormalizedPositionSeries& p_hat,
                          const ContactSignal& contact,
                          const Vec3Series& f_gt);

}  // namespace ccfe
