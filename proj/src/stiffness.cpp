#include "ccfe/stiffness.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace ccfe {

namespace {

// Closed-form univariate least squares with intercept, accumulated around
// the means for stability.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::string& regime) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0)
    throw RankDeficientError("rank-deficient stiffness design for regime '" +
                             regime + "': displacement has no spread");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

}  // namespace

Vec3Series displacement_from_onset(const Demonstration& demo,
                                   const ContactSignal& contact) {
  if (contact.size() != demo.frames.size())
    throw ValidationError(
        "displacement_from_onset: contact signal misaligned with frames");
  Vec3Series s(demo.frames.size(), Vec3::Zero());
  for (const auto& ep : contact.episodes) {
    const Vec3 onset_p = demo.frames[ep.onset].p;
    for (std::size_t i = ep.onset; i <= ep.release; ++i)
      s[i] = demo.frames[i].p - onset_p;
  }
  return s;
}

StiffnessModel fit_stiffness(const Demonstration& demo,
                             const ContactSignal& contact,
                             ForceSource force_source,
                             const std::optional<StiffnessPrior>& prior,
                             int min_frames_per_regime) {
  const Vec3Series s = displacement_from_onset(demo, contact);
  const Vec3Series f = force_source == ForceSource::kGroundTruth
                           ? demo.gt_forces()
                           : demo.psm_forces();

  // Samples per regime: X and Y over all contact frames, Z split by the
  // sign of s_z (frames with s_z == 0 contribute to neither Z regime).
  std::vector<double> xs[4], ys[4];
  static const char* kRegime[4] = {"x", "y", "z+", "z-"};
  for (const auto& ep : contact.episodes) {
    for (std::size_t i = ep.onset; i <= ep.release; ++i) {
      xs[0].push_back(s[i].x());
      ys[0].push_back(f[i].x());
      xs[1].push_back(s[i].y());
      ys[1].push_back(f[i].y());
      if (s[i].z() > 0.0) {
        xs[2].push_back(s[i].z());
        ys[2].push_back(f[i].z());
      } else if (s[i].z() < 0.0) {
        xs[3].push_back(s[i].z());
        ys[3].push_back(f[i].z());
      }
    }
  }

  StiffnessModel model;
  const auto min_len = static_cast<std::size_t>(min_frames_per_regime);
  const double prior_k[4] = {prior ? prior->k_x : 0.0,
                             prior ? prior->k_y : 0.0,
                             prior ? prior->k_z_plus : 0.0,
                             prior ? prior->k_z_minus : 0.0};
  auto require_or_prior = [&](int r) {
    if (prior) return true;  // fall back to the prior value
    throw ValidationError(
        std::string("fit_stiffness: regime '") + kRegime[r] + "' has " +
        std::to_string(xs[r].size()) + " frames, needs " +
        std::to_string(min_frames_per_regime) + " and no prior was given");
  };
  double sq_residual = 0.0;
  std::size_t n_residual = 0;

  // X and Y: independent lines with intercept over all contact frames.
  for (int r = 0; r < 2; ++r) {
    double* k_out = r == 0 ? &model.k_x : &model.k_y;
    if (xs[r].size() < min_len) {
      require_or_prior(r);
      *k_out = prior_k[r];
      continue;
    }
    const LineFit fit = fit_line(xs[r], ys[r], kRegime[r]);
    *k_out = fit.slope;
    model.c[r] = fit.intercept;
    for (std::size_t i = 0; i < xs[r].size(); ++i) {
      const double res = ys[r][i] - fit.slope * xs[r][i] - fit.intercept;
      sq_residual += res * res;
    }
    n_residual += xs[r].size();
  }

  // Z: tension and compression slopes share one intercept, solved jointly
  // so the normal-equation identities hold per regime.
  const bool have_plus = xs[2].size() >= min_len;
  const bool have_minus = xs[3].size() >= min_len;
  if (have_plus && have_minus) {
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (int r = 2; r < 4; ++r) {
      const int col = r - 2;  // 0: tension slope, 1: compression slope
      for (std::size_t i = 0; i < xs[r].size(); ++i) {
        Eigen::Vector3d row = Eigen::Vector3d::Zero();
        row[col] = xs[r][i];
        row[2] = 1.0;
        ata += row * row.transpose();
        atb += row * ys[r][i];
      }
    }
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(ata);
    if (!lu.isInvertible())
      throw RankDeficientError(
          "rank-deficient stiffness design for regime 'z': displacement has "
          "no spread");
    const Eigen::Vector3d sol = lu.solve(atb);
    model.k_z_plus = sol[0];
    model.k_z_minus = sol[1];
    model.c.z() = sol[2];
    for (int r = 2; r < 4; ++r)
      for (std::size_t i = 0; i < xs[r].size(); ++i) {
        const double res =
            ys[r][i] - sol[r - 2] * xs[r][i] - sol[2];
        sq_residual += res * res;
      }
    n_residual += xs[2].size() + xs[3].size();
  } else {
    for (int r = 2; r < 4; ++r) {
      double* k_out = r == 2 ? &model.k_z_plus : &model.k_z_minus;
      if (xs[r].size() < min_len) {
        require_or_prior(r);
        *k_out = prior_k[r];
        continue;
      }
      const LineFit fit = fit_line(xs[r], ys[r], kRegime[r]);
      *k_out = fit.slope;
      model.c.z() = fit.intercept;
      for (std::size_t i = 0; i < xs[r].size(); ++i) {
        const double res = ys[r][i] - fit.slope * xs[r][i] - fit.intercept;
        sq_residual += res * res;
      }
      n_residual += xs[r].size();
    }
  }

  model.fit_residual =
      n_residual > 0
          ? std::sqrt(sq_residual / static_cast<double>(n_residual))
          : 0.0;
  return model;
}

PosDiffModel fit_posdiff(const Demonstration& demo) {
  if (demo.frames.size() < 2)
    throw ValidationError("fit_posdiff: needs at least 2 frames");
  PosDiffModel model;
  static const char* kAxis[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    std::vector<double> x, y;
    x.reserve(demo.frames.size());
    y.reserve(demo.frames.size());
    for (const auto& fr : demo.frames) {
      x.push_back(fr.p_des[a] - fr.p[a]);
      y.push_back(fr.f_psm[a]);
    }
    const LineFit fit = fit_line(x, y, kAxis[a]);
    model.d[a] = fit.slope;
    model.e[a] = fit.intercept;
  }
  return model;
}

Vec3 fit_fullvision_scale(const NormalizedPositionSeries& p_hat,
                          const ContactSignal& contact,
                          const Vec3Series& f_gt) {
  if (p_hat.p_hat.size() != contact.size() ||
      f_gt.size() != contact.size())
    throw ValidationError("fit_fullvision_scale: misaligned inputs");
  if (contact.episodes.empty())
    throw ValidationError("fit_fullvision_scale: no contact frames");

  Vec3 sxy = Vec3::Zero();
  Vec3 sxx = Vec3::Zero();
  for (const auto& ep : contact.episodes) {
    const Vec3 onset = p_hat.p_hat[ep.onset];
    for (std::size_t i = ep.onset; i <= ep.release; ++i) {
      const Vec3 x = p_hat.p_hat[i] - onset;
      for (int a = 0; a < 3; ++a) {
        sxy[a] += x[a] * f_gt[i][a];
        sxx[a] += x[a] * x[a];
      }
    }
  }
  Vec3 k = Vec3::Zero();
  for (int a = 0; a < 3; ++a) k[a] = sxx[a] > 0.0 ? sxy[a] / sxx[a] : 0.0;
  return k;
}

}  // namespace ccfe
