#include "ccfe/types.hpp"

#include <cmath>

namespace ccfe {

namespace {

bool finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace

Vec3Series Demonstration::positions() const {
  Vec3Series out;
  out.reserve(frames.size());
  for (const auto& fr : frames) out.push_back(fr.p);
  return out;
}

Vec3Series Demonstration::desired_positions() const {
  Vec3Series out;
  out.reserve(frames.size());
  for (const auto& fr : frames) out.push_back(fr.p_des);
  return out;
}

Vec3Series Demonstration::psm_forces() const {
  Vec3Series out;
  out.reserve(frames.size());
  for (const auto& fr : frames) out.push_back(fr.f_psm);
  return out;
}

Vec3Series Demonstration::gt_forces() const {
  Vec3Series out;
  out.reserve(frames.size());
  for (const auto& fr : frames) out.push_back(fr.f_gt);
  return out;
}

BoolSeries Demonstration::contact_gt_series() const {
  if (!has_contact_gt())
    throw ValidationError("demonstration '" + id +
                          "' has no ground-truth contact channel");
  BoolSeries out;
  out.reserve(frames.size());
  for (const auto& fr : frames) out.push_back(*fr.contact_gt);
  return out;
}

void Demonstration::validate() const {
  if (frames.empty())
    throw ValidationError("demonstration '" + id + "' has no frames");
  const bool kp = frames.front().keypoints.has_value();
  const bool cg = frames.front().contact_gt.has_value();
  const bool cl = frames.front().crowd_labels.has_value();
  const std::size_t n_workers =
      cl ? frames.front().crowd_labels->size() : 0;
  double prev_t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& fr = frames[i];
    if (!(fr.t > prev_t))
      throw ValidationError("demonstration '" + id +
                            "': time not strictly increasing at frame " +
                            std::to_string(i));
    prev_t = fr.t;
    if (!finite(fr.p) || !finite(fr.p_des) || !finite(fr.f_psm) ||
        !finite(fr.f_gt))
      throw ValidationError("demonstration '" + id +
                            "': non-finite value at frame " +
                            std::to_string(i));
    if (fr.keypoints.has_value() != kp || fr.contact_gt.has_value() != cg ||
        fr.crowd_labels.has_value() != cl)
      throw ValidationError(
          "demonstration '" + id +
          "': optional channel availability differs at frame " +
          std::to_string(i));
    if (cl && fr.crowd_labels->size() != n_workers)
      throw ValidationError("demonstration '" + id +
                            "': worker count differs at frame " +
                            std::to_string(i));
  }
}

std::vector<ContactEpisode> segment_contacts(const BoolSeries& contact) {
  std::vector<ContactEpisode> episodes;
  std::size_t i = 0;
  const std::size_t n = contact.size();
  while (i < n) {
    if (contact[i]) {
      ContactEpisode ep;
      ep.onset = i;
      while (i + 1 < n && contact[i + 1]) ++i;
      ep.release = i;
      episodes.push_back(ep);
    }
    ++i;
  }
  return episodes;
}

BoolSeries episodes_to_bools(const std::vector<ContactEpisode>& episodes,
                             std::size_t length) {
  BoolSeries out(length, false);
  for (const auto& ep : episodes)
    for (std::size_t i = ep.onset; i <= ep.release && i < length; ++i)
      out[i] = true;
  return out;
}

ContactSignal ContactSignal::from_bools(BoolSeries contact) {
  ContactSignal sig;
  sig.episodes = segment_contacts(contact);
  sig.contact = std::move(contact);
  return sig;
}

ContactSignal ContactSignal::from_probabilities(
    std::vector<double> probability, double threshold) {
  ContactSignal sig;
  sig.contact.reserve(probability.size());
  for (double p : probability) sig.contact.push_back(p > threshold);
  sig.probability = std::move(probability);
  sig.episodes = segment_contacts(sig.contact);
  return sig;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kFPsm: return "F_PSM";
    case Method::kCfsKfs: return "C_FS-K_FS";
    case Method::kCvKfs: return "C_V-K_FS";
    case Method::kCvKpsm: return "C_V-K_PSM";
    case Method::kPosDiff: return "PosDiff";
    case Method::kFullVision: return "FullVision";
  }
  throw std::logic_error("unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "F_PSM" || name == "fpsm") return Method::kFPsm;
  if (name == "C_FS-K_FS" || name == "cfs-kfs") return Method::kCfsKfs;
  if (name == "C_V-K_FS" || name == "cv-kfs") return Method::kCvKfs;
  if (name == "C_V-K_PSM" || name == "cv-kpsm") return Method::kCvKpsm;
  if (name == "PosDiff" || name == "posdiff") return Method::kPosDiff;
  if (name == "FullVision" || name == "fullvision") return Method::kFullVision;
  throw ValidationError("unknown method name '" + name + "'");
}

}  // namespace ccfe
