#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ccfe/contact.hpp"
#include "ccfe/eval.hpp"
#include "ccfe/posnet.hpp"
#include "ccfe/types.hpp"

namespace ccfe::io {

/// Decimal with 17 significant digits; round-trips binary64 exactly.
std::string fmt17(double v);

/// Demonstration logs: one frame per line (t, p, p_des, f_psm, f_gt, then
/// the optional channels listed in the manifest), %.17g decimals, booleans
/// as 0/1. A manifest.json in the same directory carries ids, profiles,
/// sample rates, and channel availability.
void write_demonstrations(const std::vector<Demonstration>& demos,
                          const std::filesystem::path& dir);
std::vector<Demonstration> read_demonstrations(
    const std::filesystem::path& dir);

void write_contact_signals(
    const std::vector<std::pair<std::string, ContactSignal>>& signals,
    const std::string& source, const std::filesystem::path& file);
std::vector<std::pair<std::string, ContactSignal>> read_contact_signals(
    const std::filesystem::path& file);

/// Per-demonstration fitted models keyed by demo id.
struct FitRecord {
  std::string demo_id;
  std::string force_source;  // "gt" | "psm"
  StiffnessModel stiffness;
  bool has_stiffness = false;
  PosDiffModel posdiff;
  bool has_posdiff = false;
};

void write_fits(const std::vector<FitRecord>& fits,
                const std::filesystem::path& file);
std::vector<FitRecord> read_fits(const std::filesystem::path& file);

void write_classifier(const ContactClassifierParams& params,
                      const std::filesystem::path& file);
ContactClassifierParams read_classifier(const std::filesystem::path& file);

/// Versioned flat numeric container with an architecture header.
void write_estimator(const PositionEstimatorParams& params,
                     const std::filesystem::path& file);
PositionEstimatorParams read_estimator(const std::filesystem::path& file);

void write_force_series(
    const std::vector<std::pair<std::string, ForceSeries>>& series,
    const std::filesystem::path& file);
std::vector<std::pair<std::string, ForceSeries>> read_force_series(
    const std::filesystem::path& file);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);
/// Human-readable tables in the layout of the benchmark reports.
std::string render_report_text(const EvalReport& report);
/// Plot-ready per-demonstration rows (demo, method, norm, x, y, z).
std::string render_report_csv(const EvalReport& report);

std::string sweeps_to_json(const std::vector<SweepReport>& sweeps);
std::vector<SweepReport> sweeps_from_json(const std::string& text);
std::string render_sweeps_csv(const std::vector<SweepReport>& sweeps);

void write_text_file(const std::filesystem::path& file,
                     const std::string& text);
std::string read_text_file(const std::filesystem::path& file);

}  // namespace ccfe::io
