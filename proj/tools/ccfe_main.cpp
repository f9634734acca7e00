// Command-line surface for the simulator, label sources, model fitting,
// training, evaluation, and the data-efficiency sweeps.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "ccfe/config.hpp"
#include "ccfe/contact.hpp"
#include "ccfe/eval.hpp"
#include "ccfe/io.hpp"
#include "ccfe/posnet.hpp"
#include "ccfe/rng.hpp"
#include "ccfe/simulator.hpp"
#include "ccfe/stiffness.hpp"

namespace fs = std::filesystem;
using namespace ccfe;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

AppConfig load_config(const CommonOpts& opts) {
  AppConfig cfg = opts.config_path.empty()
                      ? default_app_config()
                      : parse_app_config(io::read_text_file(opts.config_path));
  if (opts.seed) {
    cfg.scenario.seed = *opts.seed;
    cfg.training.seed = *opts.seed;
    cfg.sweep.seed = *opts.seed;
    cfg.sweep.pretrain_training.seed = *opts.seed;
    cfg.sweep.finetune_training.seed = *opts.seed;
  }
  return cfg;
}

std::vector<Demonstration> simulate_batch(const AppConfig& cfg) {
  std::vector<Demonstration> demos;
  for (int i = 0; i < cfg.n_demos; ++i)
    demos.push_back(simulate_with_crowd(
        cfg.scenario.material, cfg.scenario.noise, cfg.scenario.rig,
        cfg.scenario.workers, cfg.scenario.duration_s,
        mix_seed(cfg.scenario.seed, static_cast<std::uint64_t>(i)),
        cfg.scenario.sample_rate_hz));
  return demos;
}

ContactSignal labels_for(const AppConfig& cfg, const Demonstration& demo,
                         const std::string& source,
                         const ContactClassifierParams* classifier) {
  BenchmarkScenario scenario = cfg.scenario;
  scenario.contact_source = source;
  return vision_contact(scenario, demo, classifier);
}

std::map<std::string, ContactSignal> load_contacts(const std::string& path) {
  std::map<std::string, ContactSignal> out;
  for (auto& [id, sig] : io::read_contact_signals(path))
    out.emplace(id, std::move(sig));
  return out;
}

int cmd_simulate(const CommonOpts& common, const std::string& out_dir) {
  const AppConfig cfg = load_config(common);
  const auto demos = simulate_batch(cfg);
  io::write_demonstrations(demos, out_dir);
  std::printf("wrote %zu demonstrations to %s\n", demos.size(),
              out_dir.c_str());
  return 0;
}

int cmd_label(const CommonOpts& common, const std::string& in_dir,
              const std::string& out_file, const std::string& source,
              const std::string& params_path) {
  const AppConfig cfg = load_config(common);
  const auto demos = io::read_demonstrations(in_dir);
  ContactClassifierParams classifier;
  if (source == "classifier") {
    if (params_path.empty())
      throw ValidationError("label: --params is required for the classifier "
                            "contact source");
    classifier = io::read_classifier(params_path);
  }
  std::vector<std::pair<std::string, ContactSignal>> signals;
  for (const auto& demo : demos)
    signals.emplace_back(
        demo.id, labels_for(cfg, demo, source,
                            source == "classifier" ? &classifier : nullptr));
  io::write_contact_signals(signals, source, out_file);
  std::printf("wrote contact signals (%s) for %zu demos to %s\n",
              source.c_str(), signals.size(), out_file.c_str());
  return 0;
}

int cmd_fit(const CommonOpts& common, const std::string& in_dir,
            const std::string& out_file, const std::string& method,
            const std::string& force_source, const std::string& contacts_path) {
  const AppConfig cfg = load_config(common);
  const auto demos = io::read_demonstrations(in_dir);
  std::map<std::string, ContactSignal> contacts;
  if (!contacts_path.empty()) contacts = load_contacts(contacts_path);

  std::vector<io::FitRecord> records;
  for (const auto& demo : demos) {
    io::FitRecord rec;
    rec.demo_id = demo.id;
    rec.force_source = force_source;
    if (method == "stiffness") {
      ContactSignal contact;
      if (auto it = contacts.find(demo.id); it != contacts.end())
        contact = it->second;
      else if (demo.has_contact_gt())
        contact = ContactSignal::from_bools(demo.contact_gt_series());
      else
        throw ValidationError("fit: no contact signal for demo '" + demo.id +
                              "' (pass --contacts or include contact_gt)");
      rec.stiffness = fit_stiffness(demo, contact,
                                    force_source == "gt"
                                        ? ForceSource::kGroundTruth
                                        : ForceSource::kPsm);
      rec.has_stiffness = true;
    } else if (method == "posdiff") {
      rec.posdiff = fit_posdiff(demo);
      rec.has_posdiff = true;
    } else {
      throw ValidationError("fit: --method must be stiffness or posdiff");
    }
    records.push_back(std::move(rec));
  }
  io::write_fits(records, out_file);
  std::printf("wrote %zu fits to %s\n", records.size(), out_file.c_str());
  return 0;
}

int cmd_estimate(const CommonOpts& common, const std::string& in_dir,
                 const std::string& out_file, const std::string& method_name_s,
                 const std::string& fits_path, const std::string& contacts_path,
                 const std::string& estimator_path, const std::string& mode) {
  const AppConfig cfg = load_config(common);
  const auto demos = io::read_demonstrations(in_dir);
  const Method method = method_from_name(method_name_s);

  std::map<std::string, io::FitRecord> fits;
  if (!fits_path.empty())
    for (auto& rec : io::read_fits(fits_path)) fits.emplace(rec.demo_id, rec);
  std::map<std::string, ContactSignal> contacts;
  if (!contacts_path.empty()) contacts = load_contacts(contacts_path);
  PositionEstimatorParams estimator;
  const bool has_estimator = !estimator_path.empty();
  if (has_estimator) estimator = io::read_estimator(estimator_path);

  std::vector<std::pair<std::string, ForceSeries>> out;
  for (const auto& demo : demos) {
    MethodArtifacts art;
    art.fullvision_mode = mode == "diff"
                              ? FullVisionMode::kConsecutiveDifference
                              : FullVisionMode::kOnsetDisplacement;
    if (demo.has_contact_gt())
      art.contact_gt = ContactSignal::from_bools(demo.contact_gt_series());
    if (auto it = contacts.find(demo.id); it != contacts.end()) {
      art.contact_vision = it->second;
      art.vision_contact_source = "file";
    }
    if (auto it = fits.find(demo.id); it != fits.end()) {
      if (it->second.has_stiffness) {
        if (it->second.force_source == "gt")
          art.stiffness_gt = it->second.stiffness;
        else
          art.stiffness_psm = it->second.stiffness;
      }
      if (it->second.has_posdiff) art.posdiff = it->second.posdiff;
    }
    if (method == Method::kFullVision) {
      if (!has_estimator)
        throw ValidationError(
            "estimate: FullVision requires --estimator parameters");
      if (!art.contact_vision)
        throw ValidationError(
            "estimate: FullVision requires --contacts signals");
      NormalizedPositionSeries est;
      est.p_hat = predict_positions(estimator, demo);
      const auto norm_gt = normalize_positions(demo.positions());
      est.p_min = norm_gt.p_min;
      est.p_max = norm_gt.p_max;
      art.p_hat = est;
      art.fullvision_scale =
          fit_fullvision_scale(est, *art.contact_vision, demo.gt_forces());
    }
    out.emplace_back(demo.id, run_method(method, demo, art));
  }
  io::write_force_series(out, out_file);
  std::printf("wrote %s force series for %zu demos to %s\n",
              method_name_s.c_str(), out.size(), out_file.c_str());
  return 0;
}

int cmd_train(const CommonOpts& common, const std::string& in_dir,
              const std::string& out_file, const std::string& model,
              const std::string& labels_source) {
  const AppConfig cfg = load_config(common);
  const auto demos = io::read_demonstrations(in_dir);
  if (model == "classifier") {
    std::vector<ContactExample> examples;
    for (const auto& demo : demos) {
      const auto labels =
          labels_for(cfg, demo, labels_source.empty() ? "crowd" : labels_source,
                     nullptr);
      const auto ex = make_contact_examples(demo, labels);
      examples.insert(examples.end(), ex.begin(), ex.end());
    }
    const auto params = train_contact_classifier(
        examples, cfg.classifier_training, cfg.scenario.seed);
    io::write_classifier(params, out_file);
    std::printf("trained contact classifier on %zu examples, loss %.6f -> %s\n",
                examples.size(), params.final_loss, out_file.c_str());
    return 0;
  }
  const ModelKind kind = model == "gnn" ? ModelKind::kGnn : ModelKind::kFcn;
  if (model != "gnn" && model != "fcn")
    throw ValidationError("train: --model must be fcn, gnn, or classifier");
  const auto dataset = make_position_dataset(demos);
  TrainingConfig tcfg = cfg.training;
  const auto params = train_estimator(kind, dataset, tcfg, cfg.train_hidden);
  io::write_estimator(params, out_file);
  std::printf("trained %s on %zu samples, loss %.8f -> %s\n", model.c_str(),
              dataset.size(), params.meta.final_loss, out_file.c_str());
  return 0;
}

int cmd_finetune(const CommonOpts& common, const std::string& in_dir,
                 const std::string& params_path, const std::string& out_file) {
  const AppConfig cfg = load_config(common);
  const auto demos = io::read_demonstrations(in_dir);
  const auto params = io::read_estimator(params_path);
  const auto dataset = make_position_dataset(demos);
  const auto tuned = fine_tune(params, dataset, cfg.training);
  io::write_estimator(tuned, out_file);
  std::printf("fine-tuned on %zu samples, loss %.8f -> %s\n", dataset.size(),
              tuned.meta.final_loss, out_file.c_str());
  return 0;
}

int cmd_gradcheck(const CommonOpts& common, const std::string& model,
                  int hidden, double eps) {
  const AppConfig cfg = load_config(common);
  const std::uint64_t seed = cfg.scenario.seed;
  Rng rng(mix_seed(seed, 0x6C));
  TrainingSample sample;
  for (auto* side : {&sample.kp.left, &sample.kp.right})
    for (auto& pt : *side) pt = Eigen::Vector2d(rng.uniform(), rng.uniform());
  sample.target = Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
  const auto params =
      model == "gnn"
          ? make_gnn_params(seed, hidden > 0 ? hidden : 16)
          : make_fcn_params(seed, hidden > 0 ? hidden : 16);
  const double err = gradient_check(params, sample, eps, 1e-4);
  std::printf("%s max relative gradient error: %.3e (eps %.1e)\n",
              model.c_str(), err, eps);
  return 0;
}

int cmd_evaluate(const CommonOpts& common, const std::string& out_dir) {
  const AppConfig cfg = load_config(common);
  const EvalReport report = run_benchmark(cfg.scenario);
  fs::create_directories(out_dir);
  io::write_text_file(fs::path(out_dir) / "report.json",
                      io::report_to_json(report));
  io::write_text_file(fs::path(out_dir) / "report.txt",
                      io::render_report_text(report));
  io::write_text_file(fs::path(out_dir) / "report_per_demo.csv",
                      io::render_report_csv(report));
  std::cout << io::render_report_text(report);
  return 0;
}

int cmd_sweep(const CommonOpts& common, const std::string& out_dir,
              const std::string& task) {
  AppConfig cfg = load_config(common);
  if (!task.empty()) cfg.sweep.task = task;
  const auto sweeps = data_efficiency_sweep(cfg.sweep);
  fs::create_directories(out_dir);
  io::write_text_file(fs::path(out_dir) / "sweep.json",
                      io::sweeps_to_json(sweeps));
  io::write_text_file(fs::path(out_dir) / "sweep.csv",
                      io::render_sweeps_csv(sweeps));
  for (const auto& s : sweeps) {
    std::printf("%s sweep (%s arm), metric %s:\n", s.task.c_str(),
                s.arm.c_str(), s.metric.c_str());
    if (s.zero_shot) std::printf("  zero-shot: %.4f\n", *s.zero_shot);
    for (const auto& p : s.points)
      std::printf("  size %4d: mean %.4f over %zu repeats\n", p.size,
                  p.stats.mean, p.values.size());
  }
  return 0;
}

int cmd_report(const std::string& in_file, const std::string& out_dir) {
  const auto report = io::report_from_json(io::read_text_file(in_file));
  if (out_dir.empty()) {
    std::cout << io::render_report_text(report);
  } else {
    fs::create_directories(out_dir);
    io::write_text_file(fs::path(out_dir) / "report.txt",
                        io::render_report_text(report));
    io::write_text_file(fs::path(out_dir) / "report_per_demo.csv",
                        io::render_report_csv(report));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contact-conditional force estimation toolkit"};
  app.require_subcommand(0, 1);

  bool dump_defaults = false;
  app.add_flag("--dump-defaults", dump_defaults,
               "Print the default configuration and exit");

  CommonOpts common;
  app.add_option("--config", common.config_path, "Config file (JSON)");
  std::uint64_t seed_val = 0;
  auto* seed_opt =
      app.add_option("--seed", seed_val, "Override the config seed");

  std::string out = "out", in_dir = "demos", method = "stiffness";
  std::string force_source = "gt", contact_source = "crowd", mode = "onset";
  std::string params_path, fits_path, contacts_path, estimator_path;
  std::string model = "fcn", labels_source, task, report_in;
  int hidden = 0;
  double eps = 1e-5;

  auto* sim = app.add_subcommand("simulate", "Generate demonstrations");
  sim->add_option("--out", out, "Output directory");

  auto* lbl = app.add_subcommand("label", "Produce contact signals");
  lbl->add_option("--in", in_dir, "Demonstration directory");
  lbl->add_option("--out", out, "Output file");
  lbl->add_option("--contact-source", contact_source,
                  "gt-force, crowd, or classifier");
  lbl->add_option("--params", params_path, "Classifier parameter file");

  auto* fit = app.add_subcommand("fit", "Fit per-demonstration models");
  fit->add_option("--in", in_dir, "Demonstration directory");
  fit->add_option("--out", out, "Output file");
  fit->add_option("--method", method, "stiffness or posdiff");
  fit->add_option("--force-source", force_source, "gt or psm");
  fit->add_option("--contacts", contacts_path, "Contact signal file");

  auto* est = app.add_subcommand("estimate", "Compute force series");
  est->add_option("--in", in_dir, "Demonstration directory");
  est->add_option("--out", out, "Output file");
  est->add_option("--method", method, "Method tag");
  est->add_option("--fits", fits_path, "Fits file");
  est->add_option("--contacts", contacts_path, "Contact signal file");
  est->add_option("--estimator", estimator_path, "Position estimator file");
  est->add_option("--mode", mode, "FullVision mode: onset or diff");

  auto* trn = app.add_subcommand("train", "Train a model");
  trn->add_option("--in", in_dir, "Demonstration directory");
  trn->add_option("--out", out, "Output parameter file");
  trn->add_option("--model", model, "fcn, gnn, or classifier");
  trn->add_option("--labels", labels_source,
                  "Label source for the classifier (default crowd)");

  auto* ftn = app.add_subcommand("finetune", "Continue training a model");
  ftn->add_option("--in", in_dir, "Demonstration directory");
  ftn->add_option("--params", params_path, "Initial parameter file")
      ->required();
  ftn->add_option("--out", out, "Output parameter file");

  auto* gck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gck->add_option("--model", model, "fcn or gnn");
  gck->add_option("--hidden", hidden, "Hidden units (default 16)");
  gck->add_option("--eps", eps, "Perturbation size");

  auto* evl = app.add_subcommand("evaluate", "Run the benchmark pipeline");
  evl->add_option("--out", out, "Output directory");

  auto* swp = app.add_subcommand("sweep", "Data-efficiency sweep");
  swp->add_option("--out", out, "Output directory");
  swp->add_option("--task", task, "contact or position");

  auto* rpt = app.add_subcommand("report", "Render a saved report");
  rpt->add_option("--in", report_in, "Report JSON file")->required();
  rpt->add_option("--out", out, "Output directory (default: stdout)");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) common.seed = seed_val;

  try {
    if (dump_defaults) {
      std::cout << dump_default_config();
      return 0;
    }
    if (app.get_subcommands().empty()) {
      std::cerr << app.help();
      return 1;
    }
    if (sim->parsed()) return cmd_simulate(common, out);
    if (lbl->parsed())
      return cmd_label(common, in_dir, out, contact_source, params_path);
    if (fit->parsed())
      return cmd_fit(common, in_dir, out, method, force_source, contacts_path);
    if (est->parsed())
      return cmd_estimate(common, in_dir, out, method, fits_path,
                          contacts_path, estimator_path, mode);
    if (trn->parsed())
      return cmd_train(common, in_dir, out, model, labels_source);
    if (ftn->parsed()) return cmd_finetune(common, in_dir, params_path, out);
    if (gck->parsed()) return cmd_gradcheck(common, model, hidden, eps);
    if (evl->parsed()) return cmd_evaluate(common, out);
    if (swp->parsed()) return cmd_sweep(common, out, task);
    if (rpt->parsed()) return cmd_report(report_in, out);
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}
