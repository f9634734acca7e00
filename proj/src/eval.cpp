#include "ccfe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ccfe/rng.hpp"

namespace ccfe {

namespace {

double series_rmse(const std::vector<double>& a, const std::vector<double>& b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(a.size()));
}

}  // namespace

NrmseResult nrmse(const Vec3Series& f_est, const Vec3Series& f_gt) {
  if (f_est.size() != f_gt.size() || f_gt.empty())
    throw ValidationError("nrmse: series misaligned or empty");
  NrmseResult out;
  for (int a = 0; a < 3; ++a) {
    double lo = f_gt.front()[a], hi = f_gt.front()[a], sq = 0.0;
    for (std::size_t i = 0; i < f_gt.size(); ++i) {
      lo = std::min(lo, f_gt[i][a]);
      hi = std::max(hi, f_gt[i][a]);
      const double d = f_est[i][a] - f_gt[i][a];
      sq += d * d;
    }
    const double range = hi - lo;
    if (range > 0.0) {
      out.per_axis[a] =
          std::sqrt(sq / static_cast<double>(f_gt.size())) / range;
    } else {
      out.per_axis[a] = 0.0;
      out.axis_degenerate[static_cast<std::size_t>(a)] = true;
    }
  }
  std::vector<double> norm_est, norm_gt;
  norm_est.reserve(f_est.size());
  norm_gt.reserve(f_gt.size());
  for (std::size_t i = 0; i < f_gt.size(); ++i) {
    norm_est.push_back(f_est[i].norm());
    norm_gt.push_back(f_gt[i].norm());
  }
  const auto [lo_it, hi_it] = std::minmax_element(norm_gt.begin(),
                                                  norm_gt.end());
  const double range = *hi_it - *lo_it;
  if (range > 0.0)
    out.norm = series_rmse(norm_est, norm_gt) / range;
  else
    out.norm_degenerate = true;
  return out;
}

PositionRmse rmse_normalized_position(const NormalizedPositionSeries& est,
                                      const NormalizedPositionSeries& gt) {
  if (est.p_hat.size() != gt.p_hat.size() || gt.p_hat.empty())
    throw ValidationError("rmse_normalized_position: misaligned series");
  PositionRmse out;
  double pooled = 0.0;
  for (int a = 0; a < 3; ++a) {
    double sq = 0.0;
    for (std::size_t i = 0; i < gt.p_hat.size(); ++i) {
      const double d = est.p_hat[i][a] - gt.p_hat[i][a];
      sq += d * d;
    }
    out.per_axis[a] = std::sqrt(sq / static_cast<double>(gt.p_hat.size()));
    pooled += sq;
  }
  out.overall =
      std::sqrt(pooled / (3.0 * static_cast<double>(gt.p_hat.size())));
  return out;
}

Vec3Series rescale_to_test_range(const NormalizedPositionSeries& est,
                                 const Vec3& reference_range) {
  for (int a = 0; a < 3; ++a)
    if (!(reference_range[a] > 0.0))
      throw ValidationError("rescale_to_test_range: reference range must be "
                            "> 0 on every axis");
  Vec3Series out;
  out.reserve(est.p_hat.size());
  for (const auto& h : est.p_hat) out.push_back(h.cwiseProduct(reference_range));
  return out;
}

ClassificationMetrics classification_metrics(const ContactSignal& pred,
                                             const ContactSignal& truth) {
  if (pred.size() != truth.size() || truth.size() == 0)
    throw ValidationError("classification_metrics: misaligned signals");
  ClassificationMetrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = pred.contact[i], t = truth.contact[i];
    if (p && t) ++m.true_positives;
    else if (p && !t) ++m.false_positives;
    else if (!p && t) ++m.false_negatives;
    else ++m.true_negatives;
  }
  const double total = static_cast<double>(truth.size());
  m.accuracy =
      static_cast<double>(m.true_positives + m.true_negatives) / total;
  if (m.true_positives + m.false_positives > 0)
    m.precision = static_cast<double>(m.true_positives) /
                  static_cast<double>(m.true_positives + m.false_positives);
  if (m.true_positives + m.false_negatives > 0)
    m.recall = static_cast<double>(m.true_positives) /
               static_cast<double>(m.true_positives + m.false_negatives);
  if (m.precision && m.recall) {
    const double pr = *m.precision + *m.recall;
    m.f1 = pr > 0.0 ? 2.0 * (*m.precision) * (*m.recall) / pr : 0.0;
  }
  return m;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  out.count = values.size();
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return out;
}

std::vector<StiffnessRow> stiffness_error_report(
    const std::vector<std::pair<std::string, std::vector<StiffnessModel>>>&
        fits,
    const MaterialProfile& truth) {
  std::vector<StiffnessRow> rows;
  for (const auto& [method, models] : fits) {
    if (models.empty())
      throw ValidationError("stiffness_error_report: no fits for method " +
                            method);
    StiffnessRow row;
    row.method = method;
    std::vector<double> kx, ky, kzp, kzm;
    for (const auto& m : models) {
      kx.push_back(m.k_x);
      ky.push_back(m.k_y);
      kzp.push_back(m.k_z_plus);
      kzm.push_back(m.k_z_minus);
    }
    row.k_x = mean_std(kx);
    row.k_y = mean_std(ky);
    row.k_z_plus = mean_std(kzp);
    row.k_z_minus = mean_std(kzm);
    row.rel_error_x = (row.k_x.mean - truth.k_x) / truth.k_x;
    row.rel_error_y = (row.k_y.mean - truth.k_y) / truth.k_y;
    row.rel_error_z_plus = (row.k_z_plus.mean - truth.k_z_plus) /
                           truth.k_z_plus;
    row.rel_error_z_minus = (row.k_z_minus.mean - truth.k_z_minus) /
                            truth.k_z_minus;
    rows.push_back(std::move(row));
  }
  const StiffnessRow& ref = rows.front();
  for (auto& row : rows) {
    row.delta_vs_reference = Vec3(row.k_x.mean - ref.k_x.mean,
                                  row.k_y.mean - ref.k_y.mean,
                                  row.k_z_plus.mean - ref.k_z_plus.mean);
    row.delta_z_minus_vs_reference = row.k_z_minus.mean - ref.k_z_minus.mean;
  }
  return rows;
}

void BenchmarkScenario::validate() const {
  material.validate();
  noise.validate();
  rig.validate();
  workers.validate();
  if (!(duration_s > 0.0))
    throw ValidationError("scenario.duration_s: must be > 0");
  if (!(sample_rate_hz > 0.0))
    throw ValidationError("scenario.sample_rate_hz: must be > 0");
  if (n_train < 0 || n_val < 0 || n_test < 1)
    throw ValidationError("scenario: demo counts invalid (n_test >= 1)");
  if (!(force_threshold_n > 0.0))
    throw ValidationError("scenario.force_threshold_n: must be > 0");
  if (!(vote_threshold > 0.0 && vote_threshold < 1.0))
    throw ValidationError("scenario.vote_threshold: must be in (0, 1)");
  if (debounce_frames < 1)
    throw ValidationError("scenario.debounce_frames: must be >= 1");
  if (contact_source != "gt-force" && contact_source != "crowd" &&
      contact_source != "classifier")
    throw ValidationError(
        "scenario.contact_source: expected gt-force, crowd, or classifier");
  if (methods.empty()) throw ValidationError("scenario.methods: empty");
}

ScenarioData simulate_scenario(const BenchmarkScenario& scenario) {
  scenario.validate();
  ScenarioData data;
  auto make = [&](int phase, int count, std::vector<Demonstration>& out) {
    for (int i = 0; i < count; ++i)
      out.push_back(simulate_with_crowd(
          scenario.material, scenario.noise, scenario.rig, scenario.workers,
          scenario.duration_s,
          mix_seed(scenario.seed, static_cast<std::uint64_t>(phase) * 10000 +
                                      static_cast<std::uint64_t>(i)),
          scenario.sample_rate_hz));
  };
  make(0, scenario.n_train, data.train);
  make(1, scenario.n_val, data.val);
  make(2, scenario.n_test, data.test);
  return data;
}

ContactSignal vision_contact(const BenchmarkScenario& scenario,
                             const Demonstration& demo,
                             const ContactClassifierParams* classifier) {
  ContactSignal sig;
  if (scenario.contact_source == "gt-force") {
    sig = contact_from_force(demo.gt_forces(), scenario.force_threshold_n);
  } else if (scenario.contact_source == "crowd") {
    if (!demo.has_crowd_labels())
      throw ValidationError("vision_contact: demonstration '" + demo.id +
                            "' has no crowd labels");
    std::vector<std::vector<bool>> labels;
    labels.reserve(demo.frames.size());
    for (const auto& fr : demo.frames) labels.push_back(*fr.crowd_labels);
    sig = aggregate_crowd_labels(labels, scenario.vote_threshold);
  } else {
    if (!classifier)
      throw ValidationError(
          "vision_contact: classifier source without trained parameters");
    sig = predict_contact(*classifier, demo);
  }
  if (scenario.debounce_frames > 1) sig = debounce(sig, scenario.debounce_frames);
  return sig;
}

namespace {

ContactClassifierParams train_scenario_classifier(
    const BenchmarkScenario& scenario, const std::vector<Demonstration>& train) {
  if (train.empty())
    throw ValidationError(
        "benchmark: classifier contact source needs training demos");
  std::vector<ContactExample> examples;
  for (const auto& demo : train) {
    std::vector<std::vector<bool>> labels;
    labels.reserve(demo.frames.size());
    for (const auto& fr : demo.frames) labels.push_back(*fr.crowd_labels);
    const auto agg = aggregate_crowd_labels(labels, scenario.vote_threshold);
    auto ex = make_contact_examples(demo, agg);
    examples.insert(examples.end(), ex.begin(), ex.end());
  }
  return train_contact_classifier(examples, scenario.classifier_training,
                                  mix_seed(scenario.seed, 77));
}

Vec3 demo_position_range(const Demonstration& demo) {
  const auto norm = normalize_positions(demo.positions());
  return norm.p_max - norm.p_min;
}

}  // namespace

EvalReport run_benchmark(const BenchmarkScenario& scenario) {
  scenario.validate();
  const ScenarioData data = simulate_scenario(scenario);

  ContactClassifierParams classifier;
  const bool use_classifier = scenario.contact_source == "classifier";
  if (use_classifier)
    classifier = train_scenario_classifier(scenario, data.train);

  const bool want_fullvision =
      std::find(scenario.methods.begin(), scenario.methods.end(),
                Method::kFullVision) != scenario.methods.end();
  PositionEstimatorParams posnet;
  if (want_fullvision) {
    if (data.train.empty())
      throw ValidationError("benchmark: FullVision needs training demos");
    const auto dataset = make_position_dataset(data.train);
    posnet = train_estimator(scenario.fullvision_model, dataset,
                             scenario.fullvision_training,
                             scenario.fullvision_hidden);
  }

  EvalReport report;
  report.scenario_name = scenario.name;
  report.seed = scenario.seed;
  report.n_test_demos = data.test.size();

  std::map<std::string, std::vector<double>> norm_acc, x_acc, y_acc, z_acc;
  std::vector<std::string> method_order;
  std::vector<StiffnessModel> fits_cfs, fits_cvfs, fits_cvpsm;
  std::vector<double> cls_acc, cls_prec, cls_rec, cls_f1;
  std::vector<double> pos_overall, pos_x, pos_y, pos_z, pos_rescaled;

  for (const auto& demo : data.test) {
    const auto contact_gt =
        ContactSignal::from_bools(demo.contact_gt_series());
    const auto contact_v =
        vision_contact(scenario, demo, use_classifier ? &classifier : nullptr);

    const auto cm = classification_metrics(contact_v, contact_gt);
    cls_acc.push_back(cm.accuracy);
    if (cm.precision) cls_prec.push_back(*cm.precision);
    if (cm.recall) cls_rec.push_back(*cm.recall);
    if (cm.f1) cls_f1.push_back(*cm.f1);

    // Per-demonstration fits, mirroring the per-demo protocol of the
    // contact-conditional methods.
    MethodArtifacts base;
    base.contact_gt = contact_gt;
    base.contact_vision = contact_v;
    base.vision_contact_source = scenario.contact_source;
    base.fullvision_mode = scenario.fullvision_mode;

    std::optional<NormalizedPositionSeries> phat_est;
    const auto norm_gt = normalize_positions(demo.positions());
    if (want_fullvision) {
      NormalizedPositionSeries est;
      est.p_hat = predict_positions(posnet, demo);
      est.p_min = norm_gt.p_min;
      est.p_max = norm_gt.p_max;
      phat_est = est;

      const auto prmse = rmse_normalized_position(est, norm_gt);
      pos_overall.push_back(prmse.overall);
      pos_x.push_back(prmse.per_axis.x());
      pos_y.push_back(prmse.per_axis.y());
      pos_z.push_back(prmse.per_axis.z());
      const Vec3 range = demo_position_range(demo);
      const auto scaled_est = rescale_to_test_range(est, range);
      const auto scaled_gt = rescale_to_test_range(norm_gt, range);
      double sq = 0.0;
      for (std::size_t i = 0; i < scaled_est.size(); ++i)
        sq += (scaled_est[i] - scaled_gt[i]).squaredNorm();
      pos_rescaled.push_back(std::sqrt(
          sq / (3.0 * static_cast<double>(scaled_est.size()))));
    }

    const auto f_gt = demo.gt_forces();
    for (Method method : scenario.methods) {
      MethodArtifacts art = base;
      switch (method) {
        case Method::kFPsm:
          break;
        case Method::kCfsKfs:
          art.stiffness_gt =
              fit_stiffness(demo, contact_gt, ForceSource::kGroundTruth);
          fits_cfs.push_back(*art.stiffness_gt);
          break;
        case Method::kCvKfs:
          art.stiffness_gt =
              fit_stiffness(demo, contact_v, ForceSource::kGroundTruth);
          fits_cvfs.push_back(*art.stiffness_gt);
          break;
        case Method::kCvKpsm:
          art.stiffness_psm = fit_stiffness(demo, contact_v, ForceSource::kPsm);
          fits_cvpsm.push_back(*art.stiffness_psm);
          break;
        case Method::kPosDiff:
          art.posdiff = fit_posdiff(demo);
          break;
        case Method::kFullVision:
          art.p_hat = phat_est;
          art.fullvision_scale =
              fit_fullvision_scale(*phat_est, contact_v, f_gt);
          break;
      }
      const ForceSeries est = run_method(method, demo, art);
      const auto result = nrmse(est.f, f_gt);
      const std::string tag = method_name(method);
      if (norm_acc.find(tag) == norm_acc.end())
        method_order.push_back(tag);
      norm_acc[tag].push_back(result.norm);
      x_acc[tag].push_back(result.per_axis.x());
      y_acc[tag].push_back(result.per_axis.y());
      z_acc[tag].push_back(result.per_axis.z());
      report.per_demo.push_back({demo.id, tag, result});
    }
  }

  for (const auto& tag : method_order) {
    MethodRow row;
    row.method = tag;
    row.norm = mean_std(norm_acc[tag]);
    row.x = mean_std(x_acc[tag]);
    row.y = mean_std(y_acc[tag]);
    row.z = mean_std(z_acc[tag]);
    report.methods.push_back(std::move(row));
  }

  ContactSourceRow crow;
  crow.source = scenario.contact_source;
  crow.accuracy = mean_std(cls_acc);
  crow.precision = mean_std(cls_prec);
  crow.recall = mean_std(cls_rec);
  crow.f1 = mean_std(cls_f1);
  report.contact_sources.push_back(std::move(crow));

  std::vector<std::pair<std::string, std::vector<StiffnessModel>>> fit_table;
  if (!fits_cfs.empty()) fit_table.emplace_back("C_FS-K_FS", fits_cfs);
  if (!fits_cvfs.empty()) fit_table.emplace_back("C_V-K_FS", fits_cvfs);
  if (!fits_cvpsm.empty()) fit_table.emplace_back("C_V-K_PSM", fits_cvpsm);
  if (!fit_table.empty())
    report.stiffness = stiffness_error_report(fit_table, scenario.material);

  if (want_fullvision) {
    PositionRow prow;
    prow.model =
        scenario.fullvision_model == ModelKind::kFcn ? "FCN" : "GNN";
    prow.overall = mean_std(pos_overall);
    prow.x = mean_std(pos_x);
    prow.y = mean_std(pos_y);
    prow.z = mean_std(pos_z);
    prow.rescaled_overall = mean_std(pos_rescaled);
    report.position.push_back(std::move(prow));
  }
  return report;
}

void SweepConfig::validate() const {
  if (task != "contact" && task != "position")
    throw ValidationError("sweep.task: expected contact or position");
  if (sizes.empty()) throw ValidationError("sweep.sizes: empty");
  if (!std::is_sorted(sizes.begin(), sizes.end()))
    throw ValidationError("sweep.sizes: must be ascending");
  for (int s : sizes)
    if (s < 1) throw ValidationError("sweep.sizes: entries must be >= 1");
  if (repeats < 1) throw ValidationError("sweep.repeats: must be >= 1");
  if (!run_pretrained_arm && !run_scratch_arm)
    throw ValidationError("sweep: no arm enabled");
  source.validate();
  target.validate();
}

namespace {

std::vector<std::size_t> subsample_indices(std::size_t pool, std::size_t n,
                                           std::uint64_t seed) {
  if (n > pool)
    throw ValidationError("sweep: subsample size " + std::to_string(n) +
                          " exceeds pool of " + std::to_string(pool));
  std::vector<std::size_t> idx(pool);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(n);
  return idx;
}

double classifier_accuracy(const ContactClassifierParams& params,
                           const std::vector<Demonstration>& test) {
  std::vector<double> acc;
  for (const auto& demo : test) {
    const auto pred = predict_contact(params, demo);
    const auto truth = ContactSignal::from_bools(demo.contact_gt_series());
    acc.push_back(classification_metrics(pred, truth).accuracy);
  }
  return mean_std(acc).mean;
}

double position_rmse_on(const PositionEstimatorParams& params,
                        const std::vector<Demonstration>& test) {
  std::vector<double> vals;
  for (const auto& demo : test) {
    NormalizedPositionSeries est;
    est.p_hat = predict_positions(params, demo);
    const auto gt = normalize_positions(demo.positions());
    est.p_min = gt.p_min;
    est.p_max = gt.p_max;
    vals.push_back(rmse_normalized_position(est, gt).overall);
  }
  return mean_std(vals).mean;
}

}  // namespace

std::vector<SweepReport> data_efficiency_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const ScenarioData source = simulate_scenario(cfg.source);
  const ScenarioData target = simulate_scenario(cfg.target);

  std::vector<SweepReport> reports;

  if (cfg.task == "contact") {
    // Pool of labeled frames from the target material's training demos;
    // accuracy measured against ground-truth contact on the test demos.
    std::vector<ContactExample> pool;
    for (const auto& demo : target.train) {
      std::vector<std::vector<bool>> labels;
      for (const auto& fr : demo.frames) labels.push_back(*fr.crowd_labels);
      const auto agg = aggregate_crowd_labels(labels, cfg.target.vote_threshold);
      auto ex = make_contact_examples(demo, agg);
      pool.insert(pool.end(), ex.begin(), ex.end());
    }

    ContactClassifierParams pretrained;
    if (cfg.run_pretrained_arm)
      pretrained = train_scenario_classifier(cfg.source, source.train);

    auto run_arm = [&](bool from_pretrained) {
      SweepReport rep;
      rep.task = "contact";
      rep.arm = from_pretrained ? "pretrained" : "scratch";
      rep.metric = "accuracy";
      if (from_pretrained)
        rep.zero_shot = classifier_accuracy(pretrained, target.test);
      for (int size : cfg.sizes) {
        SweepPoint point;
        point.size = size;
        for (int r = 0; r < cfg.repeats; ++r) {
          const auto idx = subsample_indices(
              pool.size(), static_cast<std::size_t>(size),
              mix_seed(cfg.seed, static_cast<std::uint64_t>(size) * 1000 +
                                     static_cast<std::uint64_t>(r)));
          std::vector<ContactExample> subset;
          subset.reserve(idx.size());
          for (auto i : idx) subset.push_back(pool[i]);
          const auto params = train_contact_classifier(
              subset, cfg.classifier_training,
              mix_seed(cfg.seed, static_cast<std::uint64_t>(r)),
              from_pretrained ? &pretrained : nullptr);
          point.values.push_back(classifier_accuracy(params, target.test));
        }
        point.stats = mean_std(point.values);
        rep.points.push_back(std::move(point));
      }
      return rep;
    };
    if (cfg.run_pretrained_arm) reports.push_back(run_arm(true));
    if (cfg.run_scratch_arm) reports.push_back(run_arm(false));
    return reports;
  }

  // Position task.
  const auto pool = make_position_dataset(target.train);
  PositionEstimatorParams pretrained;
  if (cfg.run_pretrained_arm) {
    const auto source_dataset = make_position_dataset(source.train);
    pretrained = train_estimator(cfg.position_model, source_dataset,
                                 cfg.pretrain_training, cfg.position_hidden);
  }

  auto run_arm = [&](bool from_pretrained) {
    SweepReport rep;
    rep.task = "position";
    rep.arm = from_pretrained ? "pretrained" : "scratch";
    rep.metric = "normalized_rmse";
    if (from_pretrained)
      rep.zero_shot = position_rmse_on(pretrained, target.test);
    for (int size : cfg.sizes) {
      SweepPoint point;
      point.size = size;
      for (int r = 0; r < cfg.repeats; ++r) {
        const auto idx = subsample_indices(
            pool.size(), static_cast<std::size_t>(size),
            mix_seed(cfg.seed, 0xBEE + static_cast<std::uint64_t>(size) * 1000 +
                                   static_cast<std::uint64_t>(r)));
        std::vector<TrainingSample> subset;
        subset.reserve(idx.size());
        for (auto i : idx) subset.push_back(pool[i]);
        TrainingConfig tcfg = cfg.finetune_training;
        tcfg.seed = mix_seed(cfg.seed, 0xF00D + static_cast<std::uint64_t>(r));
        const auto params =
            from_pretrained
                ? fine_tune(pretrained, subset, tcfg)
                : train_estimator(cfg.position_model, subset, tcfg,
                                  cfg.position_hidden);
        point.values.push_back(position_rmse_on(params, target.test));
      }
      point.stats = mean_std(point.values);
      rep.points.push_back(std::move(point));
    }
    return rep;
  };
  if (cfg.run_pretrained_arm) reports.push_back(run_arm(true));
  if (cfg.run_scratch_arm) reports.push_back(run_arm(false));
  return reports;
}

}  // namespace ccfe
