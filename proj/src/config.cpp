#include "ccfe/config.hpp"

#include <nlohmann/json.hpp>

namespace ccfe {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw ValidationError("config: section '" + section +
                          "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) {
        ok = true;
        break;
      }
    if (!ok)
      throw ValidationError("config: unknown key '" + key + "' in section '" +
                            section + "'");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config: bad value for '") + key + "'");
  }
}

Vec3 get_vec3(const json& j, const char* key, const Vec3& fallback,
              const std::string& section) {
  if (!j.contains(key)) return fallback;
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.size() != 3)
    throw ValidationError("config: '" + section + "." + key +
                          "' must be a 3-element array");
  return Vec3(arr.at(0).get<double>(), arr.at(1).get<double>(),
              arr.at(2).get<double>());
}

MaterialProfile parse_material(const json& j, const MaterialProfile& base) {
  check_keys(j, "material",
             {"name", "k_x", "k_y", "k_z_plus", "k_z_minus",
              "stiffness_jitter", "plastic", "plastic_relaxation_time",
              "preset"});
  MaterialProfile m = base;
  if (j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset == "silicone")
      m = MaterialProfile::silicone();
    else if (preset == "realistic")
      m = MaterialProfile::realistic();
    else
      throw ValidationError("config: material.preset must be silicone or "
                            "realistic, got '" + preset + "'");
  }
  m.name = get_or<std::string>(j, "name", m.name);
  m.k_x = get_or(j, "k_x", m.k_x);
  m.k_y = get_or(j, "k_y", m.k_y);
  m.k_z_plus = get_or(j, "k_z_plus", m.k_z_plus);
  m.k_z_minus = get_or(j, "k_z_minus", m.k_z_minus);
  m.stiffness_jitter = get_or(j, "stiffness_jitter", m.stiffness_jitter);
  m.plastic = get_or(j, "plastic", m.plastic);
  m.plastic_relaxation_time =
      get_or(j, "plastic_relaxation_time", m.plastic_relaxation_time);
  m.validate();
  return m;
}

NoiseProfile parse_noise(const json& j, const NoiseProfile& base) {
  check_keys(j, "noise",
             {"preset", "f_psm_bias", "f_psm_std", "f_psm_lowpass_hz",
              "encoder_std", "pixel_std", "servo_compliance"});
  NoiseProfile n = base;
  if (j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset == "zero")
      n = NoiseProfile::zero();
    else if (preset == "standard")
      n = NoiseProfile::standard();
    else
      throw ValidationError(
          "config: noise.preset must be zero or standard, got '" + preset +
          "'");
  }
  n.f_psm_bias = get_vec3(j, "f_psm_bias", n.f_psm_bias, "noise");
  n.f_psm_std = get_or(j, "f_psm_std", n.f_psm_std);
  n.f_psm_lowpass_hz = get_or(j, "f_psm_lowpass_hz", n.f_psm_lowpass_hz);
  n.encoder_std = get_or(j, "encoder_std", n.encoder_std);
  n.pixel_std = get_or(j, "pixel_std", n.pixel_std);
  n.servo_compliance = get_or(j, "servo_compliance", n.servo_compliance);
  n.validate();
  return n;
}

CameraRig parse_camera(const json& j, const CameraRig& base) {
  check_keys(j, "camera",
             {"preset", "focal_px", "baseline_m", "image_width",
              "image_height", "position", "target"});
  CameraRig c = base;
  if (j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset == "standard")
      c = CameraRig::standard();
    else if (preset == "shifted")
      c = CameraRig::shifted();
    else
      throw ValidationError(
          "config: camera.preset must be standard or shifted, got '" + preset +
          "'");
  }
  c.focal_px = get_or(j, "focal_px", c.focal_px);
  c.baseline_m = get_or(j, "baseline_m", c.baseline_m);
  c.image_width = get_or(j, "image_width", c.image_width);
  c.image_height = get_or(j, "image_height", c.image_height);
  c.position = get_vec3(j, "position", c.position, "camera");
  c.target = get_vec3(j, "target", c.target, "camera");
  c.validate();
  return c;
}

WorkerModel parse_workers(const json& j, const WorkerModel& base) {
  check_keys(j, "workers", {"n_workers", "flip_rate", "lag_frames"});
  WorkerModel w = base;
  w.n_workers = get_or(j, "n_workers", w.n_workers);
  w.flip_rate = get_or(j, "flip_rate", w.flip_rate);
  w.lag_frames = get_or(j, "lag_frames", w.lag_frames);
  w.validate();
  return w;
}

TrainingConfig parse_training(const json& j, const TrainingConfig& base,
                              const std::string& section) {
  check_keys(j, section,
             {"learning_rate", "l2_weight", "epochs", "batch_size", "seed"});
  TrainingConfig t = base;
  t.learning_rate = get_or(j, "learning_rate", t.learning_rate);
  t.l2_weight = get_or(j, "l2_weight", t.l2_weight);
  t.epochs = get_or(j, "epochs", t.epochs);
  t.batch_size = get_or(j, "batch_size", t.batch_size);
  t.seed = get_or(j, "seed", t.seed);
  return t;
}

ClassifierTrainingConfig parse_classifier_training(
    const json& j, const ClassifierTrainingConfig& base) {
  check_keys(j, "classifier_training",
             {"learning_rate", "l2_weight", "epochs"});
  ClassifierTrainingConfig t = base;
  t.learning_rate = get_or(j, "learning_rate", t.learning_rate);
  t.l2_weight = get_or(j, "l2_weight", t.l2_weight);
  t.epochs = get_or(j, "epochs", t.epochs);
  if (!(t.learning_rate > 0.0))
    throw ValidationError("config: classifier_training.learning_rate must be "
                          "> 0");
  if (t.epochs < 0)
    throw ValidationError("config: classifier_training.epochs must be >= 0");
  return t;
}

ModelKind parse_model_kind(const std::string& s, const std::string& field) {
  if (s == "fcn") return ModelKind::kFcn;
  if (s == "gnn") return ModelKind::kGnn;
  throw ValidationError("config: " + field + " must be fcn or gnn, got '" + s +
                        "'");
}

void parse_scenario_section(const json& j, BenchmarkScenario& s) {
  check_keys(j, "scenario",
             {"name", "duration_s", "sample_rate_hz", "n_train", "n_val",
              "n_test", "contact_source", "force_threshold_n",
              "vote_threshold", "debounce_frames", "methods", "fullvision"});
  s.name = get_or<std::string>(j, "name", s.name);
  s.duration_s = get_or(j, "duration_s", s.duration_s);
  s.sample_rate_hz = get_or(j, "sample_rate_hz", s.sample_rate_hz);
  s.n_train = get_or(j, "n_train", s.n_train);
  s.n_val = get_or(j, "n_val", s.n_val);
  s.n_test = get_or(j, "n_test", s.n_test);
  s.contact_source = get_or<std::string>(j, "contact_source", s.contact_source);
  s.force_threshold_n = get_or(j, "force_threshold_n", s.force_threshold_n);
  s.vote_threshold = get_or(j, "vote_threshold", s.vote_threshold);
  s.debounce_frames = get_or(j, "debounce_frames", s.debounce_frames);
  if (j.contains("methods")) {
    s.methods.clear();
    for (const auto& m : j.at("methods"))
      s.methods.push_back(method_from_name(m.get<std::string>()));
  }
  if (j.contains("fullvision")) {
    const auto& fv = j.at("fullvision");
    check_keys(fv, "scenario.fullvision", {"model", "hidden", "mode",
                                           "training"});
    s.fullvision_model = parse_model_kind(
        get_or<std::string>(fv, "model",
                            s.fullvision_model == ModelKind::kFcn ? "fcn"
                                                                  : "gnn"),
        "scenario.fullvision.model");
    s.fullvision_hidden = get_or(fv, "hidden", s.fullvision_hidden);
    const auto mode = get_or<std::string>(
        fv, "mode",
        s.fullvision_mode == FullVisionMode::kOnsetDisplacement ? "onset"
                                                                : "diff");
    if (mode == "onset")
      s.fullvision_mode = FullVisionMode::kOnsetDisplacement;
    else if (mode == "diff")
      s.fullvision_mode = FullVisionMode::kConsecutiveDifference;
    else
      throw ValidationError(
          "config: scenario.fullvision.mode must be onset or diff");
    if (fv.contains("training"))
      s.fullvision_training =
          parse_training(fv.at("training"), s.fullvision_training,
                         "scenario.fullvision.training");
  }
}

json training_to_json(const TrainingConfig& t) {
  return {{"learning_rate", t.learning_rate},
          {"l2_weight", t.l2_weight},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"seed", t.seed}};
}

}  // namespace

AppConfig default_app_config() {
  AppConfig cfg;
  cfg.scenario.workers.flip_rate = 0.1;
  cfg.scenario.workers.lag_frames = 1;

  cfg.sweep.source = cfg.scenario;
  cfg.sweep.source.name = "sweep-source";
  cfg.sweep.target = cfg.scenario;
  cfg.sweep.target.name = "sweep-target";
  cfg.sweep.target.material = MaterialProfile::realistic();
  cfg.sweep.target.rig = CameraRig::shifted();
  cfg.sweep.target.workers.flip_rate = 0.05;
  cfg.sweep.target.n_train = 2;
  cfg.sweep.target.n_test = 4;
  cfg.sweep.pretrain_training = TrainingConfig::fcn_defaults();
  cfg.sweep.finetune_training = TrainingConfig::fcn_defaults();
  return cfg;
}

AppConfig parse_app_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  check_keys(root, "(root)",
             {"seed", "simulate", "scenario", "material", "noise", "camera",
              "workers", "training", "train_model", "train_hidden",
              "classifier_training", "sweep"});

  AppConfig cfg = default_app_config();
  const auto seed = get_or<std::uint64_t>(root, "seed", 1);
  cfg.scenario.seed = seed;

  if (root.contains("material"))
    cfg.scenario.material = parse_material(root.at("material"),
                                           cfg.scenario.material);
  if (root.contains("noise"))
    cfg.scenario.noise = parse_noise(root.at("noise"), cfg.scenario.noise);
  if (root.contains("camera"))
    cfg.scenario.rig = parse_camera(root.at("camera"), cfg.scenario.rig);
  if (root.contains("workers"))
    cfg.scenario.workers =
        parse_workers(root.at("workers"), cfg.scenario.workers);
  if (root.contains("scenario"))
    parse_scenario_section(root.at("scenario"), cfg.scenario);
  if (root.contains("simulate")) {
    check_keys(root.at("simulate"), "simulate", {"n_demos"});
    cfg.n_demos = get_or(root.at("simulate"), "n_demos", cfg.n_demos);
    if (cfg.n_demos < 1)
      throw ValidationError("config: simulate.n_demos must be >= 1");
  }
  if (root.contains("train_model"))
    cfg.train_model = parse_model_kind(root.at("train_model").get<std::string>(),
                                       "train_model");
  cfg.train_hidden = get_or(root, "train_hidden", cfg.train_hidden);
  if (root.contains("training"))
    cfg.training = parse_training(root.at("training"), cfg.training,
                                  "training");
  if (root.contains("classifier_training"))
    cfg.classifier_training = parse_classifier_training(
        root.at("classifier_training"), cfg.classifier_training);
  cfg.training.seed = get_or(root.contains("training") ? root.at("training")
                                                       : json::object(),
                             "seed", seed);
  cfg.scenario.classifier_training = cfg.classifier_training;

  // The sweep shares the main scenario unless overridden.
  cfg.sweep.source = cfg.scenario;
  cfg.sweep.source.name = "sweep-source";
  cfg.sweep.target = cfg.scenario;
  cfg.sweep.target.name = "sweep-target";
  cfg.sweep.target.material = MaterialProfile::realistic();
  cfg.sweep.target.rig = CameraRig::shifted();
  cfg.sweep.target.workers.flip_rate = 0.05;
  cfg.sweep.target.n_train = 2;
  cfg.sweep.target.n_test = 4;
  cfg.sweep.seed = seed;
  cfg.sweep.classifier_training = cfg.classifier_training;

  if (root.contains("sweep")) {
    const auto& sj = root.at("sweep");
    check_keys(sj, "sweep",
               {"task", "sizes", "repeats", "arms", "position_model",
                "position_hidden", "pretrain_training", "finetune_training",
                "target"});
    cfg.sweep.task = get_or<std::string>(sj, "task", cfg.sweep.task);
    if (sj.contains("sizes"))
      cfg.sweep.sizes = sj.at("sizes").get<std::vector<int>>();
    cfg.sweep.repeats = get_or(sj, "repeats", cfg.sweep.repeats);
    if (sj.contains("arms")) {
      cfg.sweep.run_pretrained_arm = false;
      cfg.sweep.run_scratch_arm = false;
      for (const auto& a : sj.at("arms")) {
        const auto arm = a.get<std::string>();
        if (arm == "pretrained")
          cfg.sweep.run_pretrained_arm = true;
        else if (arm == "scratch")
          cfg.sweep.run_scratch_arm = true;
        else
          throw ValidationError(
              "config: sweep.arms entries must be pretrained or scratch");
      }
    }
    if (sj.contains("position_model"))
      cfg.sweep.position_model = parse_model_kind(
          sj.at("position_model").get<std::string>(), "sweep.position_model");
    cfg.sweep.position_hidden =
        get_or(sj, "position_hidden", cfg.sweep.position_hidden);
    if (sj.contains("pretrain_training"))
      cfg.sweep.pretrain_training =
          parse_training(sj.at("pretrain_training"),
                         cfg.sweep.pretrain_training, "sweep.pretrain_training");
    if (sj.contains("finetune_training"))
      cfg.sweep.finetune_training =
          parse_training(sj.at("finetune_training"),
                         cfg.sweep.finetune_training, "sweep.finetune_training");
    if (sj.contains("target")) {
      const auto& tj = sj.at("target");
      check_keys(tj, "sweep.target",
                 {"material", "noise", "camera", "workers", "scenario"});
      if (tj.contains("material"))
        cfg.sweep.target.material =
            parse_material(tj.at("material"), cfg.sweep.target.material);
      if (tj.contains("noise"))
        cfg.sweep.target.noise =
            parse_noise(tj.at("noise"), cfg.sweep.target.noise);
      if (tj.contains("camera"))
        cfg.sweep.target.rig =
            parse_camera(tj.at("camera"), cfg.sweep.target.rig);
      if (tj.contains("workers"))
        cfg.sweep.target.workers =
            parse_workers(tj.at("workers"), cfg.sweep.target.workers);
      if (tj.contains("scenario"))
        parse_scenario_section(tj.at("scenario"), cfg.sweep.target);
    }
    cfg.sweep.pretrain_training.seed = seed;
    cfg.sweep.finetune_training.seed = seed;
  }
  return cfg;
}

std::string dump_default_config() {
  const AppConfig cfg = default_app_config();
  const auto& s = cfg.scenario;
  json root;
  root["seed"] = 1;
  root["simulate"] = {{"n_demos", cfg.n_demos}};
  json methods = json::array();
  for (Method m : s.methods) methods.push_back(method_name(m));
  root["scenario"] = {{"name", s.name},
                      {"duration_s", s.duration_s},
                      {"sample_rate_hz", s.sample_rate_hz},
                      {"n_train", s.n_train},
                      {"n_val", s.n_val},
                      {"n_test", s.n_test},
                      {"contact_source", s.contact_source},
                      {"force_threshold_n", s.force_threshold_n},
                      {"vote_threshold", s.vote_threshold},
                      {"debounce_frames", s.debounce_frames},
                      {"methods", methods},
                      {"fullvision",
                       {{"model", "fcn"},
                        {"hidden", s.fullvision_hidden},
                        {"mode", "onset"},
                        {"training", training_to_json(s.fullvision_training)}}}};
  root["material"] = {{"name", s.material.name},
                      {"k_x", s.material.k_x},
                      {"k_y", s.material.k_y},
                      {"k_z_plus", s.material.k_z_plus},
                      {"k_z_minus", s.material.k_z_minus},
                      {"stiffness_jitter", s.material.stiffness_jitter},
                      {"plastic", s.material.plastic},
                      {"plastic_relaxation_time",
                       s.material.plastic_relaxation_time}};
  root["noise"] = {{"f_psm_bias",
                    {s.noise.f_psm_bias.x(), s.noise.f_psm_bias.y(),
                     s.noise.f_psm_bias.z()}},
                   {"f_psm_std", s.noise.f_psm_std},
                   {"f_psm_lowpass_hz", s.noise.f_psm_lowpass_hz},
                   {"encoder_std", s.noise.encoder_std},
                   {"pixel_std", s.noise.pixel_std},
                   {"servo_compliance", s.noise.servo_compliance}};
  root["camera"] = {{"focal_px", s.rig.focal_px},
                    {"baseline_m", s.rig.baseline_m},
                    {"image_width", s.rig.image_width},
                    {"image_height", s.rig.image_height},
                    {"position",
                     {s.rig.position.x(), s.rig.position.y(),
                      s.rig.position.z()}},
                    {"target",
                     {s.rig.target.x(), s.rig.target.y(), s.rig.target.z()}}};
  root["workers"] = {{"n_workers", s.workers.n_workers},
                     {"flip_rate", s.workers.flip_rate},
                     {"lag_frames", s.workers.lag_frames}};
  root["train_model"] = cfg.train_model == ModelKind::kFcn ? "fcn" : "gnn";
  root["train_hidden"] = cfg.train_hidden;
  root["training"] = training_to_json(cfg.training);
  root["classifier_training"] = {
      {"learning_rate", cfg.classifier_training.learning_rate},
      {"l2_weight", cfg.classifier_training.l2_weight},
      {"epochs", cfg.classifier_training.epochs}};
  root["sweep"] = {{"task", cfg.sweep.task},
                   {"sizes", cfg.sweep.sizes},
                   {"repeats", cfg.sweep.repeats},
                   {"arms", json::array({"pretrained"})},
                   {"position_model", "fcn"},
                   {"position_hidden", cfg.sweep.position_hidden},
                   {"pretrain_training",
                    training_to_json(cfg.sweep.pretrain_training)},
                   {"finetune_training",
                    training_to_json(cfg.sweep.finetune_training)},
                   {"target",
                    {{"material", {{"preset", "realistic"}}},
                     {"camera", {{"preset", "shifted"}}}}}};
  return root.dump(2) + "\n";
}

}  // namespace ccfe
