#include "ccfe/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ccfe::io {

using nlohmann::json;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::filesystem::path& file,
                     const std::string& text) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + file.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + file.string());
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw ValidationError("cannot open for reading: " + file.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

namespace {

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

std::string demo_filename(const Demonstration& demo) {
  return "demo_" + demo.id + ".txt";
}

class NumberReader {
public:
  NumberReader(const std::string& line, std::size_t line_no,
               const std::string& file)
      : cursor_(line.c_str()), line_no_(line_no), file_(file) {}

  double next() {
    char* end = nullptr;
    const double v = std::strtod(cursor_, &end);
    if (end == cursor_)
      throw ValidationError(file_ + ":" + std::to_string(line_no_) +
                            ": expected a number");
    cursor_ = end;
    return v;
  }

  bool next_bool() {
    const double v = next();
    return v != 0.0;
  }

private:
  const char* cursor_;
  std::size_t line_no_;
  std::string file_;
};

}  // namespace

void write_demonstrations(const std::vector<Demonstration>& demos,
                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["format_version"] = 1;
  manifest["units"] = {{"time", "s"}, {"position", "m"}, {"force", "N"}};
  manifest["demos"] = json::array();

  for (const auto& demo : demos) {
    demo.validate();
    const int n_workers =
        demo.has_crowd_labels()
            ? static_cast<int>(demo.frames.front().crowd_labels->size())
            : 0;
    json entry;
    entry["id"] = demo.id;
    entry["file"] = demo_filename(demo);
    entry["material_profile"] = demo.material_profile;
    entry["sample_rate_hz"] = demo.sample_rate_hz;
    entry["n_frames"] = demo.frames.size();
    entry["channels"] = {{"keypoints", demo.has_keypoints()},
                         {"contact_gt", demo.has_contact_gt()},
                         {"crowd_labels", n_workers}};
    manifest["demos"].push_back(entry);

    std::ostringstream os;
    for (const auto& fr : demo.frames) {
      os << fmt17(fr.t);
      for (const auto* v : {&fr.p, &fr.p_des, &fr.f_psm, &fr.f_gt})
        for (int a = 0; a < 3; ++a) os << ' ' << fmt17((*v)[a]);
      if (fr.contact_gt) os << ' ' << (*fr.contact_gt ? 1 : 0);
      if (fr.crowd_labels)
        for (bool b : *fr.crowd_labels) os << ' ' << (b ? 1 : 0);
      if (fr.keypoints) {
        for (const auto& pt : fr.keypoints->left)
          os << ' ' << fmt17(pt.x()) << ' ' << fmt17(pt.y());
        for (const auto& pt : fr.keypoints->right)
          os << ' ' << fmt17(pt.x()) << ' ' << fmt17(pt.y());
      }
      os << '\n';
    }
    write_text_file(dir / demo_filename(demo), os.str());
  }
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<Demonstration> read_demonstrations(
    const std::filesystem::path& dir) {
  const json manifest =
      parse_json(read_text_file(dir / "manifest.json"), "manifest.json");
  if (manifest.value("format_version", 0) != 1)
    throw ValidationError("manifest.json: unsupported format_version");
  std::vector<Demonstration> demos;
  for (const auto& entry : manifest.at("demos")) {
    Demonstration demo;
    demo.id = entry.at("id").get<std::string>();
    demo.material_profile = entry.at("material_profile").get<std::string>();
    demo.sample_rate_hz = entry.at("sample_rate_hz").get<double>();
    const auto n_frames = entry.at("n_frames").get<std::size_t>();
    const auto& channels = entry.at("channels");
    const bool has_kp = channels.at("keypoints").get<bool>();
    const bool has_cg = channels.at("contact_gt").get<bool>();
    const int n_workers = channels.at("crowd_labels").get<int>();

    const std::string file = entry.at("file").get<std::string>();
    std::istringstream is(read_text_file(dir / file));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.empty()) continue;
      NumberReader r(line, line_no, file);
      DemonstrationFrame fr;
      fr.t = r.next();
      for (auto* v : {&fr.p, &fr.p_des, &fr.f_psm, &fr.f_gt})
        for (int a = 0; a < 3; ++a) (*v)[a] = r.next();
      if (has_cg) fr.contact_gt = r.next_bool();
      if (n_workers > 0) {
        std::vector<bool> crowd(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) crowd[w] = r.next_bool();
        fr.crowd_labels = std::move(crowd);
      }
      if (has_kp) {
        StereoKeypoints kp;
        for (auto* side : {&kp.left, &kp.right})
          for (auto& pt : *side) {
            pt.x() = r.next();
            pt.y() = r.next();
          }
        fr.keypoints = kp;
      }
      demo.frames.push_back(std::move(fr));
    }
    if (demo.frames.size() != n_frames)
      throw ValidationError(file + ": frame count " +
                            std::to_string(demo.frames.size()) +
                            " does not match manifest " +
                            std::to_string(n_frames));
    demo.validate();
    demos.push_back(std::move(demo));
  }
  return demos;
}

namespace {

std::string bools_to_string(const BoolSeries& b) {
  std::string s;
  s.reserve(b.size());
  for (bool v : b) s.push_back(v ? '1' : '0');
  return s;
}

BoolSeries string_to_bools(const std::string& s) {
  BoolSeries b;
  b.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1')
      throw ValidationError("contact string: expected 0/1 digits");
    b.push_back(c == '1');
  }
  return b;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  return Vec3(j.at(0).get<double>(), j.at(1).get<double>(),
              j.at(2).get<double>());
}

json mean_std_to_json(const MeanStd& m) {
  json j;
  j["mean"] = m.mean;
  j["std"] = m.stddev ? json(*m.stddev) : json(nullptr);
  j["count"] = m.count;
  return j;
}

MeanStd mean_std_from_json(const json& j) {
  MeanStd m;
  m.mean = j.at("mean").get<double>();
  if (!j.at("std").is_null()) m.stddev = j.at("std").get<double>();
  m.count = j.at("count").get<std::size_t>();
  return m;
}

}  // namespace

void write_contact_signals(
    const std::vector<std::pair<std::string, ContactSignal>>& signals,
    const std::string& source, const std::filesystem::path& file) {
  json root;
  root["format_version"] = 1;
  root["type"] = "contact_signals";
  root["source"] = source;
  root["demos"] = json::array();
  for (const auto& [id, sig] : signals) {
    json j;
    j["id"] = id;
    j["contact"] = bools_to_string(sig.contact);
    if (!sig.probability.empty()) j["probability"] = sig.probability;
    root["demos"].push_back(j);
  }
  write_text_file(file, root.dump(2) + "\n");
}

std::vector<std::pair<std::string, ContactSignal>> read_contact_signals(
    const std::filesystem::path& file) {
  const json root = parse_json(read_text_file(file), file.string());
  if (root.value("type", "") != "contact_signals")
    throw ValidationError(file.string() + ": not a contact_signals file");
  std::vector<std::pair<std::string, ContactSignal>> out;
  for (const auto& j : root.at("demos")) {
    ContactSignal sig = ContactSignal::from_bools(
        string_to_bools(j.at("contact").get<std::string>()));
    if (j.contains("probability"))
      sig.probability = j.at("probability").get<std::vector<double>>();
    out.emplace_back(j.at("id").get<std::string>(), std::move(sig));
  }
  return out;
}

void write_fits(const std::vector<FitRecord>& fits,
                const std::filesystem::path& file) {
  json root;
  root["format_version"] = 1;
  root["type"] = "fits";
  root["fits"] = json::array();
  for (const auto& f : fits) {
    json j;
    j["demo_id"] = f.demo_id;
    j["force_source"] = f.force_source;
    if (f.has_stiffness) {
      j["stiffness"] = {{"k_x", f.stiffness.k_x},
                        {"k_y", f.stiffness.k_y},
                        {"k_z_plus", f.stiffness.k_z_plus},
                        {"k_z_minus", f.stiffness.k_z_minus},
                        {"c", vec3_to_json(f.stiffness.c)},
                        {"fit_residual", f.stiffness.fit_residual}};
    }
    if (f.has_posdiff) {
      j["posdiff"] = {{"d", vec3_to_json(f.posdiff.d)},
                      {"e", vec3_to_json(f.posdiff.e)}};
    }
    root["fits"].push_back(j);
  }
  write_text_file(file, root.dump(2) + "\n");
}

std::vector<FitRecord> read_fits(const std::filesystem::path& file) {
  const json root = parse_json(read_text_file(file), file.string());
  if (root.value("type", "") != "fits")
    throw ValidationError(file.string() + ": not a fits file");
  std::vector<FitRecord> out;
  for (const auto& j : root.at("fits")) {
    FitRecord f;
    f.demo_id = j.at("demo_id").get<std::string>();
    f.force_source = j.at("force_source").get<std::string>();
    if (j.contains("stiffness")) {
      const auto& s = j.at("stiffness");
      f.has_stiffness = true;
      f.stiffness.k_x = s.at("k_x").get<double>();
      f.stiffness.k_y = s.at("k_y").get<double>();
      f.stiffness.k_z_plus = s.at("k_z_plus").get<double>();
      f.stiffness.k_z_minus = s.at("k_z_minus").get<double>();
      f.stiffness.c = vec3_from_json(s.at("c"));
      f.stiffness.fit_residual = s.at("fit_residual").get<double>();
    }
    if (j.contains("posdiff")) {
      f.has_posdiff = true;
      f.posdiff.d = vec3_from_json(j.at("posdiff").at("d"));
      f.posdiff.e = vec3_from_json(j.at("posdiff").at("e"));
    }
    out.push_back(std::move(f));
  }
  return out;
}

void write_classifier(const ContactClassifierParams& params,
                      const std::filesystem::path& file) {
  json root;
  root["format_version"] = 1;
  root["type"] = "contact_classifier";
  root["weights"] = params.weights;
  root["bias"] = params.bias;
  root["feature_spec"] = params.feature_spec;
  root["final_loss"] = params.final_loss;
  write_text_file(file, root.dump(2) + "\n");
}

ContactClassifierParams read_classifier(const std::filesystem::path& file) {
  const json root = parse_json(read_text_file(file), file.string());
  if (root.value("type", "") != "contact_classifier")
    throw ValidationError(file.string() + ": not a contact_classifier file");
  ContactClassifierParams p;
  p.weights = root.at("weights").get<std::vector<double>>();
  p.bias = root.at("bias").get<double>();
  p.feature_spec = root.at("feature_spec").get<std::vector<std::string>>();
  p.final_loss = root.at("final_loss").get<double>();
  if (p.weights.size() != p.feature_spec.size())
    throw ValidationError(file.string() +
                          ": weight count does not match feature_spec");
  return p;
}

void write_estimator(const PositionEstimatorParams& params,
                     const std::filesystem::path& file) {
  json root;
  root["format_version"] = 1;
  root["type"] = "position_estimator";
  root["model_kind"] = params.kind == ModelKind::kFcn ? "fcn" : "gnn";
  root["activation"] =
      params.activation == Activation::kRelu ? "relu" : "identity";
  root["hidden_units"] = params.hidden_units();
  root["meta"] = {{"seed", params.meta.seed},
                  {"epochs", params.meta.epochs},
                  {"final_loss", params.meta.final_loss}};
  root["blocks"] = json::array();
  auto& mut = const_cast<PositionEstimatorParams&>(params);
  for (const auto& blk : param_blocks(mut)) {
    json j;
    j["name"] = blk.name;
    j["rows"] = blk.block->rows();
    j["cols"] = blk.block->cols();
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(blk.block->size()));
    for (int r = 0; r < blk.block->rows(); ++r)
      for (int c = 0; c < blk.block->cols(); ++c)
        data.push_back((*blk.block)(r, c));
    j["data"] = data;
    root["blocks"].push_back(std::move(j));
  }
  write_text_file(file, root.dump() + "\n");
}

PositionEstimatorParams read_estimator(const std::filesystem::path& file) {
  const json root = parse_json(read_text_file(file), file.string());
  if (root.value("type", "") != "position_estimator")
    throw ValidationError(file.string() + ": not a position_estimator file");
  if (root.value("format_version", 0) != 1)
    throw ValidationError(file.string() + ": unsupported format_version");
  const std::string kind = root.at("model_kind").get<std::string>();
  const int hidden = root.at("hidden_units").get<int>();
  PositionEstimatorParams params = kind == "fcn"
                                       ? make_fcn_params(0, hidden)
                                       : make_gnn_params(0, hidden);
  params.activation = root.at("activation").get<std::string>() == "relu"
                          ? Activation::kRelu
                          : Activation::kIdentity;
  params.meta.seed = root.at("meta").at("seed").get<std::uint64_t>();
  params.meta.epochs = root.at("meta").at("epochs").get<int>();
  params.meta.final_loss = root.at("meta").at("final_loss").get<double>();

  const auto& blocks = root.at("blocks");
  auto refs = param_blocks(params);
  if (blocks.size() != refs.size())
    throw ValidationError(file.string() + ": block count mismatch");
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto& j = blocks[i];
    if (j.at("name").get<std::string>() != refs[i].name)
      throw ValidationError(file.string() + ": unexpected block '" +
                            j.at("name").get<std::string>() + "'");
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    if (rows != refs[i].block->rows() || cols != refs[i].block->cols())
      throw ValidationError(file.string() + ": block '" + refs[i].name +
                            "' has unexpected shape");
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw ValidationError(file.string() + ": block '" + refs[i].name +
                            "' has wrong element count");
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) (*refs[i].block)(r, c) = data[k++];
  }
  return params;
}

void write_force_series(
    const std::vector<std::pair<std::string, ForceSeries>>& series,
    const std::filesystem::path& file) {
  json root;
  root["format_version"] = 1;
  root["type"] = "force_series";
  root["demos"] = json::array();
  for (const auto& [id, fs] : series) {
    json j;
    j["id"] = id;
    j["method"] = method_name(fs.method);
    j["source_tag"] = fs.source_tag;
    json rows = json::array();
    for (const auto& v : fs.f) rows.push_back(vec3_to_json(v));
    j["f"] = std::move(rows);
    root["demos"].push_back(std::move(j));
  }
  write_text_file(file, root.dump() + "\n");
}

std::vector<std::pair<std::string, ForceSeries>> read_force_series(
    const std::filesystem::path& file) {
  const json root = parse_json(read_text_file(file), file.string());
  if (root.value("type", "") != "force_series")
    throw ValidationError(file.string() + ": not a force_series file");
  std::vector<std::pair<std::string, ForceSeries>> out;
  for (const auto& j : root.at("demos")) {
    ForceSeries fs;
    fs.method = method_from_name(j.at("method").get<std::string>());
    fs.source_tag = j.at("source_tag").get<std::string>();
    for (const auto& row : j.at("f")) fs.f.push_back(vec3_from_json(row));
    out.emplace_back(j.at("id").get<std::string>(), std::move(fs));
  }
  return out;
}

namespace {

json nrmse_to_json(const NrmseResult& r) {
  json j;
  j["norm"] = r.norm;
  j["x"] = r.per_axis.x();
  j["y"] = r.per_axis.y();
  j["z"] = r.per_axis.z();
  j["degenerate"] = {r.axis_degenerate[0], r.axis_degenerate[1],
                     r.axis_degenerate[2]};
  j["norm_degenerate"] = r.norm_degenerate;
  return j;
}

NrmseResult nrmse_from_json(const json& j) {
  NrmseResult r;
  r.norm = j.at("norm").get<double>();
  r.per_axis = Vec3(j.at("x").get<double>(), j.at("y").get<double>(),
                    j.at("z").get<double>());
  for (int a = 0; a < 3; ++a)
    r.axis_degenerate[static_cast<std::size_t>(a)] =
        j.at("degenerate").at(a).get<bool>();
  r.norm_degenerate = j.at("norm_degenerate").get<bool>();
  return r;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json root;
  root["format_version"] = 1;
  root["type"] = "eval_report";
  root["scenario"] = report.scenario_name;
  root["seed"] = report.seed;
  root["n_test_demos"] = report.n_test_demos;
  root["methods"] = json::array();
  for (const auto& m : report.methods)
    root["methods"].push_back({{"method", m.method},
                               {"norm", mean_std_to_json(m.norm)},
                               {"x", mean_std_to_json(m.x)},
                               {"y", mean_std_to_json(m.y)},
                               {"z", mean_std_to_json(m.z)}});
  root["contact_sources"] = json::array();
  for (const auto& c : report.contact_sources)
    root["contact_sources"].push_back(
        {{"source", c.source},
         {"accuracy", mean_std_to_json(c.accuracy)},
         {"precision", mean_std_to_json(c.precision)},
         {"recall", mean_std_to_json(c.recall)},
         {"f1", mean_std_to_json(c.f1)}});
  root["stiffness"] = json::array();
  for (const auto& s : report.stiffness)
    root["stiffness"].push_back(
        {{"method", s.method},
         {"k_x", mean_std_to_json(s.k_x)},
         {"k_y", mean_std_to_json(s.k_y)},
         {"k_z_plus", mean_std_to_json(s.k_z_plus)},
         {"k_z_minus", mean_std_to_json(s.k_z_minus)},
         {"delta_vs_reference", vec3_to_json(s.delta_vs_reference)},
         {"delta_z_minus_vs_reference", s.delta_z_minus_vs_reference},
         {"rel_error",
          {s.rel_error_x, s.rel_error_y, s.rel_error_z_plus,
           s.rel_error_z_minus}}});
  root["position"] = json::array();
  for (const auto& p : report.position)
    root["position"].push_back(
        {{"model", p.model},
         {"overall", mean_std_to_json(p.overall)},
         {"x", mean_std_to_json(p.x)},
         {"y", mean_std_to_json(p.y)},
         {"z", mean_std_to_json(p.z)},
         {"rescaled_overall", mean_std_to_json(p.rescaled_overall)}});
  root["per_demo"] = json::array();
  for (const auto& row : report.per_demo)
    root["per_demo"].push_back({{"demo", row.demo_id},
                                {"method", row.method},
                                {"nrmse", nrmse_to_json(row.value)}});
  return root.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  const json root = parse_json(text, "report");
  if (root.value("type", "") != "eval_report")
    throw ValidationError("report: not an eval_report document");
  EvalReport report;
  report.scenario_name = root.at("scenario").get<std::string>();
  report.seed = root.at("seed").get<std::uint64_t>();
  report.n_test_demos = root.at("n_test_demos").get<std::size_t>();
  for (const auto& j : root.at("methods")) {
    MethodRow m;
    m.method = j.at("method").get<std::string>();
    m.norm = mean_std_from_json(j.at("norm"));
    m.x = mean_std_from_json(j.at("x"));
    m.y = mean_std_from_json(j.at("y"));
    m.z = mean_std_from_json(j.at("z"));
    report.methods.push_back(std::move(m));
  }
  for (const auto& j : root.at("contact_sources")) {
    ContactSourceRow c;
    c.source = j.at("source").get<std::string>();
    c.accuracy = mean_std_from_json(j.at("accuracy"));
    c.precision = mean_std_from_json(j.at("precision"));
    c.recall = mean_std_from_json(j.at("recall"));
    c.f1 = mean_std_from_json(j.at("f1"));
    report.contact_sources.push_back(std::move(c));
  }
  for (const auto& j : root.at("stiffness")) {
    StiffnessRow s;
    s.method = j.at("method").get<std::string>();
    s.k_x = mean_std_from_json(j.at("k_x"));
    s.k_y = mean_std_from_json(j.at("k_y"));
    s.k_z_plus = mean_std_from_json(j.at("k_z_plus"));
    s.k_z_minus = mean_std_from_json(j.at("k_z_minus"));
    s.delta_vs_reference = vec3_from_json(j.at("delta_vs_reference"));
    s.delta_z_minus_vs_reference =
        j.at("delta_z_minus_vs_reference").get<double>();
    s.rel_error_x = j.at("rel_error").at(0).get<double>();
    s.rel_error_y = j.at("rel_error").at(1).get<double>();
    s.rel_error_z_plus = j.at("rel_error").at(2).get<double>();
    s.rel_error_z_minus = j.at("rel_error").at(3).get<double>();
    report.stiffness.push_back(std::move(s));
  }
  for (const auto& j : root.at("position")) {
    PositionRow p;
    p.model = j.at("model").get<std::string>();
    p.overall = mean_std_from_json(j.at("overall"));
    p.x = mean_std_from_json(j.at("x"));
    p.y = mean_std_from_json(j.at("y"));
    p.z = mean_std_from_json(j.at("z"));
    p.rescaled_overall = mean_std_from_json(j.at("rescaled_overall"));
    report.position.push_back(std::move(p));
  }
  for (const auto& j : root.at("per_demo")) {
    PerDemoNrmse row;
    row.demo_id = j.at("demo").get<std::string>();
    row.method = j.at("method").get<std::string>();
    row.value = nrmse_from_json(j.at("nrmse"));
    report.per_demo.push_back(std::move(row));
  }
  return report;
}

namespace {

std::string cell(const MeanStd& m) {
  char buf[64];
  if (m.stddev)
    std::snprintf(buf, sizeof(buf), "%.3f \xC2\xB1 %.3f", m.mean, *m.stddev);
  else
    std::snprintf(buf, sizeof(buf), "%.3f", m.mean);
  return buf;
}

std::string cell_k(const MeanStd& m) {
  char buf[64];
  if (m.stddev)
    std::snprintf(buf, sizeof(buf), "%.0f \xC2\xB1 %.0f", m.mean, *m.stddev);
  else
    std::snprintf(buf, sizeof(buf), "%.0f", m.mean);
  return buf;
}

void render_row(std::ostringstream& os, const std::string& head,
                const std::vector<std::string>& cells, int head_w,
                int cell_w) {
  os << head;
  for (std::size_t i = head.size(); i < static_cast<std::size_t>(head_w); ++i)
    os << ' ';
  for (const auto& c : cells) {
    os << c;
    // The +/- glyph is two bytes; pad on display width.
    std::size_t width = c.size();
    if (c.find("\xC2\xB1") != std::string::npos) width -= 1;
    for (std::size_t i = width; i < static_cast<std::size_t>(cell_w); ++i)
      os << ' ';
  }
  os << '\n';
}

}  // namespace

std::string render_report_text(const EvalReport& report) {
  std::ostringstream os;
  os << "Scenario: " << report.scenario_name << " (seed " << report.seed
     << ", " << report.n_test_demos << " test demos)\n";
  constexpr int kHead = 14, kCell = 18;
  if (!report.methods.empty()) {
    os << "\nForce NRMSE, mean \xC2\xB1 std over demos\n";
    render_row(os, "Method", {"Norm", "X", "Y", "Z"}, kHead, kCell);
    for (const auto& m : report.methods)
      render_row(os, m.method,
                 {cell(m.norm), cell(m.x), cell(m.y), cell(m.z)}, kHead,
                 kCell);
  }
  if (!report.contact_sources.empty()) {
    os << "\nContact detection\n";
    render_row(os, "Source", {"Accuracy", "Precision", "Recall", "F1"}, kHead,
               kCell);
    for (const auto& c : report.contact_sources)
      render_row(os, c.source,
                 {cell(c.accuracy), cell(c.precision), cell(c.recall),
                  cell(c.f1)},
                 kHead, kCell);
  }
  if (!report.stiffness.empty()) {
    os << "\nEstimated stiffness (N/m)\n";
    render_row(os, "Method", {"X", "Y", "Z+", "Z-"}, kHead, kCell);
    for (const auto& s : report.stiffness)
      render_row(os, s.method,
                 {cell_k(s.k_x), cell_k(s.k_y), cell_k(s.k_z_plus),
                  cell_k(s.k_z_minus)},
                 kHead, kCell);
    const auto& last = report.stiffness;
    if (last.size() > 1) {
      for (std::size_t i = 1; i < last.size(); ++i) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "%s vs %s mean delta: %+.0f, %+.0f, %+.0f, %+.0f N/m\n",
                      last[i].method.c_str(), last[0].method.c_str(),
                      last[i].delta_vs_reference.x(),
                      last[i].delta_vs_reference.y(),
                      last[i].delta_vs_reference.z(),
                      last[i].delta_z_minus_vs_reference);
        os << buf;
      }
    }
  }
  if (!report.position.empty()) {
    os << "\nNormalized position RMSE\n";
    render_row(os, "Model", {"Overall", "X", "Y", "Z", "Rescaled (m)"}, kHead,
               kCell);
    for (const auto& p : report.position) {
      char rescaled[64];
      if (p.rescaled_overall.stddev)
        std::snprintf(rescaled, sizeof(rescaled), "%.4f \xC2\xB1 %.4f",
                      p.rescaled_overall.mean, *p.rescaled_overall.stddev);
      else
        std::snprintf(rescaled, sizeof(rescaled), "%.4f",
                      p.rescaled_overall.mean);
      render_row(os, p.model,
                 {cell(p.overall), cell(p.x), cell(p.y), cell(p.z), rescaled},
                 kHead, kCell);
    }
  }
  return os.str();
}

std::string render_report_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "demo,method,nrmse_norm,nrmse_x,nrmse_y,nrmse_z\n";
  for (const auto& row : report.per_demo)
    os << row.demo_id << ',' << row.method << ',' << fmt17(row.value.norm)
       << ',' << fmt17(row.value.per_axis.x()) << ','
       << fmt17(row.value.per_axis.y()) << ','
       << fmt17(row.value.per_axis.z()) << '\n';
  return os.str();
}

std::string sweeps_to_json(const std::vector<SweepReport>& sweeps) {
  json root;
  root["format_version"] = 1;
  root["type"] = "sweep_report";
  root["sweeps"] = json::array();
  for (const auto& s : sweeps) {
    json j;
    j["task"] = s.task;
    j["arm"] = s.arm;
    j["metric"] = s.metric;
    j["zero_shot"] = s.zero_shot ? json(*s.zero_shot) : json(nullptr);
    j["points"] = json::array();
    for (const auto& p : s.points)
      j["points"].push_back({{"size", p.size},
                             {"values", p.values},
                             {"stats", mean_std_to_json(p.stats)}});
    root["sweeps"].push_back(std::move(j));
  }
  return root.dump(2) + "\n";
}

std::vector<SweepReport> sweeps_from_json(const std::string& text) {
  const json root = parse_json(text, "sweep report");
  if (root.value("type", "") != "sweep_report")
    throw ValidationError("sweep report: wrong document type");
  std::vector<SweepReport> out;
  for (const auto& j : root.at("sweeps")) {
    SweepReport s;
    s.task = j.at("task").get<std::string>();
    s.arm = j.at("arm").get<std::string>();
    s.metric = j.at("metric").get<std::string>();
    if (!j.at("zero_shot").is_null())
      s.zero_shot = j.at("zero_shot").get<double>();
    for (const auto& pj : j.at("points")) {
      SweepPoint p;
      p.size = pj.at("size").get<int>();
      p.values = pj.at("values").get<std::vector<double>>();
      p.stats = mean_std_from_json(pj.at("stats"));
      s.points.push_back(std::move(p));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string render_sweeps_csv(const std::vector<SweepReport>& sweeps) {
  std::ostringstream os;
  os << "task,arm,metric,size,repeat,value\n";
  for (const auto& s : sweeps)
    for (const auto& p : s.points)
      for (std::size_t r = 0; r < p.values.size(); ++r)
        os << s.task << ',' << s.arm << ',' << s.metric << ',' << p.size << ','
           << r << ',' << fmt17(p.values[r]) << '\n';
  return os.str();
}

}  // namespace ccfe::io
