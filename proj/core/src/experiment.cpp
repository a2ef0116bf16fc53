#include "mvbridge/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mvbridge/bridge.hpp"
#include "mvbridge/metrics.hpp"
#include "mvbridge/rng.hpp"

#include "json.hpp"

namespace mvbridge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_known_keys(const json& j, const std::set<std::string>& known, const std::string& scope) {
  for (const auto& [key, _] : j.items())
    if (!known.count(key))
      throw std::invalid_argument("config: unknown key '" + (scope.empty() ? key : scope + "." + key) + "'");
}

json model_to_json(const ModelConfig& m) {
  return {{"patch", m.patch},     {"token_dim", m.token_dim},           {"heads", m.heads},
          {"layers", m.layers},   {"mlp_dim", m.mlp_dim},               {"time_embed_dim", m.time_embed_dim},
          {"max_views", m.max_views}};
}

ModelConfig model_from_json(const json& j) {
  check_known_keys(j, {"patch", "token_dim", "heads", "layers", "mlp_dim", "time_embed_dim", "max_views"}, "model");
  ModelConfig m;
  m.patch = j.value("patch", m.patch);
  m.token_dim = j.value("token_dim", m.token_dim);
  m.heads = j.value("heads", m.heads);
  m.layers = j.value("layers", m.layers);
  m.mlp_dim = j.value("mlp_dim", m.mlp_dim);
  m.time_embed_dim = j.value("time_embed_dim", m.time_embed_dim);
  m.max_views = j.value("max_views", m.max_views);
  return m;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["scenes"] = c.scenes;
  j["resolution"] = c.resolution;
  j["severities"] = c.severities;
  j["splits"] = c.splits;
  j["views_per_set"] = c.views_per_set;
  j["refs_per_set"] = c.refs_per_set;
  j["jitter_radians"] = c.jitter_radians;
  j["jitter_units"] = c.jitter_units;
  j["model"] = model_to_json(c.model);
  j["loss"] = {{"lambda_lpips", c.lambda_lpips}, {"lambda_gram", c.lambda_gram}};
  j["sigma"] = c.sigma;
  j["optimizer"] = {{"learning_rate", c.optimizer.learning_rate},
                    {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"epsilon", c.optimizer.epsilon}};
  j["steps"] = c.steps;
  j["extractor_seed"] = c.extractor_seed;
  j["checkpoint_every"] = c.checkpoint_every;
  j["use_reference"] = c.use_reference;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  check_known_keys(j,
                   {"seed", "scenes", "resolution", "severities", "splits", "views_per_set", "refs_per_set",
                    "jitter_radians", "jitter_units", "model", "loss", "sigma", "optimizer", "steps", "extractor_seed",
                    "checkpoint_every", "use_reference"},
                   "");
  ExperimentConfig c;
  c.seed = j.value("seed", c.seed);
  c.scenes = j.value("scenes", c.scenes);
  c.resolution = j.value("resolution", c.resolution);
  if (j.contains("severities")) c.severities = j.at("severities").get<std::vector<int>>();
  c.splits = j.value("splits", c.splits);
  c.views_per_set = j.value("views_per_set", c.views_per_set);
  c.refs_per_set = j.value("refs_per_set", c.refs_per_set);
  c.jitter_radians = j.value("jitter_radians", c.jitter_radians);
  c.jitter_units = j.value("jitter_units", c.jitter_units);
  if (j.contains("model")) c.model = model_from_json(j.at("model"));
  if (j.contains("loss")) {
    check_known_keys(j.at("loss"), {"lambda_lpips", "lambda_gram"}, "loss");
    c.lambda_lpips = j.at("loss").value("lambda_lpips", c.lambda_lpips);
    c.lambda_gram = j.at("loss").value("lambda_gram", c.lambda_gram);
  }
  c.sigma = j.value("sigma", c.sigma);
  if (j.contains("optimizer")) {
    check_known_keys(j.at("optimizer"), {"learning_rate", "beta1", "beta2", "epsilon"}, "optimizer");
    const json& o = j.at("optimizer");
    c.optimizer.learning_rate = o.value("learning_rate", c.optimizer.learning_rate);
    c.optimizer.beta1 = o.value("beta1", c.optimizer.beta1);
    c.optimizer.beta2 = o.value("beta2", c.optimizer.beta2);
    c.optimizer.epsilon = o.value("epsilon", c.optimizer.epsilon);
  }
  c.steps = j.value("steps", c.steps);
  c.extractor_seed = j.value("extractor_seed", c.extractor_seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.use_reference = j.value("use_reference", c.use_reference);
  return c;
}

json camera_to_json(const Camera& cam) {
  auto mat = [](const Eigen::Matrix3d& m) {
    std::vector<double> v;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) v.push_back(m(r, c));
    return v;
  };
  return {{"K", mat(cam.K)}, {"R", mat(cam.R)}, {"t", {cam.t.x(), cam.t.y(), cam.t.z()}}};
}

Camera camera_from_json(const json& j) {
  Camera cam;
  const auto k = j.at("K").get<std::vector<double>>();
  const auto r = j.at("R").get<std::vector<double>>();
  const auto t = j.at("t").get<std::vector<double>>();
  for (int i = 0; i < 9; ++i) {
    cam.K(i / 3, i % 3) = k[static_cast<std::size_t>(i)];
    cam.R(i / 3, i % 3) = r[static_cast<std::size_t>(i)];
  }
  cam.t = Eigen::Vector3d(t[0], t[1], t[2]);
  return cam;
}

std::vector<std::string> list_ppm(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir + " is not a directory");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t;
  t.model = model;
  t.adam = optimizer;
  t.lambda_lpips = lambda_lpips;
  t.lambda_gram = lambda_gram;
  t.sigma = sigma;
  t.steps = steps;
  t.seed = seed;
  t.extractor_seed = extractor_seed;
  t.checkpoint_every = checkpoint_every;
  t.use_reference = use_reference;
  return t;
}

std::string serialize_config(const ExperimentConfig& config) { return config_to_json(config).dump(2) + "\n"; }

ExperimentConfig parse_config(const std::string& json_text) { return config_from_json(json::parse(json_text)); }

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

ExperimentConfig apply_override(const ExperimentConfig& config, const std::string& key_value) {
  const auto eq = key_value.find('=');
  if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + key_value + "'");
  const std::string path = key_value.substr(0, eq);
  const std::string value = key_value.substr(eq + 1);

  json root = config_to_json(config);
  json* node = &root;
  std::size_t start = 0;
  std::vector<std::string> parts;
  while (true) {
    const auto dot = path.find('.', start);
    parts.push_back(path.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i])) throw std::invalid_argument("config: unknown key '" + path + "'");
    node = &(*node)[parts[i]];
  }
  if (!node->contains(parts.back())) throw std::invalid_argument("config: unknown key '" + path + "'");
  (*node)[parts.back()] = json::parse(value, nullptr, false).is_discarded() ? json(value) : json::parse(value);
  return config_from_json(root);
}

std::string generate_dataset(const ExperimentConfig& config, const std::string& out_dir) {
  if (config.scenes < 1) throw std::invalid_argument("generate: need at least one scene");
  fs::create_directories(out_dir);

  json manifest;
  manifest["resolution"] = config.resolution;
  manifest["seed"] = config.seed;
  manifest["viewsets"] = json::array();

  for (int s = 0; s < config.scenes; ++s) {
    const std::uint64_t scene_seed = mix_seed(config.seed, static_cast<std::uint64_t>(s) + 1);
    const Scene scene = generate_scene(scene_seed);
    for (int severity : config.severities) {
      for (int split = 0; split < config.splits; ++split) {
        CorruptionSpec spec;
        spec.severity = severity;
        spec.split_id = split;
        spec.seed = scene_seed;
        const std::uint64_t pose_seed = mix_seed(scene_seed, static_cast<std::uint64_t>(split) * 131 + 7);
        const ViewSet vs = make_viewset(scene, config.views_per_set, config.refs_per_set, spec, config.resolution,
                                        config.resolution, config.jitter_radians, config.jitter_units, pose_seed);

        std::ostringstream rel;
        rel << "scene" << s << "/sev" << severity << "_split" << split;
        fs::create_directories(fs::path(out_dir) / rel.str());

        json entry;
        entry["scene_seed"] = scene_seed;
        entry["severity"] = severity;
        entry["split"] = split;
        entry["pose_seed"] = pose_seed;
        entry["views"] = json::array();
        entry["references"] = json::array();

        for (std::size_t v = 0; v < vs.views.size(); ++v) {
          const std::string clean_rel = rel.str() + "/view" + std::to_string(v) + "_clean.ppm";
          const std::string dist_rel = rel.str() + "/view" + std::to_string(v) + "_distorted.ppm";
          write_ppm((fs::path(out_dir) / clean_rel).string(), vs.views[v].clean);
          write_ppm((fs::path(out_dir) / dist_rel).string(), vs.views[v].distorted);
          entry["views"].push_back(
              {{"clean", clean_rel}, {"distorted", dist_rel}, {"camera", camera_to_json(vs.views[v].camera)}});
        }
        for (std::size_t r = 0; r < vs.references.size(); ++r) {
          const std::string ref_rel = rel.str() + "/ref" + std::to_string(r) + ".ppm";
          write_ppm((fs::path(out_dir) / ref_rel).string(), vs.references[r].clean);
          entry["references"].push_back({{"clean", ref_rel}, {"camera", camera_to_json(vs.references[r].camera)}});
        }
        manifest["viewsets"].push_back(std::move(entry));
      }
    }
  }

  const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
  std::ofstream os(manifest_path);
  if (!os) throw std::runtime_error("cannot write " + manifest_path);
  os << manifest.dump(2) << "\n";
  return manifest_path;
}

std::vector<ViewSet> load_dataset(const std::string& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is) throw std::runtime_error("cannot open manifest " + manifest_path);
  json manifest = json::parse(is);
  const fs::path root = fs::path(manifest_path).parent_path();

  std::vector<std::string> missing;
  std::vector<ViewSet> sets;
  for (const json& entry : manifest.at("viewsets")) {
    ViewSet vs;
    vs.scene_id = entry.at("scene_seed").get<std::uint64_t>();
    vs.severity = entry.at("severity").get<int>();
    vs.split_id = entry.at("split").get<int>();
    vs.seed = entry.at("pose_seed").get<std::uint64_t>();
    for (const json& view : entry.at("views")) {
      ViewRecord rec;
      for (const char* key : {"clean", "distorted"}) {
        const fs::path p = root / view.at(key).get<std::string>();
        if (!fs::exists(p)) missing.push_back(p.string());
      }
      if (!missing.empty()) continue;
      rec.clean = read_ppm((root / view.at("clean").get<std::string>()).string());
      rec.distorted = read_ppm((root / view.at("distorted").get<std::string>()).string());
      rec.camera = camera_from_json(view.at("camera"));
      vs.views.push_back(std::move(rec));
    }
    for (const json& ref : entry.at("references")) {
      const fs::path p = root / ref.at("clean").get<std::string>();
      if (!fs::exists(p)) {
        missing.push_back(p.string());
        continue;
      }
      ReferenceRecord rec;
      rec.clean = read_ppm(p.string());
      rec.camera = camera_from_json(ref.at("camera"));
      vs.references.push_back(std::move(rec));
    }
    sets.push_back(std::move(vs));
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << "dataset/manifest mismatch; missing files:";
    for (const std::string& m : missing) os << "\n  " << m;
    throw std::runtime_error(os.str());
  }
  return sets;
}

TrainSummary run_train(const ExperimentConfig& config, const std::string& manifest_path, const std::string& out_dir,
                       bool resume) {
  const std::vector<ViewSet> dataset = load_dataset(manifest_path);
  for (const ViewSet& vs : dataset)
    for (const ViewRecord& v : vs.views)
      if (v.clean.height % config.model.patch != 0 || v.clean.width % config.model.patch != 0)
        throw std::runtime_error("train: dataset resolution incompatible with codec patch " +
                                 std::to_string(config.model.patch));

  fs::create_directories(out_dir);
  const std::string checkpoint_dir = (fs::path(out_dir) / "checkpoint").string();
  const std::string log_csv = (fs::path(out_dir) / "train_log.csv").string();

  std::optional<Checkpoint> resume_from;
  if (resume && fs::exists(fs::path(checkpoint_dir) / "optimizer.json"))
    resume_from = load_checkpoint(checkpoint_dir);
  else if (fs::exists(log_csv))
    fs::remove(log_csv);

  {
    std::ofstream cfg_os(fs::path(out_dir) / "config.json");
    cfg_os << serialize_config(config);
  }

  const TrainConfig tc = config.train_config();
  const TrainResult result = train(tc, dataset, resume_from, checkpoint_dir);

  const bool fresh = !fs::exists(log_csv);
  std::ofstream os(log_csv, std::ios::app);
  if (!os) throw std::runtime_error("cannot write " + log_csv);
  if (fresh) os << "step,flow,pixel,lpips,gram,total\n";
  for (const StepLosses& row : result.log)
    os << row.step << "," << fmt_double(row.flow) << "," << fmt_double(row.pixel) << "," << fmt_double(row.lpips)
       << "," << fmt_double(row.gram) << "," << fmt_double(row.total) << "\n";

  TrainSummary summary;
  summary.checkpoint_dir = checkpoint_dir;
  summary.log_csv = log_csv;
  summary.steps_run = static_cast<std::int64_t>(result.log.size());
  return summary;
}

std::vector<std::string> run_infer(const std::string& checkpoint_dir, const std::string& input_dir,
                                   const std::string& reference_dir, int steps, const std::string& out_dir) {
  const ModelParams params = load_params(checkpoint_dir);

  const std::vector<std::string> names = list_ppm(input_dir);
  if (names.empty()) throw std::runtime_error("infer: no .ppm inputs in " + input_dir);
  std::vector<Image> distorted;
  distorted.reserve(names.size());
  for (const std::string& n : names) distorted.push_back(read_ppm((fs::path(input_dir) / n).string()));

  std::vector<Image> refs;
  if (!reference_dir.empty())
    for (const std::string& n : list_ppm(reference_dir)) refs.push_back(read_ppm((fs::path(reference_dir) / n).string()));

  const std::vector<Image> refined = infer(params, distorted, refs, steps);

  fs::create_directories(out_dir);
  std::vector<std::string> written;
  for (std::size_t i = 0; i < refined.size(); ++i) {
    const std::string path = (fs::path(out_dir) / names[i]).string();
    write_ppm(path, refined[i]);
    written.push_back(path);
  }
  return written;
}

EvalSummary run_eval(const std::string& refined_dir, const std::string& clean_dir, const std::string& out_csv) {
  const std::vector<std::string> refined_names = list_ppm(refined_dir);
  const std::vector<std::string> clean_names = list_ppm(clean_dir);
  if (refined_names.empty() || clean_names.empty())
    throw std::runtime_error("eval: empty directory (" + refined_dir + " or " + clean_dir + ")");
  if (refined_names.size() != clean_names.size()) {
    std::ostringstream os;
    os << "eval: frame count mismatch (" << refined_names.size() << " refined vs " << clean_names.size()
       << " clean); unpaired:";
    for (std::size_t i = std::min(refined_names.size(), clean_names.size());
         i < std::max(refined_names.size(), clean_names.size()); ++i)
      os << " " << (i < refined_names.size() ? refined_names[i] : clean_names[i]);
    throw std::runtime_error(os.str());
  }

  std::vector<Image> refined;
  refined.reserve(refined_names.size());
  EvalSummary summary;
  std::ostringstream body;
  for (std::size_t i = 0; i < refined_names.size(); ++i) {
    const Image r = read_ppm((fs::path(refined_dir) / refined_names[i]).string());
    const Image c = read_ppm((fs::path(clean_dir) / clean_names[i]).string());
    const double p = psnr(r, c);
    const double s = ssim(r, c);
    const double l1 = pixel_l1({r}, {c});
    summary.mean_psnr += p;
    summary.mean_ssim += s;
    summary.mean_l1 += l1;
    body << "frame," << refined_names[i] << "," << fmt_double(p) << "," << fmt_double(s) << "," << fmt_double(l1)
         << ",,,,\n";
    refined.push_back(std::move(r));
  }
  const double n = static_cast<double>(refined_names.size());
  summary.mean_psnr /= n;
  summary.mean_ssim /= n;
  summary.mean_l1 /= n;

  int scored = 0, skipped = 0;
  if (refined.size() >= 2) {
    const CvscReport report = cvsc_sequence(refined);
    for (std::size_t i = 0; i < report.pairs.size(); ++i) {
      const PairScore& ps = report.pairs[i];
      body << "pair," << refined_names[i] << "|" << refined_names[i + 1] << ",,,,"
           << (ps.skipped ? "" : fmt_double(ps.score)) << "," << ps.match_count << "," << ps.inlier_count << ","
           << (ps.skipped ? ps.skip_reason : "") << "\n";
      skipped += ps.skipped ? 1 : 0;
      scored += ps.skipped ? 0 : 1;
    }
    summary.cvsc = report.aggregate;
  }

  std::ofstream os(out_csv);
  if (!os) throw std::runtime_error("cannot write " + out_csv);
  os << "kind,name,psnr_db,ssim,pixel_l1,cvsc,matches,inliers,note\n";
  os << body.str();
  os << "summary,mean," << fmt_double(summary.mean_psnr) << "," << fmt_double(summary.mean_ssim) << ","
     << fmt_double(summary.mean_l1) << "," << (summary.cvsc ? fmt_double(*summary.cvsc) : "") << ",,,scored="
     << scored << " skipped=" << skipped << "\n";
  summary.csv_path = out_csv;
  return summary;
}

SweepResult run_sweep(const std::string& checkpoint_dir, const std::string& manifest_path, int max_degraded,
                      int max_references, const std::string& out_dir) {
  if (max_degraded < 1 || max_references < 0) throw std::invalid_argument("sweep: bad grid bounds");
  const ModelParams params = load_params(checkpoint_dir);
  const std::vector<ViewSet> dataset = load_dataset(manifest_path);

  std::ostringstream deficient;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    if (static_cast<int>(dataset[i].views.size()) < max_degraded ||
        static_cast<int>(dataset[i].references.size()) < max_references)
      deficient << " viewset#" << i << "(views=" << dataset[i].views.size()
                << ",refs=" << dataset[i].references.size() << ")";
  if (!deficient.str().empty())
    throw std::runtime_error("sweep: insufficient views for grid " + std::to_string(max_degraded) + "x" +
                             std::to_string(max_references) + ":" + deficient.str());

  fs::create_directories(out_dir);
  SweepResult result;

  for (int d = 1; d <= max_degraded; ++d) {
    for (int r = 0; r <= max_references; ++r) {
      SweepCell cell;
      cell.degraded = d;
      cell.references = r;
      double psnr_acc = 0.0, l1_acc = 0.0, cvsc_acc = 0.0;
      int cvsc_n = 0;
      try {
        for (const ViewSet& vs : dataset) {
          std::vector<Image> distorted, clean, refs;
          for (int v = 0; v < d; ++v) {
            distorted.push_back(vs.views[static_cast<std::size_t>(v)].distorted);
            clean.push_back(vs.views[static_cast<std::size_t>(v)].clean);
          }
          for (int v = 0; v < r; ++v) refs.push_back(vs.references[static_cast<std::size_t>(v)].clean);

          const std::vector<Image> refined = infer(params, distorted, refs, 1);
          for (int v = 0; v < d; ++v) {
            psnr_acc += psnr(refined[static_cast<std::size_t>(v)], clean[static_cast<std::size_t>(v)]);
            l1_acc += pixel_l1({refined[static_cast<std::size_t>(v)]}, {clean[static_cast<std::size_t>(v)]});
          }
          if (d >= 2) {
            const CvscReport report = cvsc_sequence(refined);
            if (report.aggregate) {
              cvsc_acc += *report.aggregate;
              cvsc_n += 1;
            }
          }
        }
        const double frames = static_cast<double>(dataset.size() * static_cast<std::size_t>(d));
        cell.psnr_db = psnr_acc / frames;
        cell.pixel_l1 = l1_acc / frames;
        if (cvsc_n > 0) cell.cvsc = cvsc_acc / cvsc_n;
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.reason = e.what();
      }
      result.cells.push_back(std::move(cell));
    }
  }

  // CSV with legend rows carrying the heatmap min/max per metric.
  const std::string csv_path = (fs::path(out_dir) / "sweep.csv").string();
  std::ofstream os(csv_path);
  if (!os) throw std::runtime_error("cannot write " + csv_path);
  os << "kind,degraded,references,cvsc,psnr_db,pixel_l1,status\n";
  for (const SweepCell& cell : result.cells)
    os << "cell," << cell.degraded << "," << cell.references << "," << (cell.cvsc ? fmt_double(*cell.cvsc) : "") << ","
       << fmt_double(cell.psnr_db) << "," << fmt_double(cell.pixel_l1) << "," << (cell.failed ? cell.reason : "ok")
       << "\n";

  const int rows = max_degraded, cols = max_references + 1;
  const auto heatmap = [&](const std::string& name, auto getter) {
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (const SweepCell& cell : result.cells) {
      const auto v = getter(cell);
      if (!v) continue;
      lo = any ? std::min(lo, *v) : *v;
      hi = any ? std::max(hi, *v) : *v;
      any = true;
    }
    std::vector<double> pixels(static_cast<std::size_t>(rows) * cols, 0.0);
    for (const SweepCell& cell : result.cells) {
      const auto v = getter(cell);
      const std::size_t idx = static_cast<std::size_t>(cell.degraded - 1) * cols + cell.references;
      pixels[idx] = (v && hi > lo) ? (*v - lo) / (hi - lo) : (v ? 0.5 : 0.0);
    }
    const std::string path = (fs::path(out_dir) / ("sweep_" + name + ".pgm")).string();
    write_pgm(path, pixels, rows, cols);
    os << "legend," << name << ",," << fmt_double(lo) << "," << fmt_double(hi) << ",," << path << "\n";
    result.heatmaps.push_back(path);
  };
  heatmap("cvsc", [](const SweepCell& c) { return c.cvsc; });
  heatmap("psnr", [](const SweepCell& c) { return c.failed ? std::optional<double>() : std::optional<double>(c.psnr_db); });
  heatmap("l1", [](const SweepCell& c) { return c.failed ? std::optional<double>() : std::optional<double>(c.pixel_l1); });

  result.csv_path = csv_path;
  return result;
}

}  // namespace mvbridge
