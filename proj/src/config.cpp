#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "mcal/io.hpp"

namespace mcal {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;
constexpr const char* kSynthetic = "synthetic:binary-clusters";

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument(where + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw std::invalid_argument("unknown config key '" + where + "." + it.key() + "'");
}

template <typename T>
void take(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config key '" + where + "." + key + "' has the wrong type");
  }
}

}  // namespace

double default_gamma(Family f) { return f == Family::mgr ? 0.1 : 0.5; }

double default_tau(Family f) { return is_binary_family(f) ? 0.001 : 0.005; }

double ExperimentConfig::resolved_tau() const { return tau.value_or(default_tau(loop.model)); }

LoopConfig ExperimentConfig::resolved_loop() const {
  LoopConfig out = loop;
  out.gamma = gamma.value_or(default_gamma(loop.model));
  out.seed = seed;
  return out;
}

void ExperimentConfig::validate() const {
  if (dataset != kSynthetic && !std::filesystem::exists(dataset))
    throw std::invalid_argument("dataset file not found: " + dataset);
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (spectral_m < 1) throw std::invalid_argument("spectral.M must be at least 1");
  if (!(resolved_tau() > 0.0)) throw std::invalid_argument("spectral.tau must be positive");
  if (!(eig_tol > 0.0)) throw std::invalid_argument("spectral.tol must be positive");
  if (dataset_size < 0) throw std::invalid_argument("dataset_size must be nonnegative");
  if (service.port < 0 || service.port > 65535) throw std::invalid_argument("service.port out of range");
  resolved_loop().validate();
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(doc, {"version", "dataset", "dataset_seed", "dataset_size", "graph", "spectral", "loop",
                       "output_dir", "trials", "seed", "service"},
                 "config");
  int version = 0;
  take(doc, "version", version, "config");
  if (version != kSchemaVersion)
    throw std::invalid_argument("config version must be " + std::to_string(kSchemaVersion));

  ExperimentConfig cfg;
  take(doc, "dataset", cfg.dataset, "config");
  take(doc, "dataset_seed", cfg.dataset_seed, "config");
  take(doc, "dataset_size", cfg.dataset_size, "config");
  take(doc, "output_dir", cfg.output_dir, "config");
  take(doc, "trials", cfg.trials, "config");
  take(doc, "seed", cfg.seed, "config");

  if (doc.contains("graph")) {
    const json& g = doc["graph"];
    reject_unknown(g, {"k_neighbors", "kernel", "sigma", "zelnik_perona", "zp_neighbor_index"}, "graph");
    take(g, "k_neighbors", cfg.graph.k_neighbors, "graph");
    std::string kernel = "gaussian";
    take(g, "kernel", kernel, "graph");
    if (kernel == "gaussian") cfg.graph.kernel.type = KernelType::gaussian;
    else if (kernel == "cosine") cfg.graph.kernel.type = KernelType::cosine;
    else throw std::invalid_argument("graph.kernel must be 'gaussian' or 'cosine'");
    take(g, "sigma", cfg.graph.kernel.sigma, "graph");
    take(g, "zelnik_perona", cfg.graph.zelnik_perona, "graph");
    take(g, "zp_neighbor_index", cfg.graph.zp_neighbor_index, "graph");
  }
  if (doc.contains("spectral")) {
    const json& s = doc["spectral"];
    reject_unknown(s, {"M", "tau", "tol"}, "spectral");
    take(s, "M", cfg.spectral_m, "spectral");
    if (s.contains("tau") && !s["tau"].is_null()) {
      double t = 0.0;
      take(s, "tau", t, "spectral");
      cfg.tau = t;
    }
    take(s, "tol", cfg.eig_tol, "spectral");
  }
  if (doc.contains("loop")) {
    const json& l = doc["loop"];
    reject_unknown(l, {"model", "acquisition", "batch_size", "iterations", "candidate_fraction", "gamma",
                       "sequential_full_scan", "initial_per_class", "threads", "newton_tol", "newton_max_iter"},
                   "loop");
    std::string model = std::string(family_name(cfg.loop.model));
    take(l, "model", model, "loop");
    cfg.loop.model = parse_family(model);
    std::string acq = std::string(acq_name(cfg.loop.acquisition));
    take(l, "acquisition", acq, "loop");
    cfg.loop.acquisition = parse_acq(acq);
    take(l, "batch_size", cfg.loop.batch_size, "loop");
    take(l, "iterations", cfg.loop.iterations, "loop");
    take(l, "candidate_fraction", cfg.loop.candidate_fraction, "loop");
    if (l.contains("gamma") && !l["gamma"].is_null()) {
      double g = 0.0;
      take(l, "gamma", g, "loop");
      cfg.gamma = g;
    }
    take(l, "sequential_full_scan", cfg.loop.sequential_full_scan, "loop");
    take(l, "initial_per_class", cfg.loop.initial_per_class, "loop");
    take(l, "threads", cfg.loop.threads, "loop");
    take(l, "newton_tol", cfg.loop.newton.tol, "loop");
    take(l, "newton_max_iter", cfg.loop.newton.max_iter, "loop");
  }
  if (doc.contains("service")) {
    const json& s = doc["service"];
    reject_unknown(s, {"host", "port"}, "service");
    take(s, "host", cfg.service.host, "service");
    take(s, "port", cfg.service.port, "service");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  const LoopConfig loop = cfg.resolved_loop();
  json doc = {
      {"version", kSchemaVersion},
      {"dataset", cfg.dataset},
      {"dataset_seed", cfg.dataset_seed},
      {"dataset_size", cfg.dataset_size},
      {"graph",
       {{"k_neighbors", cfg.graph.k_neighbors},
        {"kernel", cfg.graph.kernel.type == KernelType::gaussian ? "gaussian" : "cosine"},
        {"sigma", cfg.graph.kernel.sigma},
        {"zelnik_perona", cfg.graph.zelnik_perona},
        {"zp_neighbor_index", cfg.graph.zp_index()}}},
      {"spectral", {{"M", cfg.spectral_m}, {"tau", cfg.resolved_tau()}, {"tol", cfg.eig_tol}}},
      {"loop",
       {{"model", std::string(family_name(loop.model))},
        {"acquisition", std::string(acq_name(loop.acquisition))},
        {"batch_size", loop.batch_size},
        {"iterations", loop.iterations},
        {"candidate_fraction", loop.candidate_fraction},
        {"gamma", loop.gamma},
        {"sequential_full_scan", loop.sequential_full_scan},
        {"initial_per_class", loop.initial_per_class},
        {"threads", loop.threads},
        {"newton_tol", loop.newton.tol},
        {"newton_max_iter", loop.newton.max_iter}}},
      {"output_dir", cfg.output_dir},
      {"trials", cfg.trials},
      {"seed", cfg.seed},
      {"service", {{"host", cfg.service.host}, {"port", cfg.service.port}}},
  };
  return doc.dump(2);
}

Dataset load_experiment_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset == kSynthetic) return generate_binary_clusters(cfg.dataset_seed, cfg.dataset_size);
  return load_dataset_csv(cfg.dataset);
}

}  // namespace mcal
