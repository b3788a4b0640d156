#include "mcal/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "mcal/service.hpp"

namespace mcal {

Prepared prepare_experiment(const ExperimentConfig& cfg) {
  Prepared p;
  auto data = std::make_shared<Dataset>(load_experiment_dataset(cfg));
  data->validate();
  cfg.graph.validate(data->size());
  p.graph = build_knn_graph(*data, cfg.graph, cfg.dataset_seed);
  EigenSolverOptions opts;
  opts.tol = cfg.eig_tol;
  opts.seed = cfg.dataset_seed;
  p.spectral = std::make_shared<SpectralDecomposition>(
      smallest_eigenpairs(normalized_laplacian(p.graph), cfg.spectral_m, cfg.resolved_tau(), opts));
  p.data = std::move(data);
  return p;
}

std::vector<RunRecord> run_trials(const ExperimentConfig& cfg, const Prepared& prep) {
  const std::filesystem::path out(cfg.output_dir);
  std::filesystem::create_directories(out);
  {
    std::ofstream f(out / "config.json");
    f << config_to_json(cfg) << '\n';
  }
  std::vector<RunRecord> records;
  for (int t = 0; t < cfg.trials; ++t) {
    LoopConfig loop = cfg.resolved_loop();
    loop.seed = cfg.seed + static_cast<std::uint64_t>(t);
    records.push_back(run_active_learning(loop, prep.data, prep.spectral));
    const auto dir = out / ("trial_" + std::to_string(t));
    write_run_record(records.back(), dir);
    std::ofstream f(dir / "record.json");
    f << run_record_json(records.back()).dump(1) << '\n';
  }

  std::FILE* f = std::fopen((out / "summary.csv").c_str(), "w");
  if (!f) throw std::runtime_error("cannot write summary.csv");
  std::fprintf(f, "iter,num_labeled,mean,std,trials\n");
  const std::size_t rows = records.front().iterations.size();
  for (std::size_t i = 0; i < rows; ++i) {
    double sum = 0.0, sq = 0.0;
    int count = 0;
    for (const auto& r : records) {
      if (i >= r.iterations.size() || !r.iterations[i].accuracy) continue;
      sum += *r.iterations[i].accuracy;
      sq += *r.iterations[i].accuracy * *r.iterations[i].accuracy;
      ++count;
    }
    const double mean = count ? sum / count : std::nan("");
    const double var = count > 1 ? std::max(0.0, (sq - count * mean * mean) / (count - 1)) : 0.0;
    std::fprintf(f, "%d,%zu,%.17g,%.17g,%d\n", records.front().iterations[i].iter,
                 records.front().iterations[i].num_labeled, mean, std::sqrt(var), count);
  }
  std::fclose(f);
  return records;
}

namespace {

struct Overrides {
  std::string config;
  std::string data;
  std::string model;
  std::string acq;
  std::optional<std::size_t> batch;
  std::optional<int> iters;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> port;
  std::string out;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (!o.data.empty()) cfg.dataset = o.data;
  if (!o.model.empty()) cfg.loop.model = parse_family(o.model);
  if (!o.acq.empty()) cfg.loop.acquisition = parse_acq(o.acq);
  if (o.batch) cfg.loop.batch_size = *o.batch;
  if (o.iters) cfg.loop.iterations = *o.iters;
  if (o.seed) cfg.seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (o.port) cfg.service.port = *o.port;
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON experiment configuration")->check(CLI::ExistingFile);
  sub->add_option("--data", o.data, "dataset CSV (overrides the config)");
  sub->add_option("--seed", o.seed, "base seed");
  sub->add_option("--out", o.out, "output path");
}

void add_loop(CLI::App* sub, Overrides& o) {
  sub->add_option("--model", o.model, "gr|log|probit|mgr|ce")
      ->check(CLI::IsMember({"gr", "log", "logistic", "probit", "mgr", "ce"}));
  sub->add_option("--acq", o.acq, "mc|vopt|sopt|unc|rand")->check(CLI::IsMember({"mc", "vopt", "sopt", "unc", "rand"}));
  sub->add_option("--batch", o.batch, "batch size B")->check(CLI::PositiveNumber);
  sub->add_option("--iters", o.iters, "iterations T")->check(CLI::PositiveNumber);
}

}  // namespace

int cli_run(int argc, const char* const* argv) {
  CLI::App app{"Model-change active learning on similarity graphs", "mcal"};
  app.require_subcommand(1);
  Overrides o;
  Index size = 0;

  auto* gen = app.add_subcommand("gen-data", "write the Binary-Clusters dataset as CSV");
  gen->add_option("--seed", o.seed, "dataset seed");
  gen->add_option("--out", o.out, "CSV path")->required();
  gen->add_option("--size", size, "approximate number of points");

  auto* graph = app.add_subcommand("build-graph", "build the k-NN graph and write its edge list");
  add_common(graph, o);

  auto* eig = app.add_subcommand("eig", "compute and cache the smallest Laplacian eigenpairs");
  add_common(eig, o);

  auto* run = app.add_subcommand("run", "run seeded trials with the ground-truth oracle");
  add_common(run, o);
  add_loop(run, o);
  run->add_option("--trials", o.trials, "number of trials")->check(CLI::PositiveNumber);

  auto* serve_cmd = app.add_subcommand("serve", "start the labeling session service");
  add_common(serve_cmd, o);
  add_loop(serve_cmd, o);
  serve_cmd->add_option("--port", o.port, "TCP port")->check(CLI::Range(0, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) {
      const Dataset d = generate_binary_clusters(o.seed.value_or(0), size);
      write_dataset_csv(d, o.out);
      std::cout << "wrote " << d.size() << " points to " << o.out << '\n';
      return 0;
    }
    const std::string out_override = o.out;
    if (*graph || *eig) o.out.clear();
    ExperimentConfig cfg = resolve(o);
    if (*graph || *eig) {
      auto data = load_experiment_dataset(cfg);
      data.validate();
      cfg.graph.validate(data.size());
      const SparseGraph g = build_knn_graph(data, cfg.graph, cfg.dataset_seed);
      const std::filesystem::path target = out_override.empty()
                                               ? std::filesystem::path(cfg.output_dir) / (*graph ? "graph.txt" : "spectral")
                                               : std::filesystem::path(out_override);
      if (*graph) {
        if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
        write_edge_list(g, target);
        std::cout << "wrote graph with " << g.weights.nonZeros() / 2 << " edges to " << target.string() << '\n';
      } else {
        EigenSolverOptions opts;
        opts.tol = cfg.eig_tol;
        opts.seed = cfg.dataset_seed;
        const auto sd = smallest_eigenpairs(normalized_laplacian(g), cfg.spectral_m, cfg.resolved_tau(), opts);
        write_spectral_cache(sd, graph_hash(g), target);
        std::cout << "wrote " << sd.rank() << " eigenpairs to " << target.string() << '\n';
      }
      return 0;
    }
    const Prepared prep = prepare_experiment(cfg);
    if (*run) {
      const auto records = run_trials(cfg, prep);
      const auto& last = records.front().iterations.back();
      std::cout << "ran " << records.size() << " trial(s); trial 0 final accuracy "
                << (last.accuracy ? std::to_string(*last.accuracy) : std::string("n/a")) << "; output in "
                << cfg.output_dir << '\n';
      return 0;
    }
    SessionService service(cfg.resolved_loop(), prep.data, prep.spectral);
    std::cout << "serving on http://" << cfg.service.host << ':' << cfg.service.port << std::endl;
    serve(service, cfg.service.host, cfg.service.port);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "mcal: " << e.what() << '\n';
    return 1;
  }
}

int cli_run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("mcal");
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace mcal
