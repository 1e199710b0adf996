// hughop command line: config-driven runs, tuning and the experiment tables.

#include "hughop/harness.hpp"
#include "hughop/targets.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hughop;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("--out", c.out, "output directory (overrides output.dir)");
  cmd->add_option("--set", c.sets, "override a config field, key=value (dotted keys, JSON values)")
      ->allow_extra_args(false);
}

json load(const Common& c) {
  json file;
  if (!c.config_path.empty()) {
    std::ifstream is(c.config_path);
    if (!is) throw ConfigError("--config: cannot open " + c.config_path);
    try {
      file = json::parse(is);
    } catch (const json::parse_error& e) {
      throw ConfigError("--config: " + c.config_path + " is not valid JSON: " + e.what());
    }
  }
  json resolved = resolve_config(file, c.sets);
  if (c.seed) resolved["seed"] = *c.seed;
  if (!c.out.empty()) resolved["output"]["dir"] = c.out;
  if (!resolved["seed"].is_number_unsigned()) throw ConfigError("config.seed: expected a non-negative integer");
  return resolved;
}

fs::path out_dir(const json& resolved) { return resolved["output"].value("dir", "out"); }

json record(const std::string& command, const json& resolved, const json& result) {
  return {{"version", kVersion}, {"command", command}, {"config", resolved}, {"result", result}};
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

HugParams hug_base(const json& section, int dim, const std::string& where) {
  json spec = section;
  spec["kernel"] = "hug";
  spec.erase("B");
  spec.erase("T");
  return std::get<HugParams>(make_kernel(spec, dim, where).params);
}

int cmd_run(const json& resolved) {
  const ExperimentConfig ec = ExperimentConfig::from_json(resolved);
  const ChainResult r = run_chain(ec);
  const fs::path dir = out_dir(resolved);
  write_summary_json(dir / "summary.json", r.summary, resolved);
  if (ec.save_trace) write_trace_csv(dir / "trace.csv", r.trace, resolved);
  append_result(dir / resolved["output"].value("results", "results.jsonl"),
                record("run", resolved, r.summary.to_json()));
  std::cout << r.summary.to_json().dump(2) << '\n';
  return 0;
}

int cmd_tune(const json& resolved) {
  const json& t = resolved["tune"];
  TuneOptions opt;
  opt.pilot_iterations = t.value("pilot_iterations", 10000L);
  opt.burn_in = t.value("burn_in", 0.2);
  opt.objective = t.value("objective", std::string("geomean_per_second"));
  opt.threads = t.value("threads", 1);
  const TuneResult r = grid_tune(resolved, resolved["grid"], opt);
  const fs::path dir = out_dir(resolved);
  write_grid_csv(dir / "tune_grid.csv", r, resolved);
  write_json(dir / "best_config.json", r.best_config);
  const json best = {{"cell", r.best}, {"assignment", r.cells[r.best].assignment},
                     {"score", r.cells[r.best].score}, {"summary", r.cells[r.best].summary.to_json()}};
  append_result(dir / resolved["output"].value("results", "results.jsonl"), record("tune", resolved, best));
  std::cout << best.dump(2) << '\n';
  return 0;
}

int cmd_hug_efficiency(const json& resolved) {
  const TargetPtr target = make_target(resolved["target"]);
  const json& s = resolved["hug_efficiency"];
  const auto rows = hug_efficiency_experiment(*target, s.at("B").get<std::vector<int>>(),
                                              s.at("T").get<std::vector<double>>(), s.value("n", 10000L),
                                              resolved["seed"].get<std::uint64_t>(),
                                              hug_base(s, target->dim(), "hug_efficiency"));
  write_hug_efficiency_csv(out_dir(resolved) / "hug_efficiency.csv", rows, resolved);
  for (const auto& r : rows)
    std::cout << "B=" << r.B << " T=" << r.T << " acceptance=" << r.mean_acceptance << " efficiency=" << r.efficiency
              << '\n';
  return 0;
}

int cmd_stability(const json& resolved) {
  const TargetPtr target = make_target(resolved["target"]);
  const json& s = resolved["stability"];
  const StabilityTrace t = stability_experiment(*target, s.value("delta", 0.1), s.value("steps", 10000L),
                                                resolved["seed"].get<std::uint64_t>(), s.value("threshold", 1e6),
                                                hug_base(s, target->dim(), "stability"));
  write_stability_csv(out_dir(resolved) / "stability.csv", t, resolved);
  const double max_abs = t.delta_l.size() ? t.delta_l.cwiseAbs().maxCoeff() : 0.0;
  std::cout << json{{"steps", t.delta_l.size()}, {"max_abs_delta", max_abs}, {"diverged", t.diverged},
                    {"diverged_at", t.diverged_at}}.dump(2)
            << '\n';
  return 0;
}

int cmd_hop_scaling(const json& resolved) {
  const json& s = resolved["hop_scaling"];
  const std::string guard = s.value("guard", std::string("plus1"));
  if (guard != "plus1" && guard != "raw") throw ConfigError("hop_scaling.guard: expected raw or plus1");
  const auto rows = hop_scaling_experiment(
      s.at("targets").get<std::vector<json>>(), s.at("dims").get<std::vector<int>>(),
      s.at("lambda").get<std::vector<double>>(), s.at("kappa").get<std::vector<double>>(),
      s.value("iterations", 200000L), s.value("burn_in", 0.2), resolved["seed"].get<std::uint64_t>(),
      guard == "raw" ? HopGuard::Raw : HopGuard::Plus1, s.value("threads", 1));
  const fs::path dir = out_dir(resolved);
  write_hop_scaling_csv(dir / "hop_scaling.csv", rows, resolved);
  const auto best = hop_scaling_optima(rows);
  write_hop_scaling_csv(dir / "hop_scaling_optima.csv", best, resolved);
  for (const auto& r : best)
    std::cout << r.target << " d=" << r.dim << " lambda*=" << r.lambda << " kappa=" << r.kappa
              << " ESS(logpi)/1000=" << r.summary.ess_logpi_per_1000 << '\n';
  return 0;
}

int cmd_theorem2(const json& resolved) {
  const json& s = resolved["theorem2"];
  const auto precision = s.at("precision").get<std::vector<double>>();
  if (precision.size() != 2) throw ConfigError("theorem2.precision: expected [lo, hi]");
  const auto kappas = s.at("kappa").is_array() ? s["kappa"].get<std::vector<double>>()
                                               : std::vector<double>{s["kappa"].get<double>()};
  std::vector<Theorem2Result> rows;
  std::uint64_t k = 0;
  for (double kappa : kappas) {
    rows.push_back(theorem2_experiment(precision[0], precision[1], s.value("dim", 200), s.value("lambda", 2.0), kappa,
                                       s.value("proposals", 100000L),
                                       child_seed(resolved["seed"].get<std::uint64_t>(), k++)));
    const auto& r = rows.back();
    std::cout << "kappa=" << kappa << " acceptance=" << r.mean_acceptance << " +- " << r.std_error
              << " limit=" << r.limit << '\n';
  }
  write_theorem2_csv(out_dir(resolved) / "theorem2.csv", rows, resolved);
  return 0;
}

int cmd_models(json resolved, const std::string& name) {
  resolved["model"]["name"] = name;
  const fs::path dir = out_dir(resolved);
  const ModelRun run = run_model(resolved, dir / "dataset");
  json result = run.chain.summary.to_json();
  result["total_dim"] = run.total_dim;
  if (run.z_dim) result["z_dim"] = run.z_dim;
  if (run.min_ess_z) result["min_ess_z"] = *run.min_ess_z;
  if (run.min_ess_theta) result["min_ess_theta"] = *run.min_ess_theta;
  result["dataset"] = run.manifest;
  write_json(dir / "summary.json", record("models", resolved, result));
  if (resolved["output"].value("trace", false)) write_trace_csv(dir / "trace.csv", run.chain.trace, resolved);
  append_result(dir / resolved["output"].value("results", "results.jsonl"), record("models", resolved, result));
  std::cout << result.dump(2) << '\n';
  return 0;
}

int fail(int code, const std::string& type, const std::string& message, const std::string& out) {
  const json err = {{"error", {{"type", type}, {"message", message}}}, {"exit_code", code}, {"version", kVersion}};
  std::cerr << err.dump() << '\n';
  if (!out.empty()) {
    std::error_code ec;
    fs::create_directories(out, ec);
    std::ofstream os(fs::path(out) / "error.json");
    if (os) os << err.dump(2) << '\n';
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hug and Hop MCMC: runs, tuning and experiments"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  std::string model_name;
  std::map<std::string, CLI::App*> cmds;
  for (const char* name : {"run", "tune", "hug-efficiency", "stability", "hop-scaling", "theorem2", "models"}) {
    cmds[name] = app.add_subcommand(name);
    add_common(cmds[name], common);
  }
  cmds["run"]->description("run one chain and summarise it");
  cmds["tune"]->description("grid-tune kernel parameters with pilot chains");
  cmds["hug-efficiency"]->description("Hug efficiency vs acceptance from exact draws");
  cmds["stability"]->description("track l(x_b) - l(x_0) along a long Hug trajectory");
  cmds["hop-scaling"]->description("ESS(logpi) of Hop over dimension and (lambda, kappa)");
  cmds["theorem2"]->description("Hop acceptance on Gaussians vs its high-dimensional limit");
  cmds["models"]->description("simulate a statistical model and sample its posterior");
  cmds["models"]->add_option("model", model_name, "cauchit | rasch | spatial")
      ->required()
      ->check(CLI::IsMember({"cauchit", "rasch", "spatial"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "UsageError", e.what(), "");
  }

  std::string out = common.out;
  try {
    const json resolved = load(common);
    out = out_dir(resolved).string();
    if (cmds["run"]->parsed()) return cmd_run(resolved);
    if (cmds["tune"]->parsed()) return cmd_tune(resolved);
    if (cmds["hug-efficiency"]->parsed()) return cmd_hug_efficiency(resolved);
    if (cmds["stability"]->parsed()) return cmd_stability(resolved);
    if (cmds["hop-scaling"]->parsed()) return cmd_hop_scaling(resolved);
    if (cmds["theorem2"]->parsed()) return cmd_theorem2(resolved);
    return cmd_models(resolved, model_name);
  } catch (const ConfigError& e) {
    return fail(2, "ConfigError", e.what(), out);
  } catch (const nlohmann::json::exception& e) {
    return fail(2, "ConfigError", e.what(), out);
  } catch (const Error& e) {
    return fail(3, "RuntimeError", e.what(), out);
  } catch (const std::exception& e) {
    return fail(1, "InternalError", e.what(), out);
  }
}
