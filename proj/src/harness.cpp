#include "hughop/harness.hpp"

#include "hughop/models.hpp"
#include "hughop/normal.hpp"
#include "hughop/targets.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace hughop {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------- configuration

json default_config() {
  return json::parse(R"({
    "target": {"target": "gaussian", "dim": 5, "scales": "U"},
    "kernels": [{"kernel": "hug", "T": 1.0, "B": 10}, {"kernel": "hop", "kappa": 0.5}],
    "iterations": 10000,
    "burn_in": 0.2,
    "thin": 1,
    "seed": 1,
    "output": {"dir": "out", "trace": false, "results": "results.jsonl"},
    "grid": {},
    "tune": {"pilot_iterations": 10000, "burn_in": 0.2, "objective": "geomean_per_second", "threads": 1},
    "hug_efficiency": {"B": [1, 2, 5, 10], "T": [0.5, 1, 2, 5], "n": 10000, "mode": "plain"},
    "stability": {"delta": 0.1, "steps": 10000, "threshold": 1e6, "mode": "plain"},
    "hop_scaling": {
      "targets": [{"target": "LG", "a": 1, "scales": "U", "label": "ISOLG1"}],
      "dims": [10, 50, 100],
      "lambda": [0.5, 1, 2, 4, 8, 16],
      "kappa": [0.5],
      "iterations": 200000,
      "burn_in": 0.2,
      "guard": "plus1",
      "threads": 1
    },
    "theorem2": {"precision": [0.5, 5], "dim": 200, "lambda": 2, "kappa": [0.5, 1, 2], "proposals": 100000},
    "model": {"name": "cauchit", "data_seed": 2024}
  })");
}

void set_path(json& tree, const std::string& dotted, const json& value) {
  if (dotted.empty()) throw ConfigError("--set: empty key");
  json* node = &tree;
  std::stringstream ss(dotted);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ConfigError("--set: malformed key '" + dotted + "'");
    parts.push_back(part);
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    const bool last = i + 1 == parts.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(p, &used);
        if (used != p.size()) throw std::invalid_argument(p);
      } catch (const std::exception&) {
        throw ConfigError(dotted + ": '" + p + "' is not an array index");
      }
      if (idx >= node->size()) throw ConfigError(dotted + ": index " + p + " out of range");
      node = &(*node)[idx];
    } else {
      if (!node->is_object()) *node = json::object();
      node = &(*node)[p];
    }
    if (last) *node = value;
  }
}

json parse_set_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

json resolve_config(const json& file, const std::vector<std::string>& sets) {
  if (!file.is_null() && !file.is_object()) throw ConfigError("config: top level must be an object");
  json out = default_config();
  // merge_patch replaces arrays wholesale and merges objects key by key.
  if (!file.is_null()) out.merge_patch(file);
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set: expected key=value, got '" + s + "'");
    set_path(out, s.substr(0, eq), parse_set_value(s.substr(eq + 1)));
  }
  return out;
}

namespace {

// Field accessors that name the offending field on error.
double number(const json& j, const std::string& key, const std::string& where, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return j[key].get<double>();
}

std::optional<double> maybe_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return j[key].get<double>();
}

long integer(const json& j, const std::string& key, const std::string& where, long fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j[key];
  if (!v.is_number() || std::floor(v.get<double>()) != v.get<double>()) {
    throw ConfigError(where + "." + key + ": expected an integer");
  }
  return v.get<long>();
}

bool boolean(const json& j, const std::string& key, const std::string& where, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
  return j[key].get<bool>();
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string text(const json& j, const std::string& key, const std::string& where, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) throw ConfigError(where + "." + key + ": expected a string");
  return lower(j[key].get<std::string>());
}

template <typename T>
std::vector<T> list(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + "." + key + ": missing");
  const json& v = j[key];
  try {
    if (v.is_array()) return v.get<std::vector<T>>();
    return {v.get<T>()};
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": expected a list of numbers");
  }
}

// Covariance from "<prefix>" (dense rows) or "<prefix>_diag" (diagonal).
std::optional<Matrix> matrix_field(const json& j, const std::string& prefix, int dim, const std::string& where) {
  if (j.contains(prefix + "_diag")) {
    const auto d = list<double>(j, prefix + "_diag", where);
    if (static_cast<int>(d.size()) != dim) {
      throw ConfigError(where + "." + prefix + "_diag: length " + std::to_string(d.size()) + ", expected " +
                        std::to_string(dim));
    }
    return Eigen::Map<const Vector>(d.data(), dim).asDiagonal().toDenseMatrix();
  }
  if (j.contains(prefix)) {
    Matrix m(dim, dim);
    const json& rows = j[prefix];
    if (!rows.is_array() || static_cast<int>(rows.size()) != dim) {
      throw ConfigError(where + "." + prefix + ": expected a " + std::to_string(dim) + "x" + std::to_string(dim) +
                        " array");
    }
    for (int r = 0; r < dim; ++r) {
      if (!rows[r].is_array() || static_cast<int>(rows[r].size()) != dim) {
        throw ConfigError(where + "." + prefix + ": row " + std::to_string(r) + " has the wrong length");
      }
      for (int c = 0; c < dim; ++c) m(r, c) = rows[r][c].get<double>();
    }
    return m;
  }
  return std::nullopt;
}

HugMode hug_mode(const std::string& s, const std::string& where) {
  if (s == "plain") return HugMode::Plain;
  if (s == "fixed" || s == "fixedprecond" || s == "fixed_precond") return HugMode::FixedPrecond;
  if (s == "hessian") return HugMode::Hessian;
  throw ConfigError(where + ".mode: unknown Hug mode '" + s + "' (plain, fixed, hessian)");
}

HopGuard hop_guard(const std::string& s, const std::string& where) {
  if (s == "plus1") return HopGuard::Plus1;
  if (s == "raw") return HopGuard::Raw;
  throw ConfigError(where + ".guard: unknown guard '" + s + "' (raw, plus1)");
}

void rethrow_with(const std::string& where, const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(where + ": " + e.what());
  throw Error(where + ": " + e.what());
}

bool needs_hessian(const KernelSpec& k) {
  if (const auto* h = std::get_if<HugParams>(&k.params)) return h->mode == HugMode::Hessian;
  if (const auto* h = std::get_if<HopParams>(&k.params)) return h->use_hessian;
  if (const auto* r = std::get_if<RwmParams>(&k.params)) return r->local == LocalCovariance::Hessian;
  return false;
}

void validate_kernel(const KernelSpec& k) {
  std::visit([](const auto& p) { p.validate(); }, k.params);
}

}  // namespace

// ---------------------------------------------------------------- kernels

KernelSpec make_kernel(const json& spec, int dim, const std::string& where) {
  if (!spec.is_object()) throw ConfigError(where + ": expected an object");
  const std::string kind = text(spec, "kernel", where, "");
  KernelSpec k;
  k.name = kind;
  try {
    if (kind == "hug") {
      HugParams p;
      p.T = number(spec, "T", where, 1.0);
      p.B = static_cast<int>(integer(spec, "B", where, 10));
      p.mode = hug_mode(text(spec, "mode", where, "plain"), where);
      p.eps = number(spec, "eps", where, kDefaultMetricFloor);
      p.local_velocity = boolean(spec, "local_velocity", where, true);
      if (p.mode == HugMode::FixedPrecond) {
        const auto c = matrix_field(spec, "covariance", dim, where);
        if (!c) throw ConfigError(where + ": fixed mode needs covariance or covariance_diag");
        p.fixed_metric = LocalMetric::from_covariance(*c);
      }
      k.params = p;
    } else if (kind == "hop") {
      const auto kappa = maybe_number(spec, "kappa", where);
      const auto mu = maybe_number(spec, "mu", where);
      if (kappa && mu) throw ConfigError(where + ": give exactly one of kappa and mu");
      HopParams p = HopParams::defaults(dim);
      const double lambda = number(spec, "lambda", where, p.lambda);
      const HopGuard guard = hop_guard(text(spec, "guard", where, "plus1"), where);
      if (!(lambda > 0.0)) throw ConfigError(where + ".lambda: must be positive");
      if (mu) {
        p = HopParams::with_mu(lambda, *mu, guard);
      } else {
        const double kap = kappa.value_or(0.5);
        if (!(kap > 0.0)) throw ConfigError(where + ".kappa: must be positive");
        p = HopParams::with_kappa(lambda, kap, guard);
      }
      p.use_hessian = boolean(spec, "hessian", where, false);
      p.eps = number(spec, "eps", where, kDefaultMetricFloor);
      k.params = p;
    } else if (kind == "hmc") {
      HmcParams p;
      p.L = static_cast<int>(integer(spec, "L", where, 10));
      if (spec.contains("T") && !spec.contains("delta")) {
        p.delta = p.L > 0 ? number(spec, "T", where, 1.0) / p.L : 0.1;
      } else {
        p.delta = number(spec, "delta", where, 0.1);
      }
      if (const auto m = matrix_field(spec, "mass", dim, where)) p.with_mass(*m);
      k.params = p;
    } else if (kind == "rwm") {
      const double scale = number(spec, "scale", where, 2.38 / std::sqrt(static_cast<double>(dim)));
      const std::string local = text(spec, "local", where, "none");
      RwmParams p;
      if (local == "none") {
        p = RwmParams::isotropic(scale);
      } else if (local == "fixed") {
        const auto c = matrix_field(spec, "covariance", dim, where);
        if (!c) throw ConfigError(where + ": fixed covariance needs covariance or covariance_diag");
        p = RwmParams::with_fixed(scale, *c);
      } else if (local == "hessian") {
        p = RwmParams::with_hessian(scale, number(spec, "eps", where, kDefaultMetricFloor));
      } else {
        throw ConfigError(where + ".local: unknown value '" + local + "' (none, fixed, hessian)");
      }
      k.params = p;
    } else if (kind == "mala") {
      MalaParams p;
      p.step_scale = number(spec, "scale", where, 0.5);
      k.params = p;
    } else {
      throw ConfigError(where + ".kernel: unknown kernel '" + kind + "' (hug, hop, hmc, rwm, mala)");
    }
    validate_kernel(k);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind(where, 0) == 0) throw;
    throw ConfigError(where + ": " + msg);
  } catch (const FactorizationError& e) {
    throw ConfigError(where + ": covariance is not positive definite (" + e.what() + ")");
  }
  return k;
}

StepOutcome kernel_step(const KernelSpec& kernel, const Target& target, ChainState& state, Rng& rng) {
  return std::visit(
      [&](const auto& p) -> StepOutcome {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, HugParams>) return hug_step(target, state, p, rng);
        if constexpr (std::is_same_v<P, HopParams>) return hop_step(target, state, p, rng);
        if constexpr (std::is_same_v<P, HmcParams>) return hmc_step(target, state, p, rng);
        if constexpr (std::is_same_v<P, RwmParams>) return rwm_step(target, state, p, rng);
        if constexpr (std::is_same_v<P, MalaParams>) return mala_step(target, state, p, rng);
      },
      kernel.params);
}

// ---------------------------------------------------------------- chains

ChainResult run_chain(const Target& target, const std::vector<KernelSpec>& kernels, const ChainOptions& options) {
  if (kernels.empty()) throw ConfigError("kernels: at least one kernel is required");
  if (options.iterations < 1) throw ConfigError("iterations: must be >= 1");
  if (options.thin < 1) throw ConfigError("thin: must be >= 1");
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    validate_kernel(kernels[k]);
    if (needs_hessian(kernels[k]) && !target.has_hessian()) {
      throw ConfigError("kernels." + std::to_string(k) + ": needs a Hessian, which " + target.name() +
                        " does not provide");
    }
  }

  Rng rng(options.seed);
  Vector x0;
  if (options.start) {
    x0 = *options.start;
  } else if (target.has_exact_sampler()) {
    x0 = target.sample_one(rng);
  } else {
    x0 = Vector::Zero(target.dim());
  }
  ChainState state = ChainState::at(target, x0);

  ChainResult result;
  Trace& trace = result.trace;
  const long stored = (options.iterations + options.thin - 1) / options.thin;
  trace.positions.resize(stored, target.dim());
  trace.log_target.resize(stored);
  trace.iterations = options.iterations;
  trace.thin = options.thin;
  for (const auto& k : kernels) trace.kernels.push_back(k.name);
  trace.accepted.assign(kernels.size(), std::vector<std::uint8_t>(options.iterations, 0));
  trace.failures.assign(kernels.size(), 0);

  const auto t0 = std::chrono::steady_clock::now();
  long row = 0;
  for (long i = 0; i < options.iterations; ++i) {
    for (std::size_t k = 0; k < kernels.size(); ++k) {
      try {
        const StepOutcome out = kernel_step(kernels[k], target, state, rng);
        trace.accepted[k][i] = out.accepted;
        trace.failures[k] += out.failed;
      } catch (const std::exception& e) {
        rethrow_with("iteration " + std::to_string(i) + ", kernel " + kernels[k].name, e);
      }
    }
    if (i % options.thin == 0) {
      trace.positions.row(row) = state.x.transpose();
      trace.log_target[row] = state.log_density;
      ++row;
    }
  }
  trace.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  result.summary = summarize_run(trace, options.burn_in);
  return result;
}

ExperimentConfig ExperimentConfig::from_json(const json& resolved) {
  ExperimentConfig c;
  c.resolved = resolved;
  c.target = resolved.at("target");
  if (!resolved.at("kernels").is_array()) throw ConfigError("kernels: expected an array");
  for (const auto& k : resolved.at("kernels")) c.kernels.push_back(k);
  c.chain.iterations = integer(resolved, "iterations", "config", 10000);
  c.chain.burn_in = number(resolved, "burn_in", "config", 0.2);
  c.chain.thin = static_cast<int>(integer(resolved, "thin", "config", 1));
  c.chain.seed = resolved.at("seed").get<std::uint64_t>();
  if (!(c.chain.burn_in >= 0.0 && c.chain.burn_in < 1.0)) throw ConfigError("config.burn_in: must be in [0, 1)");
  if (resolved.contains("start")) {
    const auto start = list<double>(resolved, "start", "config");
    c.chain.start = Eigen::Map<const Vector>(start.data(), static_cast<Eigen::Index>(start.size()));
  }
  const json& output = resolved.value("output", json::object());
  c.out_dir = output.value("dir", "out");
  c.save_trace = boolean(output, "trace", "output", false);
  return c;
}

namespace {

TargetPtr build_target(const json& spec) {
  try {
    return make_target(spec);
  } catch (const std::exception& e) {
    rethrow_with("target", e);
  }
  return nullptr;
}

std::vector<KernelSpec> build_kernels(const std::vector<json>& specs, int dim) {
  std::vector<KernelSpec> out;
  for (std::size_t k = 0; k < specs.size(); ++k) out.push_back(make_kernel(specs[k], dim, "kernels." + std::to_string(k)));
  return out;
}

}  // namespace

ChainResult run_chain(const ExperimentConfig& config) {
  const TargetPtr target = build_target(config.target);
  ChainOptions options = config.chain;
  if (options.start && options.start->size() != target->dim()) {
    throw ConfigError("config.start: length does not match the target dimension");
  }
  return run_chain(*target, build_kernels(config.kernels, target->dim()), options);
}

// ---------------------------------------------------------------- tuning

Objective objective_by_name(const std::string& name) {
  auto geomean = [](double a, double b) { return a > 0.0 && b > 0.0 ? std::sqrt(a * b) : 0.0; };
  if (name == "geomean_per_second") {
    return [=](const RunSummary& s) { return geomean(s.min_ess_x_per_second, s.ess_logpi_per_second); };
  }
  if (name == "geomean_per_1000") {
    return [=](const RunSummary& s) { return geomean(s.min_ess_x_per_1000, s.ess_logpi_per_1000); };
  }
  if (name == "min_ess_x_per_1000") return [](const RunSummary& s) { return s.min_ess_x_per_1000; };
  if (name == "ess_logpi_per_1000") return [](const RunSummary& s) { return s.ess_logpi_per_1000; };
  if (name == "min_ess_x_per_second") return [](const RunSummary& s) { return s.min_ess_x_per_second; };
  if (name == "ess_logpi_per_second") return [](const RunSummary& s) { return s.ess_logpi_per_second; };
  throw ConfigError("tune.objective: unknown objective '" + name + "'");
}

namespace {

// Runs job(i) for i in [0, n) on `threads` workers.
template <typename Job>
void parallel_for(std::size_t n, int threads, Job job) {
  const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

TuneResult grid_tune(const json& base, const json& grid, const TuneOptions& options, const Objective& objective) {
  if (!grid.is_object() || grid.empty()) throw ConfigError("grid: expected a non-empty object of value lists");
  std::vector<std::string> keys;
  std::vector<json> values;
  std::size_t cells = 1;
  for (const auto& [key, list] : grid.items()) {
    if (!list.is_array() || list.empty()) throw ConfigError("grid." + key + ": expected a non-empty list");
    keys.push_back(key);
    values.push_back(list);
    cells *= list.size();
  }
  const Objective score = objective ? objective : objective_by_name(options.objective);
  const std::uint64_t master = base.at("seed").get<std::uint64_t>();

  TuneResult result;
  result.cells.resize(cells);
  parallel_for(cells, options.threads, [&](std::size_t c) {
    GridCell& cell = result.cells[c];
    json config = base;
    std::size_t rest = c;
    // Last key varies fastest.
    for (std::size_t k = keys.size(); k-- > 0;) {
      const json& v = values[k][rest % values[k].size()];
      rest /= values[k].size();
      cell.assignment[keys[k]] = v;
      set_path(config, keys[k], v);
    }
    try {
      ExperimentConfig ec = ExperimentConfig::from_json(config);
      ec.chain.iterations = options.pilot_iterations;
      ec.chain.burn_in = options.burn_in;
      ec.chain.seed = child_seed(master, c);
      cell.summary = run_chain(ec).summary;
      cell.score = score(cell.summary);
      if (cell.summary.degenerate) {
        cell.failed = true;
        cell.error = "degenerate chain: " + cell.summary.degenerate_reason;
      } else if (!std::isfinite(cell.score)) {
        cell.failed = true;
        cell.error = "non-finite objective";
      }
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.error = e.what();
    }
  });

  bool any = false;
  for (std::size_t c = 0; c < cells; ++c) {
    if (result.cells[c].failed) continue;
    if (!any || result.cells[c].score > result.cells[result.best].score) result.best = c;
    any = true;
  }
  if (!any) {
    std::string msg = "grid_tune: every cell failed:";
    for (const auto& cell : result.cells) msg += "\n  " + cell.assignment.dump() + ": " + cell.error;
    throw Error(msg);
  }
  result.best_config = base;
  for (const auto& [key, v] : result.cells[result.best].assignment.items()) set_path(result.best_config, key, v);
  return result;
}

// ---------------------------------------------------------------- experiments

std::vector<HugEfficiencyRow> hug_efficiency_experiment(const Target& target, const std::vector<int>& Bs,
                                                        const std::vector<double>& Ts, long n, std::uint64_t seed,
                                                        const HugParams& base) {
  if (!target.has_exact_sampler()) throw NoExactSamplerError("hug-efficiency: " + target.name() + " has no exact sampler");
  if (n < 1) throw ConfigError("hug_efficiency.n: must be >= 1");
  std::vector<HugEfficiencyRow> rows;
  std::uint64_t cell = 0;
  for (int B : Bs) {
    for (double T : Ts) {
      HugParams p = base;
      p.B = B;
      p.T = T;
      p.validate();
      Rng rng(child_seed(seed, cell++));
      double a_sum = 0.0;
      double an2_sum = 0.0;
      for (long i = 0; i < n; ++i) {
        ChainState state = ChainState::at(target, target.sample_one(rng));
        const Vector x = state.x;
        const HugOutcome out = hug_step(target, state, p, rng);
        if (out.failed) continue;
        const double a = out.acceptance_probability();
        a_sum += a;
        an2_sum += a * (out.proposal - x).squaredNorm();
      }
      HugEfficiencyRow r;
      r.B = B;
      r.T = T;
      r.delta = p.step();
      r.n = n;
      r.mean_acceptance = a_sum / n;
      r.efficiency = an2_sum / n / (static_cast<double>(target.dim()) * B);
      rows.push_back(r);
    }
  }
  return rows;
}

StabilityTrace stability_experiment(const Target& target, double delta, long steps, std::uint64_t seed,
                                    double threshold, const HugParams& base) {
  if (!(delta >= 0.0)) throw ConfigError("stability.delta: must be >= 0");
  if (steps < 0) throw ConfigError("stability.steps: must be >= 0");
  StabilityTrace out;
  out.delta_l = Vector::Zero(steps);
  if (steps == 0) return out;
  Rng rng(seed);
  Vector x = target.has_exact_sampler() ? target.sample_one(rng) : Vector::Zero(target.dim());
  Vector v = standard_normal(rng, target.dim());
  const double l0 = target.log_density(x);
  HugParams p = base;
  p.T = delta;
  p.B = 1;
  p.record_bounces = false;
  for (long b = 0; b < steps; ++b) {
    try {
      HugTrajectory t = hug_trajectory(target, x, v, p);
      x = std::move(t.x);
      v = std::move(t.v);
      out.delta_l[b] = target.log_density(x) - l0;
    } catch (const Error&) {
      out.diverged = true;
      if (out.diverged_at < 0) out.diverged_at = b;
      out.delta_l.conservativeResize(b);
      return out;
    }
    if (std::abs(out.delta_l[b]) > threshold && out.diverged_at < 0) {
      out.diverged = true;
      out.diverged_at = b;
    }
  }
  return out;
}

std::vector<HopScalingRow> hop_scaling_experiment(const std::vector<json>& targets, const std::vector<int>& dims,
                                                  const std::vector<double>& lambdas,
                                                  const std::vector<double>& kappas, long iterations, double burn_in,
                                                  std::uint64_t seed, HopGuard guard, int threads) {
  struct Cell {
    std::size_t t;
    int dim;
    double lambda, kappa;
  };
  std::vector<Cell> cells;
  for (std::size_t t = 0; t < targets.size(); ++t)
    for (int d : dims)
      for (double l : lambdas)
        for (double k : kappas) cells.push_back({t, d, l, k});

  std::vector<HopScalingRow> rows(cells.size());
  std::vector<std::string> errors(cells.size());
  parallel_for(cells.size(), threads, [&](std::size_t c) {
    const Cell& cell = cells[c];
    json spec = targets[cell.t];
    spec["dim"] = cell.dim;
    HopScalingRow& row = rows[c];
    row.target = spec.value("label", spec.value("target", std::string("target")));
    row.dim = cell.dim;
    row.lambda = cell.lambda;
    row.kappa = cell.kappa;
    try {
      const TargetPtr target = build_target(spec);
      ChainOptions options;
      options.iterations = iterations;
      options.burn_in = burn_in;
      options.seed = child_seed(seed, c);
      const KernelSpec hop{"hop", HopParams::with_kappa(cell.lambda, cell.kappa, guard)};
      row.summary = run_chain(*target, {hop}, options).summary;
    } catch (const std::exception& e) {
      row.summary.degenerate = true;
      row.summary.degenerate_reason = e.what();
    }
  });
  return rows;
}

std::vector<HopScalingRow> hop_scaling_optima(const std::vector<HopScalingRow>& rows) {
  std::map<std::pair<std::string, int>, HopScalingRow> best;
  std::vector<std::pair<std::string, int>> order;
  for (const auto& r : rows) {
    if (r.summary.degenerate) continue;
    const auto key = std::make_pair(r.target, r.dim);
    auto it = best.find(key);
    if (it == best.end()) {
      best.emplace(key, r);
      order.push_back(key);
    } else if (r.summary.ess_logpi_per_1000 > it->second.summary.ess_logpi_per_1000) {
      it->second = r;
    }
  }
  std::vector<HopScalingRow> out;
  for (const auto& key : order) out.push_back(best.at(key));
  return out;
}

Theorem2Result theorem2_experiment(double precision_lo, double precision_hi, int dim, double lambda, double kappa,
                                   long proposals, std::uint64_t seed) {
  if (!(precision_lo > 0.0 && precision_hi >= precision_lo)) {
    throw ConfigError("theorem2.precision: need 0 < lo <= hi");
  }
  if (dim < 1 || proposals < 2) throw ConfigError("theorem2: need dim >= 1 and proposals >= 2");
  Rng rng(seed);
  std::uniform_real_distribution<double> law(precision_lo, precision_hi);
  Vector gamma(dim);
  for (int i = 0; i < dim; ++i) gamma[i] = law(rng);
  const GaussianDiag target = GaussianDiag::from_precisions(gamma);
  const HopParams params = HopParams::with_kappa(lambda, kappa, HopGuard::Raw);

  double mean = 0.0;
  double m2 = 0.0;
  for (long i = 0; i < proposals; ++i) {
    const ChainState state = ChainState::at(target, target.sample_one(rng));
    double a = 0.0;
    try {
      const Vector y = hop_propose(state.x, state.gradient, params, rng);
      const double lr = hop_log_ratio(target, state, y, params);
      a = lr >= 0.0 ? 1.0 : std::exp(lr);
    } catch (const Error&) {
      a = 0.0;
    }
    const double delta = a - mean;
    mean += delta / (i + 1);
    m2 += delta * (a - mean);
  }
  Theorem2Result r;
  r.dim = dim;
  r.lambda = lambda;
  r.kappa = kappa;
  r.proposals = proposals;
  r.mean_acceptance = mean;
  r.std_error = std::sqrt(m2 / (proposals - 1) / proposals);
  r.limit = 2.0 * normal_cdf(-0.5 * kappa);
  return r;
}

// ---------------------------------------------------------------- models

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream is(path);
  return json::parse(is);
}

}  // namespace

ModelRun run_model(const json& resolved, const fs::path& dataset_dir) {
  const json& model = resolved.at("model");
  const std::string name = text(model, "name", "model", "cauchit");
  const std::uint64_t data_seed = model.value("data_seed", std::uint64_t{2024});
  ExperimentConfig ec = ExperimentConfig::from_json(resolved);
  ModelRun run;

  auto manifest_of = [&](auto&& write) {
    if (dataset_dir.empty()) return json{{"model", name}, {"seed", data_seed}};
    return read_json_file(write(dataset_dir));
  };

  if (name == "cauchit" || name == "rasch") {
    TargetPtr target;
    if (name == "cauchit") {
      const int N = static_cast<int>(integer(model, "N", "model", 500));
      const int M = static_cast<int>(integer(model, "M", "model", 10));
      const double tau = number(model, "tau", "model", 1.0);
      CauchitData data = simulate_cauchit(N, M, tau, data_seed);
      run.manifest = manifest_of([&](const fs::path& d) { return write_dataset(data, tau, d); });
      target = std::make_shared<CauchitPosterior>(std::move(data), tau);
    } else {
      const int M = static_cast<int>(integer(model, "M", "model", 10));
      const int N = static_cast<int>(integer(model, "N", "model", 100));
      const double tau = number(model, "tau", "model", 1.0);
      RaschData data = simulate_rasch(M, N, tau, data_seed);
      run.manifest = manifest_of([&](const fs::path& d) { return write_dataset(data, tau, d); });
      target = std::make_shared<RaschPosterior>(std::move(data), tau);
    }
    run.total_dim = target->dim();
    ChainOptions options = ec.chain;
    if (!options.start) options.start = Vector::Zero(target->dim());
    run.chain = run_chain(*target, build_kernels(ec.kernels, target->dim()), options);
    return run;
  }

  if (name != "spatial") throw ConfigError("model.name: unknown model '" + name + "' (cauchit, rasch, spatial)");

  const int rows = static_cast<int>(integer(model, "rows", "model", 8));
  const int cols = static_cast<int>(integer(model, "cols", "model", 8));
  GibbsOptions gibbs;
  gibbs.tau = number(model, "tau", "model", 1.0);
  gibbs.theta_step = number(model, "theta_step", "model", 0.3);
  gibbs.jitter = number(model, "jitter", "model", 1e-10);
  gibbs.use_likelihood = boolean(model, "use_likelihood", "model", true);
  if (!(gibbs.theta_step >= 0.0)) throw ConfigError("model.theta_step: must be >= 0");
  const SpatialProbitData data = simulate_spatial(rows, cols, number(model, "rho", "model", std::numbers::ln2),
                                                  number(model, "psi", "model", std::log(0.2)), data_seed,
                                                  gibbs.jitter);
  run.manifest = manifest_of([&](const fs::path& d) { return write_dataset(data, gibbs.tau, d); });
  const int nz = rows * cols;
  run.z_dim = nz;
  run.total_dim = nz + 2;

  const auto kernels = build_kernels(ec.kernels, nz);
  SpatialInnerKernel inner;
  std::vector<std::string> names;
  if (kernels.size() == 2 && kernels[0].name == "hug" && kernels[1].name == "hop") {
    inner = HugHopInner{std::get<HugParams>(kernels[0].params), std::get<HopParams>(kernels[1].params)};
    names = {"hug", "hop", "theta"};
  } else if (kernels.size() == 1 && kernels[0].name == "hmc") {
    inner = std::get<HmcParams>(kernels[0].params);
    names = {"hmc", "theta"};
  } else {
    throw ConfigError("kernels: the spatial model takes [hug, hop] or [hmc] for the latent field");
  }

  const ChainOptions& options = ec.chain;
  Rng rng(options.seed);
  SpatialState state;
  state.z = Vector::Zero(nz);
  Trace& trace = run.chain.trace;
  const long stored = (options.iterations + options.thin - 1) / options.thin;
  trace.positions.resize(stored, nz + 2);
  trace.log_target.resize(stored);
  trace.iterations = options.iterations;
  trace.thin = options.thin;
  trace.kernels = names;
  trace.accepted.assign(names.size(), std::vector<std::uint8_t>(options.iterations, 0));
  trace.failures.assign(names.size(), 0);

  const auto t0 = std::chrono::steady_clock::now();
  long row = 0;
  for (long i = 0; i < options.iterations; ++i) {
    GibbsOutcome out;
    try {
      out = gibbs_step(data, state, inner, gibbs, rng);
    } catch (const std::exception& e) {
      rethrow_with("iteration " + std::to_string(i), e);
    }
    std::size_t k = 0;
    trace.accepted[k++][i] = out.inner_accepted;
    if (names.size() == 3) trace.accepted[k++][i] = out.hop_accepted;
    trace.accepted[k][i] = out.theta_accepted;
    trace.failures[k] += out.theta_failed;
    if (i % options.thin == 0) {
      trace.positions.row(row).head(nz) = state.z.transpose();
      trace.positions(row, nz) = state.rho;
      trace.positions(row, nz + 1) = state.psi;
      trace.log_target[row] = spatial_joint_log_density(data, state, gibbs);
      ++row;
    }
  }
  trace.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.chain.summary = summarize_run(trace, options.burn_in);
  if (!run.chain.summary.degenerate) {
    run.min_ess_z = run.chain.summary.ess_components.head(nz).minCoeff();
    run.min_ess_theta = run.chain.summary.ess_components.tail(2).minCoeff();
  }
  return run;
}

// ---------------------------------------------------------------- output

std::string csv_preamble(const json& config) {
  return std::string("# hughop ") + kVersion + "\n# config " + config.dump() + "\n";
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << std::setprecision(17);
  return os;
}

}  // namespace

void write_trace_csv(const fs::path& path, const Trace& trace, const json& config) {
  std::ofstream os = open_out(path);
  os << csv_preamble(config) << "iteration";
  for (Eigen::Index j = 0; j < trace.positions.cols(); ++j) os << ",x" << j + 1;
  os << ",logpi";
  for (const auto& k : trace.kernels) os << ",accepted_" << k;
  os << '\n';
  for (Eigen::Index r = 0; r < trace.positions.rows(); ++r) {
    const long it = static_cast<long>(r) * trace.thin;
    os << it;
    for (Eigen::Index j = 0; j < trace.positions.cols(); ++j) os << ',' << trace.positions(r, j);
    os << ',' << trace.log_target[r];
    for (const auto& flags : trace.accepted) os << ',' << int(flags[it]);
    os << '\n';
  }
}

void write_summary_json(const fs::path& path, const RunSummary& summary, const json& config) {
  std::ofstream os = open_out(path);
  os << json{{"version", kVersion}, {"config", config}, {"summary", summary.to_json()}}.dump(2) << '\n';
}

void append_result(const fs::path& path, const json& record) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::app);
  if (!os) throw Error("cannot append to " + path.string());
  os << record.dump() << '\n';
}

void write_grid_csv(const fs::path& path, const TuneResult& result, const json& config) {
  std::ofstream os = open_out(path);
  os << csv_preamble(config);
  std::vector<std::string> keys;
  if (!result.cells.empty())
    for (const auto& [k, v] : result.cells.front().assignment.items()) keys.push_back(k);
  os << "cell";
  for (const auto& k : keys) os << ',' << k;
  os << ",score,min_ess_x,ess_logpi,min_ess_x_per_1000,ess_logpi_per_1000,min_ess_x_per_second,"
        "ess_logpi_per_second,acceptance,best,failed,error\n";
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    const GridCell& cell = result.cells[c];
    const RunSummary& s = cell.summary;
    os << c;
    for (const auto& k : keys) os << ',' << cell.assignment[k].dump();
    std::string acc;
    for (const auto& [name, a] : s.acceptance) acc += (acc.empty() ? "" : ";") + name + "=" + std::to_string(a);
    std::string err = cell.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << ',' << cell.score << ',' << s.min_ess_x << ',' << s.ess_logpi << ',' << s.min_ess_x_per_1000 << ','
       << s.ess_logpi_per_1000 << ',' << s.min_ess_x_per_second << ',' << s.ess_logpi_per_second << ',' << acc << ','
       << (c == result.best) << ',' << cell.failed << ',' << err << '\n';
  }
}

void write_hug_efficiency_csv(const fs::path& path, const std::vector<HugEfficiencyRow>& rows, const json& config) {
  std::ofstream os = open_out(path);
  os << csv_preamble(config) << "B,T,delta,n,mean_acceptance,efficiency\n";
  for (const auto& r : rows)
    os << r.B << ',' << r.T << ',' << r.delta << ',' << r.n << ',' << r.mean_acceptance << ',' << r.efficiency << '\n';
}

void write_stability_csv(const fs::path& path, const StabilityTrace& trace, const json& config) {
  std::ofstream os = open_out(path);
  os << csv_preamble(config) << "# diverged " << (trace.diverged ? "true" : "false") << " at " << trace.diverged_at
     << "\nbounce,delta_l\n";
  for (Eigen::Index b = 0; b < trace.delta_l.size(); ++b) os << b + 1 << ',' << trace.delta_l[b] << '\n';
}

void write_hop_scaling_csv(const fs::path& path, const std::vector<HopScalingRow>& rows, const json& config) {
  std::ofstream os = open_out(path);
  os << csv_preamble(config)
     << "target,dim,lambda,kappa,ess_logpi,ess_logpi_per_1000,min_ess_x,min_ess_x_per_1000,acceptance,degenerate\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    const double acc = s.acceptance.count("hop") ? s.acceptance.at("hop") : 0.0;
    os << r.target << ',' << r.dim << ',' << r.lambda << ',' << r.kappa << ',' << s.ess_logpi << ','
       << s.ess_logpi_per_1000 << ',' << s.min_ess_x << ',' << s.min_ess_x_per_1000 << ',' << acc << ','
       << s.degenerate << '\n';
  }
}

void write_theorem2_csv(const fs::path& path, const std::vector<Theorem2Result>& rows, const json& config) {
  std::ofstream os = open_out(path);
  os << csv_preamble(config) << "dim,lambda,kappa,proposals,mean_acceptance,std_error,limit\n";
  for (const auto& r : rows)
    os << r.dim << ',' << r.lambda << ',' << r.kappa << ',' << r.proposals << ',' << r.mean_acceptance << ','
       << r.std_error << ',' << r.limit << '\n';
}

}  // namespace hughop
