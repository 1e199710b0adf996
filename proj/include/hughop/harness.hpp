#pragma once

#include "hughop/baselines.hpp"
#include "hughop/diagnostics.hpp"
#include "hughop/hop.hpp"
#include "hughop/hug.hpp"
#include "hughop/target.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace hughop {

// ---------------------------------------------------------------- configuration

/// Built-in defaults for every config field the harness reads.
nlohmann::json default_config();

/// Sets `value` at a dotted path ("kernels.1.lambda"); numeric components
/// index arrays, missing objects are created.
void set_path(nlohmann::json& tree, const std::string& dotted, const nlohmann::json& value);

/// Parses the right-hand side of `--set key=value`: JSON if it parses
/// (numbers, booleans, arrays, quoted strings), a bare string otherwise.
nlohmann::json parse_set_value(const std::string& text);

/// defaults ← file ← `--set` overrides (later wins). Objects merge key by key;
/// arrays and scalars are replaced.
nlohmann::json resolve_config(const nlohmann::json& file, const std::vector<std::string>& sets);

// ---------------------------------------------------------------- kernels

using KernelParams = std::variant<HugParams, HopParams, HmcParams, RwmParams, MalaParams>;

struct KernelSpec {
  std::string name;  ///< "hug", "hop", "hmc", "rwm" or "mala"
  KernelParams params;
};

/// Kernel from its config record, e.g.
///   {"kernel":"hug","T":1,"B":10,"mode":"hessian","eps":1e-6}
///   {"kernel":"hop","lambda":4,"kappa":0.5,"hessian":false,"guard":"plus1"}
/// `dim` fills dimension-dependent defaults. `where` prefixes error messages.
KernelSpec make_kernel(const nlohmann::json& spec, int dim, const std::string& where = "kernel");

StepOutcome kernel_step(const KernelSpec& kernel, const Target& target, ChainState& state, Rng& rng);

// ---------------------------------------------------------------- chains

struct ChainOptions {
  long iterations = 10000;
  double burn_in = 0.2;  ///< fraction of iterations discarded before ESS
  int thin = 1;
  std::uint64_t seed = 1;
  /// Starting point; an exact draw when unset and available, else the origin.
  std::optional<Vector> start;
};

struct ChainResult {
  Trace trace;
  RunSummary summary;
};

/// One iteration applies every kernel once, in order (Hug then Hop for
/// Hug-and-Hop). Deterministic given the seed.
ChainResult run_chain(const Target& target, const std::vector<KernelSpec>& kernels, const ChainOptions& options);

/// Declarative run description, read from a resolved config tree.
struct ExperimentConfig {
  nlohmann::json resolved;
  nlohmann::json target;
  std::vector<nlohmann::json> kernels;
  ChainOptions chain;
  std::string out_dir;
  bool save_trace = false;

  static ExperimentConfig from_json(const nlohmann::json& resolved);
};

ChainResult run_chain(const ExperimentConfig& config);

// ---------------------------------------------------------------- tuning

using Objective = std::function<double(const RunSummary&)>;

/// "geomean_per_second" (default): √(minESS(X)/s · ESS(ℓ)/s);
/// "geomean_per_1000": the same per 1000 iterations (deterministic);
/// "min_ess_x_per_1000", "ess_logpi_per_1000", "min_ess_x_per_second",
/// "ess_logpi_per_second".
Objective objective_by_name(const std::string& name);

struct TuneOptions {
  long pilot_iterations = 10000;
  double burn_in = 0.2;
  std::string objective = "geomean_per_second";
  int threads = 1;
};

struct GridCell {
  nlohmann::json assignment;  ///< dotted path → value
  RunSummary summary;
  double score = 0.0;
  bool failed = false;
  std::string error;
};

struct TuneResult {
  std::vector<GridCell> cells;
  std::size_t best = 0;
  nlohmann::json best_config;
};

/// Cartesian product of `grid` (dotted path → list of values) applied to
/// `base`; each cell runs a pilot chain with seed child_seed(seed, cell).
/// Cells run on `threads` workers; results do not depend on the count.
/// Throws Error listing every cell when all cells are degenerate or fail.
TuneResult grid_tune(const nlohmann::json& base, const nlohmann::json& grid, const TuneOptions& options,
                     const Objective& objective = {});

// ---------------------------------------------------------------- experiments

struct HugEfficiencyRow {
  int B = 0;
  double T = 0.0;
  double delta = 0.0;
  long n = 0;
  double mean_acceptance = 0.0;
  double efficiency = 0.0;  ///< Ê[A N²] / (d B)
};

/// For every (B, T): n times draw x exactly, make one Hug proposal x′ and
/// record N = ‖x′ − x‖ and A = α(x, x′).
std::vector<HugEfficiencyRow> hug_efficiency_experiment(const Target& target, const std::vector<int>& Bs,
                                                        const std::vector<double>& Ts, long n,
                                                        std::uint64_t seed, const HugParams& base = {});

struct StabilityTrace {
  Vector delta_l;  ///< Δ_b = ℓ(x_b) − ℓ(x₀), b = 1..steps
  bool diverged = false;
  long diverged_at = -1;  ///< first bounce with |Δ| > threshold or a non-finite state
};

/// Runs `steps` Hug bounces of size δ without accept/reject from an exact draw
/// (origin-free start otherwise) and a N(0, I) velocity.
StabilityTrace stability_experiment(const Target& target, double delta, long steps, std::uint64_t seed,
                                    double threshold = 1e6, const HugParams& base = {});

struct HopScalingRow {
  std::string target;
  int dim = 0;
  double lambda = 0.0;
  double kappa = 0.0;
  RunSummary summary;
};

/// Hop-only chains for every (target, d, λ, κ); `targets` are make_target
/// records without "dim".
std::vector<HopScalingRow> hop_scaling_experiment(const std::vector<nlohmann::json>& targets,
                                                  const std::vector<int>& dims,
                                                  const std::vector<double>& lambdas,
                                                  const std::vector<double>& kappas, long iterations,
                                                  double burn_in, std::uint64_t seed,
                                                  HopGuard guard = HopGuard::Plus1, int threads = 1);

/// Best λ per (target, d) by ESS(ℓ) per iteration.
std::vector<HopScalingRow> hop_scaling_optima(const std::vector<HopScalingRow>& rows);

struct Theorem2Result {
  int dim = 0;
  double lambda = 0.0;
  double kappa = 0.0;
  long proposals = 0;
  double mean_acceptance = 0.0;
  double std_error = 0.0;
  double limit = 0.0;  ///< 2Φ(−κ/2)
};

/// Gaussian with precisions i.i.d. Uniform(lo, hi); every proposal starts from
/// a fresh exact draw; Hop with the Raw guard; averages α.
Theorem2Result theorem2_experiment(double precision_lo, double precision_hi, int dim, double lambda,
                                   double kappa, long proposals, std::uint64_t seed);

// ---------------------------------------------------------------- models

struct ModelRun {
  ChainResult chain;
  nlohmann::json manifest;  ///< dataset manifest (seed, sizes, true values)
  int z_dim = 0;            ///< spatial model: latent field size
  int total_dim = 0;        ///< dimension of the sampled state
  /// Spatial model only: min ESS over Z and over θ, post-burn-in.
  std::optional<double> min_ess_z;
  std::optional<double> min_ess_theta;
};

/// Simulates the dataset named by config["model"] ("cauchit", "rasch" or
/// "spatial"), writes it to `dataset_dir` when non-empty, and samples the
/// posterior with config["kernels"]. The spatial model runs the
/// Metropolis-within-Gibbs sweep with [hug, hop] or [hmc] on Z.
ModelRun run_model(const nlohmann::json& resolved, const std::filesystem::path& dataset_dir = {});

// ---------------------------------------------------------------- output

/// Header block embedded at the top of every CSV output:
///   # hughop <version>
///   # config <resolved config as one-line JSON>
std::string csv_preamble(const nlohmann::json& config);

/// Trace as CSV: iteration, x1..xd, logpi, one accepted_<kernel> column per kernel.
void write_trace_csv(const std::filesystem::path& path, const Trace& trace, const nlohmann::json& config);

/// {"version", "config", "summary"} as pretty JSON.
void write_summary_json(const std::filesystem::path& path, const RunSummary& summary, const nlohmann::json& config);

/// Appends the same record as one line of JSON.
void append_result(const std::filesystem::path& path, const nlohmann::json& record);

void write_grid_csv(const std::filesystem::path& path, const TuneResult& result, const nlohmann::json& config);
void write_hug_efficiency_csv(const std::filesystem::path& path, const std::vector<HugEfficiencyRow>& rows,
                              const nlohmann::json& config);
void write_stability_csv(const std::filesystem::path& path, const StabilityTrace& trace,
                         const nlohmann::json& config);
void write_hop_scaling_csv(const std::filesystem::path& path, const std::vector<HopScalingRow>& rows,
                           const nlohmann::json& config);
void write_theorem2_csv(const std::filesystem::path& path, const std::vector<Theorem2Result>& rows,
                        const nlohmann::json& config);

}  // namespace hughop
