#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ultraheat/generators.hpp"
#include "ultraheat/kernel.hpp"
#include "ultraheat/report.hpp"

namespace ultraheat {

inline constexpr const char* kVersion = "0.1.0";

struct TimeGrid {
  double min = 1e-3;
  double max = 1.0;
  int points = 16;
  std::string scale = "log";  // "log" or "linear"

  std::vector<double> values() const;
};

struct Tolerances {
  double identity = 1e-12;
  double spectral = 1e-10;
  double finite_difference = 1e-6;
};

/// Check names accepted in a run config, in report order.
const std::vector<std::string>& all_checks();

struct RunConfig {
  SpacePtr space;
  std::shared_ptr<const JumpKernel> kernel;
  Json space_json;
  Json kernel_json;
  ExponentConfig exponents;
  TimeGrid grid;
  std::vector<std::string> checks;
  Tolerances tol;
  std::filesystem::path output = "out";
  std::uint64_t seed = 1;
  std::vector<double> lambdas{-50.0, -5.0, 0.0, 5.0, 50.0};
  int samples = 3;
  int ode_samples = 20;
  int moser_k_max = 8;
  /// Defaults to the largest grid time.
  std::optional<double> moser_t;
};

/// Config JSON:
///   space:     inline spec | {"file": path} | {"distance_csv": path} | {"generator": {...}}
///   kernel:    see kernel_from_json
///   exponents: {"alpha", "beta", "R0"}; R0 defaults to diam
///   time_grid: {"min", "max", "points", "scale"}
///   checks, tolerances, output, seed, lambdas, samples, ode_samples, moser: {"k_max", "t"}
/// Throws Error with code ConfigError (or the code of the failing module).
RunConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

struct RunResult {
  Json report;
  std::optional<Json> certificate;
  std::vector<CheckRecord> records;
  /// 0 when no check failed, 1 otherwise.
  int exit_code = 0;
};

/// Runs the selected checks. Independent checks run on up to
/// ULTRAHEAT_THREADS threads; the report order does not depend on it.
RunResult run_checks(const RunConfig& cfg);

/// run_checks plus report.json, certificate.json and curves/*.csv under
/// cfg.output.
RunResult run(const RunConfig& cfg);

/// Writes curves/*.csv only.
std::vector<std::filesystem::path> write_curves(const RunConfig& cfg);

/// Writes space.json, kernel.json and config.json into `out`.
struct GenerateOptions {
  GeneratorParams params;
  double exponent = 3.0;
  std::string scaling = "none";
};
std::vector<std::filesystem::path> generate_files(const GenerateOptions& opts,
                                                  const std::filesystem::path& out);

int thread_count();

}  // namespace ultraheat
