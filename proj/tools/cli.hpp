#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "lkc/lkc.hpp"

namespace lkc::cli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kCommands[] = {"spectrum",   "winding",    "topo-diagram", "evolve-ee",
                                            "ee-scaling", "ee-diagram", "validate"};

/// Fully resolved run parameters. Fields irrelevant to the chosen command keep their defaults.
struct RunConfig {
  std::string command;
  ChainSpec model = ChainSpec::nearest_neighbour(1.0, 1.0, 0.0, 0.0);
  int L = 400;
  std::vector<int> l_values;  // empty: default_l_values(L)
  int l = 0;                  // evolve-ee subsystem; 0: L / 4
  double T = 2000.0;
  std::vector<double> times;  // evolve-ee
  std::vector<double> u_grid;
  std::vector<double> v_grid;
  Boundary boundary = Boundary::Open;
  double zero_tol = 1e-4;
  double gap_tol = 1e-8;
  double steady_tol = 1e-6;
  double g_threshold = kDefaultGThreshold;
  int winding_grid = 256;
  int max_winding_grid = 1 << 22;
  std::filesystem::path output = "runs";
  int workers = 1;
  bool dump_correlator = false;
  YAML::Node source;  // merged document after overrides, echoed into the manifest
};

/// Shortest decimal string that parses back to the same double ("0.8", "1", "nan").
std::string format_real(double x);

/// start, start + step, ... up to stop inclusive, each rounded to 1e-12.
std::vector<double> arithmetic_grid(double start, double stop, double step);

/// Applies `a.b.c=value` to the document; the value is parsed as YAML.
void apply_override(YAML::Node& root, const std::string& assignment);

/// Validates the document and resolves defaults. `command` comes from the command line and
/// must agree with the document's `command` key when present.
RunConfig resolve_config(const YAML::Node& root, const std::string& command);

/// Entry point shared by the executable and the tests. Returns the process exit status:
/// 0 success, 2 partial per-cell failure, 1 configuration or IO error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::string sha256_hex(const std::filesystem::path& file);

}  // namespace lkc::cli
