#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"

namespace lkc::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x + 0.0);
  return {buf, res.ptr};
}

std::vector<double> arithmetic_grid(double start, double stop, double step) {
  if (!(step > 0.0)) throw ConfigError("grid step must be positive");
  if (stop < start) throw ConfigError("grid stop must not be below start");
  const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
  if (n > 10'000'000) throw ConfigError("grid has too many points");
  std::vector<double> out;
  for (long long i = 0; i <= n; ++i) out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
  return out;
}

void apply_override(YAML::Node& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects path=value, got '" + assignment + "'");
  std::vector<std::string> keys;
  std::stringstream path(assignment.substr(0, eq));
  for (std::string k; std::getline(path, k, '.');) {
    if (k.empty()) throw ConfigError("--set: empty path component in '" + assignment + "'");
    keys.push_back(k);
  }
  YAML::Node value;
  try {
    value = YAML::Load(assignment.substr(eq + 1));
  } catch (const YAML::Exception& e) {
    throw ConfigError("--set: cannot parse value in '" + assignment + "': " + e.what());
  }
  auto set = [&](auto&& self, YAML::Node node, std::size_t i) -> void {
    if (i + 1 == keys.size()) {
      node[keys[i]] = value;
      return;
    }
    if (!node[keys[i]] || !node[keys[i]].IsMap()) node[keys[i]] = YAML::Node(YAML::NodeType::Map);
    self(self, node[keys[i]], i + 1);
  };
  if (!root || !root.IsMap()) root = YAML::Node(YAML::NodeType::Map);
  set(set, root, 0);
}

namespace {

template <class T>
T scalar(const YAML::Node& n, const std::string& where) {
  if (!n.IsScalar()) throw ConfigError(where + ": expected a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + ": cannot parse '" + n.Scalar() + "'");
  }
}

void check_keys(const YAML::Node& n, const std::set<std::string>& allowed, const std::string& where) {
  if (!n.IsMap()) throw ConfigError(where + ": expected a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

std::vector<double> real_list(const YAML::Node& n, const std::string& where) {
  if (n.IsSequence()) {
    std::vector<double> out;
    for (std::size_t i = 0; i < n.size(); ++i) out.push_back(scalar<double>(n[i], where + "[" + std::to_string(i) + "]"));
    if (out.empty()) throw ConfigError(where + ": empty list");
    return out;
  }
  if (n.IsMap()) {
    check_keys(n, {"start", "stop", "step"}, where);
    for (const char* k : {"start", "stop", "step"})
      if (!n[k]) throw ConfigError(where + ": missing '" + k + "'");
    return arithmetic_grid(scalar<double>(n["start"], where + ".start"), scalar<double>(n["stop"], where + ".stop"),
                           scalar<double>(n["step"], where + ".step"));
  }
  if (n.IsScalar()) return {scalar<double>(n, where)};
  throw ConfigError(where + ": expected a number, a list, or {start, stop, step}");
}

ChainSpec parse_model(const YAML::Node& n) {
  check_keys(n, {"couplings", "u", "v"}, "model");
  if (!n["couplings"] || !n["couplings"].IsSequence())
    throw ConfigError("model.couplings: expected a list of {r, J, Delta}");
  std::vector<Coupling> cs;
  for (std::size_t i = 0; i < n["couplings"].size(); ++i) {
    const auto c = n["couplings"][i];
    const std::string where = "model.couplings[" + std::to_string(i) + "]";
    check_keys(c, {"r", "J", "Delta"}, where);
    for (const char* k : {"r", "J", "Delta"})
      if (!c[k]) throw ConfigError(where + ": missing '" + k + "'");
    cs.push_back({scalar<int>(c["r"], where + ".r"), scalar<double>(c["J"], where + ".J"),
                  scalar<double>(c["Delta"], where + ".Delta")});
  }
  const double u = n["u"] ? scalar<double>(n["u"], "model.u") : 0.0;
  const double v = n["v"] ? scalar<double>(n["v"], "model.v") : 0.0;
  try {
    return ChainSpec(std::move(cs), u, v);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

void require_positive(double x, const std::string& name) {
  if (!(x > 0.0)) throw ConfigError(name + " must be positive");
}

}  // namespace

RunConfig resolve_config(const YAML::Node& root, const std::string& command) {
  if (std::find(std::begin(kCommands), std::end(kCommands), command) == std::end(kCommands))
    throw ConfigError("unknown command '" + command + "'");
  check_keys(root, {"command", "model", "L", "l_values", "l", "T", "times", "grid", "boundary", "tolerances",
                    "winding_grid", "max_winding_grid", "output", "workers"},
             "config");
  RunConfig cfg;
  cfg.command = command;
  cfg.source = YAML::Clone(root);
  if (root["command"]) {
    const auto declared = scalar<std::string>(root["command"], "command");
    if (declared != command)
      throw ConfigError("config declares command '" + declared + "' but '" + command + "' was requested");
  }
  if (!root["model"]) throw ConfigError("config: missing 'model' block");
  cfg.model = parse_model(root["model"]);

  if (root["L"]) cfg.L = scalar<int>(root["L"], "L");
  if (cfg.L < 2 || cfg.L % 2 != 0) throw ConfigError("L must be even and at least 2");
  if (root["T"]) cfg.T = scalar<double>(root["T"], "T");
  require_positive(cfg.T, "T");
  if (root["l"]) cfg.l = scalar<int>(root["l"], "l");
  if (cfg.l == 0) cfg.l = cfg.L / 4;
  if (root["l_values"]) {
    const auto& n = root["l_values"];
    if (!n.IsSequence()) throw ConfigError("l_values: expected a list of integers");
    for (std::size_t i = 0; i < n.size(); ++i) cfg.l_values.push_back(scalar<int>(n[i], "l_values"));
  }
  if (cfg.l_values.empty()) cfg.l_values = default_l_values(cfg.L);
  if (root["times"]) cfg.times = real_list(root["times"], "times");
  if (root["grid"]) {
    check_keys(root["grid"], {"u", "v"}, "grid");
    if (root["grid"]["u"]) cfg.u_grid = real_list(root["grid"]["u"], "grid.u");
    if (root["grid"]["v"]) cfg.v_grid = real_list(root["grid"]["v"], "grid.v");
  }
  if (root["boundary"]) {
    const auto b = scalar<std::string>(root["boundary"], "boundary");
    if (b == "open" || b == "OBC") cfg.boundary = Boundary::Open;
    else if (b == "periodic" || b == "PBC") cfg.boundary = Boundary::Periodic;
    else throw ConfigError("boundary must be 'open' or 'periodic'");
  }
  if (const auto t = root["tolerances"]) {
    check_keys(t, {"zero_tol", "gap_tol", "steady_tol", "g_threshold"}, "tolerances");
    if (t["zero_tol"]) cfg.zero_tol = scalar<double>(t["zero_tol"], "tolerances.zero_tol");
    if (t["gap_tol"]) cfg.gap_tol = scalar<double>(t["gap_tol"], "tolerances.gap_tol");
    if (t["steady_tol"]) cfg.steady_tol = scalar<double>(t["steady_tol"], "tolerances.steady_tol");
    if (t["g_threshold"]) cfg.g_threshold = scalar<double>(t["g_threshold"], "tolerances.g_threshold");
  }
  require_positive(cfg.zero_tol, "tolerances.zero_tol");
  require_positive(cfg.gap_tol, "tolerances.gap_tol");
  require_positive(cfg.steady_tol, "tolerances.steady_tol");
  require_positive(cfg.g_threshold, "tolerances.g_threshold");
  if (root["winding_grid"]) cfg.winding_grid = scalar<int>(root["winding_grid"], "winding_grid");
  if (cfg.winding_grid < 8) throw ConfigError("winding_grid must be at least 8");
  if (root["max_winding_grid"]) cfg.max_winding_grid = scalar<int>(root["max_winding_grid"], "max_winding_grid");
  if (cfg.max_winding_grid < cfg.winding_grid) throw ConfigError("max_winding_grid must be at least winding_grid");
  if (root["output"]) cfg.output = scalar<std::string>(root["output"], "output");
  if (root["workers"]) cfg.workers = scalar<int>(root["workers"], "workers");
  if (cfg.workers < 1) throw ConfigError("workers must be a positive integer");

  const bool diagram = command == "topo-diagram" || command == "ee-diagram";
  if (diagram && (cfg.u_grid.empty() || cfg.v_grid.empty()))
    throw ConfigError(command + ": grid.u and grid.v are required");
  if (command == "ee-scaling") {
    if (cfg.v_grid.empty()) throw ConfigError("ee-scaling: grid.v is required");
    if (!cfg.u_grid.empty()) throw ConfigError("ee-scaling: the scan runs at model.u; remove grid.u");
  }
  if (command == "ee-scaling" || command == "ee-diagram") {
    for (double v : cfg.v_grid)
      if (!(v > 0.0))
        throw ConfigError(command + ": v = " + format_real(v) +
                          " is not allowed; entanglement phases are only defined for v > 0");
    for (int l : cfg.l_values)
      if (l < 8 || 2 * l > cfg.L) throw ConfigError("l_values must lie in [8, L/2]");
    if (cfg.l_values.size() < 4) throw ConfigError("l_values needs at least 4 entries");
  }
  if (diagram || command == "ee-scaling")
    for (double v : cfg.v_grid)
      if (v < 0.0) throw ConfigError("grid.v must be non-negative");
  if (command == "evolve-ee") {
    if (cfg.times.empty()) throw ConfigError("evolve-ee: 'times' is required");
    if (cfg.l < 1 || cfg.l >= cfg.L) throw ConfigError("evolve-ee: l must satisfy 1 <= l < L");
  }
  if ((command == "spectrum" || command == "evolve-ee" || command == "ee-scaling" || command == "ee-diagram") &&
      cfg.L <= 2 * cfg.model.max_range())
    throw ConfigError("L must exceed twice the longest coupling range");
  return cfg;
}

std::string sha256_hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

namespace {

struct Output {
  std::string csv;
  json results = json::object();
  json failures = json::array();
  std::vector<std::pair<std::string, std::string>> extra_files;  // name, contents
};

void row(std::string& csv, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto& c : cells) {
    if (!first) csv += ',';
    csv += c;
    first = false;
  }
  csv += '\n';
}

json model_json(const ChainSpec& spec) {
  json cs = json::array();
  for (const auto& c : spec.couplings()) cs.push_back({{"r", c.range}, {"J", c.hop}, {"Delta", c.pair}});
  return {{"couplings", cs}, {"u", spec.chem_real()}, {"v", spec.loss_rate()}};
}

WindingOptions winding_options(const RunConfig& cfg) {
  WindingOptions opt;
  opt.initial_grid = cfg.winding_grid;
  opt.gap_tol = cfg.gap_tol;
  opt.max_grid = cfg.max_winding_grid;
  return opt;
}

EntanglementOptions entanglement_options(const RunConfig& cfg) {
  EntanglementOptions opt;
  opt.T = cfg.T;
  opt.steady_tol = cfg.steady_tol;
  opt.g_threshold = cfg.g_threshold;
  opt.gap_tol = cfg.gap_tol;
  opt.gap_grid = cfg.winding_grid;
  opt.workers = cfg.workers;
  return opt;
}

Output run_spectrum(const RunConfig& cfg) {
  SpectrumOptions opt;
  opt.zero_tol = cfg.zero_tol;
  const auto s = complex_spectrum(cfg.model, cfg.L, cfg.boundary, opt);
  std::vector<bool> zero(s.eigenvalues.size(), false);
  for (const auto& z : s.zero_modes) zero[z.index] = true;
  std::vector<std::size_t> order(s.eigenvalues.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = s.eigenvalues[a];
    const auto& y = s.eigenvalues[b];
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  Output out;
  out.csv = "index,re,im,edge_weight,zero_mode\n";
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto j = order[i];
    row(out.csv, {std::to_string(i), format_real(s.eigenvalues[j].real()), format_real(s.eigenvalues[j].imag()),
                  format_real(s.edge_weights[j]), zero[j] ? "1" : "0"});
  }
  out.results = {{"boundary", to_string(cfg.boundary)},
                 {"zero_mode_count", s.zero_modes.size()},
                 {"max_residual", s.max_residual}};
  return out;
}

void topo_rows(Output& out, const std::vector<TopoCell>& cells) {
  out.csv = "u,v,w,min_gap\n";
  std::size_t gapless = 0;
  for (const auto& c : cells) {
    row(out.csv, {format_real(c.u), format_real(c.v), format_real(c.w), format_real(c.min_gap)});
    if (c.status == CellStatus::Gapless) ++gapless;
    if (c.status == CellStatus::NonConvergence)
      out.failures.push_back({{"u", c.u}, {"v", c.v}, {"status", to_string(c.status)}, {"message", c.message}});
  }
  out.results["gapless_cells"] = gapless;
}

Output run_winding(const RunConfig& cfg) {
  Output out;
  const auto cell = topo_cell(cfg.model, winding_options(cfg));
  topo_rows(out, {cell});
  out.results["status"] = to_string(cell.status);
  return out;
}

Output run_topo_diagram(const RunConfig& cfg) {
  Output out;
  const auto d = topological_phase_diagram(cfg.model, cfg.u_grid, cfg.v_grid, winding_options(cfg), cfg.workers);
  topo_rows(out, d.cells);
  return out;
}

std::string dump_correlator(const Correlator& c) {
  const auto m = c.assembled();
  std::string s;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) s += ',';
      s += format_real(m(i, j).real());
      s += ',';
      s += format_real(m(i, j).imag());
    }
    s += '\n';
  }
  return s;
}

Output run_evolve_ee(const RunConfig& cfg) {
  std::vector<double> times = cfg.times;
  if (times.front() != 0.0) times.insert(times.begin(), 0.0);
  const auto ts = ee_time_series(cfg.model, cfg.L, cfg.l, times, cfg.steady_tol);
  Output out;
  out.csv = "t,S,l,L,u,v\n";
  const auto l = std::to_string(cfg.l);
  const auto L = std::to_string(cfg.L);
  const auto u = format_real(cfg.model.chem_real());
  const auto v = format_real(cfg.model.loss_rate());
  for (std::size_t i = 0; i < ts.times.size(); ++i) row(out.csv, {format_real(ts.times[i]), format_real(ts.values[i]), l, L, u, v});
  out.results = {{"final_value", ts.final_value}, {"converged", ts.converged}};
  if (cfg.dump_correlator)
    out.extra_files.emplace_back("correlator.csv", dump_correlator(assemble_correlator(cfg.model, cfg.L, ts.times.back())));
  return out;
}

void ee_rows(Output& out, const std::vector<EntanglementPhaseCell>& cells) {
  out.csv = "u,v,g,r2,phase\n";
  json unconverged = json::array();
  for (const auto& c : cells) {
    if (!c.ok) {
      out.failures.push_back({{"u", c.u}, {"v", c.v}, {"message", c.message}});
      row(out.csv, {format_real(c.u), format_real(c.v), "nan", "nan", "failed"});
      continue;
    }
    row(out.csv, {format_real(c.u), format_real(c.v), format_real(c.g), format_real(c.r_squared), to_string(c.phase)});
    if (!c.converged) unconverged.push_back({{"u", c.u}, {"v", c.v}});
  }
  out.results["unconverged_cells"] = unconverged;
}

Output run_ee_scaling(const RunConfig& cfg) {
  Output out;
  const auto scan = scan_g_vs_loss(cfg.model, cfg.model.chem_real(), cfg.v_grid, cfg.L, cfg.l_values,
                                   entanglement_options(cfg));
  ee_rows(out, scan.points);
  out.results["kinks"] = scan.kinks;
  return out;
}

Output run_ee_diagram(const RunConfig& cfg) {
  Output out;
  const auto d = entanglement_phase_diagram(cfg.model, cfg.u_grid, cfg.v_grid, cfg.L, cfg.l_values,
                                            entanglement_options(cfg));
  ee_rows(out, d.cells);
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + format_real(xs[i]);
  return s + "]";
}

void print_resolved(const RunConfig& cfg, std::ostream& out) {
  out << "command: " << cfg.command << '\n';
  out << "model:\n  couplings:\n";
  for (const auto& c : cfg.model.couplings())
    out << "    - {r: " << c.range << ", J: " << format_real(c.hop) << ", Delta: " << format_real(c.pair) << "}\n";
  out << "  u: " << format_real(cfg.model.chem_real()) << "\n  v: " << format_real(cfg.model.loss_rate()) << '\n';
  out << "L: " << cfg.L << '\n';
  out << "l: " << cfg.l << '\n';
  out << "l_values: [";
  for (std::size_t i = 0; i < cfg.l_values.size(); ++i) out << (i ? ", " : "") << cfg.l_values[i];
  out << "]\n";
  out << "T: " << format_real(cfg.T) << '\n';
  out << "times: " << join(cfg.times) << '\n';
  out << "grid:\n  u: " << join(cfg.u_grid) << "\n  v: " << join(cfg.v_grid) << '\n';
  out << "boundary: " << (cfg.boundary == Boundary::Open ? "open" : "periodic") << '\n';
  out << "tolerances:\n  zero_tol: " << format_real(cfg.zero_tol) << "\n  gap_tol: " << format_real(cfg.gap_tol)
      << "\n  steady_tol: " << format_real(cfg.steady_tol) << "\n  g_threshold: " << format_real(cfg.g_threshold)
      << '\n';
  out << "winding_grid: " << cfg.winding_grid << '\n';
  out << "max_winding_grid: " << cfg.max_winding_grid << '\n';
  out << "output: " << cfg.output.string() << '\n';
  out << "workers: " << cfg.workers << '\n';
}

std::string utc_stamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

fs::path fresh_run_dir(const fs::path& base, const std::string& stamp) {
  std::error_code ec;
  fs::create_directories(base, ec);
  if (ec) throw IoError("cannot create " + base.string() + ": " + ec.message());
  for (int n = 1;; ++n) {
    const fs::path dir = base / (n == 1 ? stamp : stamp + "-" + std::to_string(n));
    if (fs::create_directory(dir, ec)) return dir;
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  }
}

void write_file(const fs::path& p, const std::string& contents) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  f << contents;
  if (!f.flush()) throw IoError("write failed for " + p.string());
}

void persist(const RunConfig& cfg, const Output& result, std::ostream& out) {
  const auto stamp = utc_stamp();
  const fs::path dir = fresh_run_dir(cfg.output / cfg.command, stamp);
  std::vector<std::pair<std::string, std::string>> files = {{"data.csv", result.csv}};
  files.insert(files.end(), result.extra_files.begin(), result.extra_files.end());

  json listed = json::array();
  for (const auto& [name, contents] : files) {
    write_file(dir / name, contents);
    listed.push_back({{"path", name}, {"sha256", sha256_hex(dir / name)}, {"bytes", contents.size()}});
  }

  json manifest;
  manifest["tool"] = "lkc";
  manifest["version"] = kVersion;
  manifest["command"] = cfg.command;
  manifest["created_utc"] = stamp;
  manifest["determinism"] =
      "No random numbers are used. Identical configurations produce byte-identical data files for any "
      "worker count; only this manifest's timestamp differs between runs.";
  manifest["model"] = model_json(cfg.model);
  manifest["parameters"] = {{"L", cfg.L},
                            {"l", cfg.l},
                            {"l_values", cfg.l_values},
                            {"T", cfg.T},
                            {"times", cfg.times},
                            {"boundary", to_string(cfg.boundary)},
                            {"zero_tol", cfg.zero_tol},
                            {"gap_tol", cfg.gap_tol},
                            {"steady_tol", cfg.steady_tol},
                            {"g_threshold", cfg.g_threshold},
                            {"winding_grid", cfg.winding_grid},
                            {"max_winding_grid", cfg.max_winding_grid},
                            {"workers", cfg.workers}};
  manifest["grids"] = {{"u", cfg.u_grid}, {"v", cfg.v_grid}};
  manifest["config"] = YAML::Dump(cfg.source);
  manifest["results"] = result.results;
  manifest["failures"] = result.failures;
  manifest["files"] = listed;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  out << dir.string() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lossy Kitaev chain simulator"};
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  int workers = 0;
  bool dump = false;
  app.add_option("command", command, "spectrum | winding | topo-diagram | evolve-ee | ee-scaling | ee-diagram | validate")
      ->required();
  app.add_option("-c,--config", config_path, "YAML run configuration")->required();
  app.add_option("--set", overrides, "Override a config field: path.to.key=value (repeatable)");
  app.add_option("-o,--out", out_dir, "Output root directory (overrides 'output')");
  app.add_option("-w,--workers", workers, "Worker threads (overrides LKC_WORKERS and 'workers')");
  app.add_flag("--dump-correlator", dump, "evolve-ee: also write the final correlator as correlator.csv");
  app.set_version_flag("--version", kVersion);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    YAML::Node root;
    try {
      root = YAML::LoadFile(config_path);
    } catch (const YAML::BadFile&) {
      throw ConfigError("cannot read config file " + config_path);
    } catch (const YAML::Exception& e) {
      throw ConfigError("malformed config " + config_path + ": " + e.what());
    }
    if (!root.IsMap()) throw ConfigError("config root must be a mapping");
    for (const auto& o : overrides) apply_override(root, o);
    auto cfg = resolve_config(root, command);

    if (const char* env = std::getenv("LKC_WORKERS"); env && *env) {
      int w = 0;
      const auto res = std::from_chars(env, env + std::char_traits<char>::length(env), w);
      if (res.ec != std::errc() || *res.ptr != '\0' || w < 1) throw ConfigError("LKC_WORKERS must be a positive integer");
      cfg.workers = w;
    }
    if (workers != 0) {
      if (workers < 1) throw ConfigError("--workers must be positive");
      cfg.workers = workers;
    }
    if (!out_dir.empty()) cfg.output = out_dir;
    cfg.dump_correlator = dump;
    if (dump && command != "evolve-ee") throw ConfigError("--dump-correlator only applies to evolve-ee");

    if (command == "validate") {
      print_resolved(cfg, out);
      return 0;
    }

    Output result;
    if (command == "spectrum") result = run_spectrum(cfg);
    else if (command == "winding") result = run_winding(cfg);
    else if (command == "topo-diagram") result = run_topo_diagram(cfg);
    else if (command == "evolve-ee") result = run_evolve_ee(cfg);
    else if (command == "ee-scaling") result = run_ee_scaling(cfg);
    else result = run_ee_diagram(cfg);

    persist(cfg, result, out);
    if (!result.failures.empty()) {
      err << "warning: " << result.failures.size() << " cell(s) failed; see manifest.json\n";
      return 2;
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace lkc::cli
