#pragma once

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "phaselab/axisym.hpp"
#include "phaselab/digest.hpp"
#include "phaselab/eigensolver.hpp"
#include "phaselab/energy.hpp"
#include "phaselab/flow.hpp"
#include "phaselab/generators.hpp"
#include "phaselab/isocontour.hpp"
#include "phaselab/mesh_io.hpp"
#include "phaselab/periodic1d.hpp"
#include "phaselab/profile.hpp"
#include "phaselab/stability.hpp"

namespace phaselab {

using json = nlohmann::json;

inline constexpr const char* artifact_version = "0.1.0";
inline constexpr const char* manifest_format = "phaselab-manifest-1";

/// Requested epsilon cannot be represented on the selected mesh.
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string format_int(long long v) { return std::to_string(v); }

inline std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Fixed-order CSV table: a header row and string-rendered cells. Numeric
/// cells go through format_double (%.17g) so reruns are byte-stable.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns)
      : columns_(std::move(columns)) {}

  void row(const std::vector<std::string>& cells) {
    require(cells.size() == columns_.size(), "csv row arity mismatch");
    rows_.push_back(cells);
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      out << (c ? "," : "") << columns_[c];
    }
    out << '\n';
    for (const auto& r : rows_) {
      for (std::size_t c = 0; c < r.size(); ++c) {
        out << (c ? "," : "") << r[c];
      }
      out << '\n';
    }
    out.flush();
    if (!out) throw IoError("write to " + path.string() + " failed");
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(int v) { return format_int(v); }
inline std::string cell(long long v) { return format_int(v); }
inline std::string cell(std::uint64_t v) { return std::to_string(v); }
inline std::string cell(const std::string& v) { return v; }

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

/// Runs fn(0..count-1) over a worker pool. Cells must be independent; the
/// first exception wins and remaining cells are abandoned.
template <class F>
inline void parallel_cells(int count, int threads, F&& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> bail{false};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    while (!bail.load()) {
      int i = next.fetch_add(1);
      if (i >= count) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        bail.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  int width = std::min(threads, count);
  pool.reserve(width);
  for (int w = 0; w < width; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline void check_resolution(double epsilon, const TriangleMesh& mesh) {
  double floor = 2.0 * mesh.mean_edge_length;
  if (epsilon < floor) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "epsilon %.6g under-resolves the mesh: need epsilon >= %.6g "
                  "(2 x mean edge length %.6g)",
                  epsilon, floor, mesh.mean_edge_length);
    throw ResolutionError(buf);
  }
}

inline bool is_collapsed(const Eigen::VectorXd& u, const DoubleWell& well) {
  return u.maxCoeff() - u.minCoeff() < 1e-3 * (well.beta() - well.alpha());
}

/// E = 2 pi int { eps/2 u'^2 + W(u)/eps } psi dt on the reduced grid.
inline double reduced_energy(const AxisymmetricState& state,
                             const DoubleWell& well) {
  const int n = static_cast<int>(state.u.size()) - 1;
  const double h = state.profile.t_max() / n;
  Eigen::VectorXd du = derivative4(state.u, h);
  Eigen::VectorXd density(n + 1);
  for (int i = 0; i <= n; ++i) {
    density[i] = (0.5 * state.epsilon * du[i] * du[i] +
                  well.w(state.u[i]) / state.epsilon) *
                 state.profile.psi(state.t[i]);
  }
  double s = 0.5 * (density[0] + density[n]);
  for (int i = 1; i < n; ++i) s += density[i];
  return 2.0 * M_PI * s * h;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

namespace detail {

struct FieldSpec {
  const char* key;
  json def;
};

inline json apply_schema(const json& raw, const std::string& experiment,
                         const std::vector<FieldSpec>& fields) {
  for (const auto& item : raw.items()) {
    if (item.key() == "experiment") continue;
    bool known = false;
    for (const auto& f : fields) {
      if (item.key() == f.key) {
        known = true;
        break;
      }
    }
    require(known, "unknown config key '" + item.key() + "' for experiment '" +
                       experiment + "'");
  }
  json out;
  out["experiment"] = experiment;
  for (const auto& f : fields) {
    json v = raw.contains(f.key) ? raw.at(f.key) : f.def;
    if (f.def.is_string()) {
      require(v.is_string(), std::string("config key '") + f.key +
                                 "' must be a string");
    } else if (f.def.is_number_integer()) {
      require(v.is_number_integer(), std::string("config key '") + f.key +
                                         "' must be an integer");
    } else if (f.def.is_number()) {
      require(v.is_number(), std::string("config key '") + f.key +
                                 "' must be a number");
    } else if (f.def.is_array()) {
      require(v.is_array(), std::string("config key '") + f.key +
                                "' must be an array");
    }
    out[f.key] = v;
  }
  return out;
}

inline std::vector<double> number_list(const json& arr, const char* key) {
  require(arr.is_array() && !arr.empty(),
          std::string("config key '") + key + "' must be a non-empty array");
  std::vector<double> out;
  for (const auto& v : arr) {
    require(v.is_number(), std::string("config key '") + key +
                               "' must contain numbers only");
    out.push_back(v.get<double>());
  }
  return out;
}

inline void require_positive(const std::vector<double>& vals, const char* key) {
  for (double v : vals) {
    require(v > 0.0, std::string("config key '") + key +
                         "' must contain positive values");
  }
}

inline void check_seed(const json& cfg) {
  const json& s = cfg.at("seed");
  require(s.is_number_unsigned() ||
              (s.is_number_integer() && s.get<long long>() >= 0),
          "config key 'seed' must be a non-negative integer");
}

inline void check_flow_params(const json& cfg) {
  require(cfg.at("dt").get<double>() > 0.0, "config key 'dt' must be positive");
  require(cfg.at("max_steps").get<long long>() >= 1,
          "config key 'max_steps' must be at least 1");
  require(cfg.at("flow_tolerance").get<double>() > 0.0,
          "config key 'flow_tolerance' must be positive");
}

inline void check_well(const json& cfg) {
  std::string w = cfg.at("well").get<std::string>();
  require(w == "quartic" || w == "asymmetric-quartic",
          "config key 'well' must be 'quartic' or 'asymmetric-quartic'");
}

inline DoubleWell config_well(const json& cfg) {
  std::string w = cfg.at("well").get<std::string>();
  if (w == "quartic") return DoubleWell::quartic();
  return DoubleWell::asymmetric_quartic();
}

}  // namespace detail

/// Fill defaults, reject unknown keys, and validate ranges. The returned
/// object is the complete effective configuration; hashing it pins every
/// parameter of the run, not just the ones the caller spelled out.
inline json normalize_config(const json& raw) {
  require(raw.is_object(), "config must be a JSON object");
  require(raw.contains("experiment") && raw.at("experiment").is_string(),
          "config must name an 'experiment'");
  const std::string experiment = raw.at("experiment").get<std::string>();

  using detail::FieldSpec;
  json cfg;

  if (experiment == "sphere-instability") {
    cfg = detail::apply_schema(
        raw, experiment,
        {FieldSpec{"geometry", "icosphere"}, FieldSpec{"subdivisions", 4},
         FieldSpec{"well", "quartic"}, FieldSpec{"epsilons", json::array({0.25})},
         FieldSpec{"num_starts", 20}, FieldSpec{"seed", 1},
         FieldSpec{"oracle_intervals", 1024}, FieldSpec{"dt", 0.5},
         FieldSpec{"max_steps", 20000}, FieldSpec{"flow_tolerance", 1e-8}});
    require(cfg["geometry"] == "icosphere",
            "sphere-instability requires geometry 'icosphere'");
    long long sub = cfg["subdivisions"].get<long long>();
    require(sub >= 1 && sub <= 7, "subdivisions must be in [1, 7]");
    auto eps = detail::number_list(cfg["epsilons"], "epsilons");
    detail::require_positive(eps, "epsilons");
    for (double e : eps) {
      require(e < 1.0 / std::sqrt(2.0),
              "epsilon must be below 1/sqrt(2): no nonconstant critical point "
              "exists on the unit sphere at or above the bifurcation");
    }
    long long ns = cfg["num_starts"].get<long long>();
    require(ns >= 0 && ns <= 10000, "num_starts must be in [0, 10000]");
    require(cfg["oracle_intervals"].get<long long>() >= 8,
            "oracle_intervals must be at least 8");
    detail::check_seed(cfg);
    detail::check_flow_params(cfg);
    detail::check_well(cfg);
  } else if (experiment == "dumbbell-minimizer" ||
             experiment == "gamma-sweep") {
    bool sweep = experiment == "gamma-sweep";
    if (raw.contains("geometry") && raw.at("geometry") == "sphere" && sweep) {
      throw std::invalid_argument(
          "gamma-sweep rejects sphere geometry: no stable nonconstant state "
          "exists to carry a limit interface");
    }
    cfg = detail::apply_schema(
        raw, experiment,
        {FieldSpec{"geometry", "dumbbell"}, FieldSpec{"d", 0.5},
         FieldSpec{"n_t", sweep ? 160 : 128},
         FieldSpec{"n_theta", sweep ? 160 : 128}, FieldSpec{"well", "quartic"},
         FieldSpec{"epsilons", sweep ? json::array({0.2, 0.1, 0.05})
                                     : json::array({0.1})},
         FieldSpec{"seed", 1}, FieldSpec{"oracle_intervals", 2048},
         FieldSpec{"dt", 0.5}, FieldSpec{"max_steps", 20000},
         FieldSpec{"flow_tolerance", 1e-8}});
    require(cfg["geometry"] == "dumbbell",
            experiment + " requires geometry 'dumbbell'");
    double d = cfg["d"].get<double>();
    require(d > 1.0 / 3.0 && d <= 2.0 / 3.0, "d must lie in (1/3, 2/3]");
    require(cfg["n_t"].get<long long>() >= 8, "n_t must be at least 8");
    require(cfg["n_theta"].get<long long>() >= 3, "n_theta must be at least 3");
    auto eps = detail::number_list(cfg["epsilons"], "epsilons");
    detail::require_positive(eps, "epsilons");
    if (sweep) {
      for (std::size_t i = 1; i < eps.size(); ++i) {
        require(eps[i] < eps[i - 1],
                "gamma-sweep requires a strictly decreasing epsilon list");
      }
    }
    require(cfg["oracle_intervals"].get<long long>() >= 8,
            "oracle_intervals must be at least 8");
    detail::check_seed(cfg);
    detail::check_flow_params(cfg);
    detail::check_well(cfg);
  } else if (experiment == "torus-degenerate") {
    cfg = detail::apply_schema(
        raw, experiment,
        {FieldSpec{"geometry", "flat-torus"}, FieldSpec{"side", 1.0},
         FieldSpec{"resolution", 64}, FieldSpec{"well", "quartic"},
         FieldSpec{"epsilons", json::array({0.08})}, FieldSpec{"seed", 1},
         FieldSpec{"oracle_intervals", 512}});
    require(cfg["geometry"] == "flat-torus",
            "torus-degenerate requires geometry 'flat-torus'");
    require(cfg["side"].get<double>() > 0.0, "side must be positive");
    long long res = cfg["resolution"].get<long long>();
    require(res >= 8 && res <= 512, "resolution must be in [8, 512]");
    auto eps = detail::number_list(cfg["epsilons"], "epsilons");
    detail::require_positive(eps, "epsilons");
    require(cfg["oracle_intervals"].get<long long>() >= 8,
            "oracle_intervals must be at least 8");
    detail::check_seed(cfg);
    detail::check_well(cfg);
  } else if (experiment == "identity-check") {
    cfg = detail::apply_schema(
        raw, experiment,
        {FieldSpec{"cases",
                   json::array({json{{"profile", "sphere"}, {"epsilon", 0.25}},
                                json{{"profile", "dumbbell"},
                                     {"d", 0.5},
                                     {"epsilon", 0.1}}})},
         FieldSpec{"resolutions", json::array({512, 1024, 2048})},
         FieldSpec{"min_order", 1.8}, FieldSpec{"well", "quartic"},
         FieldSpec{"seed", 1}});
    require(cfg["cases"].is_array() && !cfg["cases"].empty(),
            "identity-check needs a non-empty 'cases' array");
    json norm_cases = json::array();
    for (const auto& c : cfg["cases"]) {
      require(c.is_object(), "each identity case must be an object");
      for (const auto& item : c.items()) {
        require(item.key() == "profile" || item.key() == "epsilon" ||
                    item.key() == "d",
                "unknown identity case key '" + item.key() + "'");
      }
      require(c.contains("profile") && c["profile"].is_string(),
              "identity case needs a 'profile'");
      std::string p = c["profile"].get<std::string>();
      require(p == "sphere" || p == "dumbbell",
              "identity case profile must be 'sphere' or 'dumbbell'");
      require(c.contains("epsilon") && c["epsilon"].is_number() &&
                  c["epsilon"].get<double>() > 0.0,
              "identity case needs a positive 'epsilon'");
      json nc;
      nc["profile"] = p;
      nc["epsilon"] = c["epsilon"];
      if (p == "dumbbell") {
        double d = c.contains("d") ? c["d"].get<double>() : 0.5;
        require(d > 1.0 / 3.0 && d <= 2.0 / 3.0, "d must lie in (1/3, 2/3]");
        nc["d"] = d;
      } else {
        require(!c.contains("d"), "'d' applies to dumbbell cases only");
      }
      norm_cases.push_back(nc);
    }
    cfg["cases"] = norm_cases;
    require(cfg["resolutions"].is_array() && !cfg["resolutions"].empty(),
            "identity-check needs a non-empty 'resolutions' array");
    long long prev = 0;
    for (const auto& r : cfg["resolutions"]) {
      require(r.is_number_integer() && r.get<long long>() >= 8,
              "resolutions must be integers >= 8");
      require(r.get<long long>() > prev,
              "resolutions must be strictly increasing");
      prev = r.get<long long>();
    }
    require(cfg["min_order"].get<double>() > 0.0,
            "min_order must be positive");
    detail::check_seed(cfg);
    detail::check_well(cfg);
  } else if (experiment == "oracle-compare") {
    cfg = detail::apply_schema(
        raw, experiment,
        {FieldSpec{"profile", "sphere"}, FieldSpec{"d", 0.5},
         FieldSpec{"well", "quartic"},
         FieldSpec{"epsilons", json::array({0.25})},
         FieldSpec{"resolutions", json::array({48, 64})},
         FieldSpec{"oracle_intervals", 2048}, FieldSpec{"seed", 1}});
    std::string p = cfg["profile"].get<std::string>();
    require(p == "sphere" || p == "dumbbell",
            "profile must be 'sphere' or 'dumbbell'");
    if (p == "sphere") {
      require(!raw.contains("d"), "'d' applies to the dumbbell profile only");
    } else {
      double d = cfg["d"].get<double>();
      require(d > 1.0 / 3.0 && d <= 2.0 / 3.0, "d must lie in (1/3, 2/3]");
    }
    auto eps = detail::number_list(cfg["epsilons"], "epsilons");
    detail::require_positive(eps, "epsilons");
    long long prev = 0;
    require(cfg["resolutions"].is_array() && !cfg["resolutions"].empty(),
            "oracle-compare needs a non-empty 'resolutions' array");
    for (const auto& r : cfg["resolutions"]) {
      require(r.is_number_integer() && r.get<long long>() >= 8,
              "resolutions must be integers >= 8");
      require(r.get<long long>() > prev,
              "resolutions must be strictly increasing");
      prev = r.get<long long>();
    }
    require(cfg["oracle_intervals"].get<long long>() >= 8,
            "oracle_intervals must be at least 8");
    detail::check_seed(cfg);
    detail::check_well(cfg);
  } else {
    throw std::invalid_argument("unknown experiment '" + experiment + "'");
  }
  return cfg;
}

/// Canonical serialization used for hashing: nlohmann objects keep keys
/// sorted, and dump() renders numbers with shortest round-trip digits, so
/// equal configs produce equal bytes.
inline std::string canonical_config(const json& normalized) {
  return normalized.dump();
}

inline std::string config_digest(const json& normalized) {
  return sha256_hex(canonical_config(normalized));
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct OutputRecord {
  std::string file;
  std::uint64_t bytes = 0;
  std::string sha256;
};

struct RunManifest {
  std::string experiment;
  json config;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string version;
  std::string started_at;
  std::string finished_at;
  std::vector<OutputRecord> outputs;

  json to_json() const {
    json j;
    j["format"] = manifest_format;
    j["experiment"] = experiment;
    j["config"] = config;
    j["config_digest"] = config_digest;
    j["seed"] = seed;
    j["artifact_version"] = version;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["outputs"] = json::array();
    for (const auto& o : outputs) {
      j["outputs"].push_back(
          json{{"file", o.file}, {"bytes", o.bytes}, {"sha256", o.sha256}});
    }
    return j;
  }

  static RunManifest from_json(const json& j) {
    require(j.is_object() && j.value("format", "") == manifest_format,
            "not a phaselab manifest");
    RunManifest m;
    m.experiment = j.at("experiment").get<std::string>();
    m.config = j.at("config");
    m.config_digest = j.at("config_digest").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.version = j.at("artifact_version").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    for (const auto& o : j.at("outputs")) {
      m.outputs.push_back(OutputRecord{o.at("file").get<std::string>(),
                                       o.at("bytes").get<std::uint64_t>(),
                                       o.at("sha256").get<std::string>()});
    }
    return m;
  }
};

struct RunResult {
  RunManifest manifest;
  std::filesystem::path out_dir;
  std::filesystem::path manifest_path;
  json summary;
};

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

namespace detail {

struct RunnerOutput {
  std::vector<std::string> files;
  json summary;
};

inline std::vector<double> sorted_epsilons(const json& cfg) {
  auto eps = number_list(cfg.at("epsilons"), "epsilons");
  std::sort(eps.begin(), eps.end());
  return eps;
}

inline SolveParams flow_params(const json& cfg) {
  SolveParams p;
  p.dt = cfg.at("dt").get<double>();
  p.max_steps = static_cast<int>(cfg.at("max_steps").get<long long>());
  p.tolerance = cfg.at("flow_tolerance").get<double>();
  return p;
}

inline AxisymmetricState reduced_solve(const ProfileCurve& profile,
                                       const DoubleWell& well, double epsilon,
                                       int intervals) {
  return solve_axisymmetric_steady(
      profile, well, epsilon, axisym_step_init(profile, intervals, well, epsilon));
}

inline RunnerOutput run_sphere_instability(const json& cfg,
                                           const std::filesystem::path& dir,
                                           int threads) {
  const DoubleWell well = config_well(cfg);
  const int sub = static_cast<int>(cfg.at("subdivisions").get<long long>());
  const int intervals =
      static_cast<int>(cfg.at("oracle_intervals").get<long long>());
  const int num_starts = static_cast<int>(cfg.at("num_starts").get<long long>());
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const auto epsilons = sorted_epsilons(cfg);
  const SolveParams params = flow_params(cfg);
  const double span = well.beta() - well.alpha();

  TriangleMesh mesh = gen_icosphere(sub);
  for (double e : epsilons) check_resolution(e, mesh);
  OperatorPair ops = build_operators(mesh);
  Eigen::VectorXd vertex_t(mesh.num_vertices);
  for (int i = 0; i < mesh.num_vertices; ++i) {
    vertex_t[i] = std::acos(std::clamp(mesh.positions(i, 2), -1.0, 1.0));
  }

  CsvTable saddles({"epsilon", "collapsed", "residual_inf", "mu_1", "mu_2",
                    "mu_3", "tau", "classification", "q_witness",
                    "witness_verdict", "q_oracle", "q_rel_gap"});
  json saddle_summaries = json::array();
  bool all_nonconstant_unstable = true;

  for (double eps : epsilons) {
    AxisymmetricState reduced = reduced_solve(ProfileCurve::sphere(), well,
                                              eps, intervals);
    if (is_collapsed(reduced.u, well)) {
      double nan = std::nan("");
      saddles.row({cell(eps), cell(1), cell(reduced.residual_inf), cell(nan),
                   cell(nan), cell(nan), cell(nan), "constant", cell(nan),
                   "degenerate", cell(nan), cell(nan)});
      saddle_summaries.push_back(json{{"epsilon", eps}, {"collapsed", true}});
      continue;
    }
    VertexField u0 = extend_axisymmetric(reduced, vertex_t);
    PolishReport polish = newton_polish(ops, well, eps, u0);
    if (!polish.converged) {
      throw NonconvergenceError("saddle polish stalled at epsilon " +
                                    format_double(eps),
                                polish.residual_trace);
    }
    if (is_collapsed(polish.u, well)) {
      double nan = std::nan("");
      saddles.row({cell(eps), cell(1), cell(polish.residual_trace.back()),
                   cell(nan), cell(nan), cell(nan), cell(nan), "constant",
                   cell(nan), "degenerate", cell(nan), cell(nan)});
      saddle_summaries.push_back(json{{"epsilon", eps}, {"collapsed", true}});
      continue;
    }
    StabilityReport cls = classify_stability(ops, well, eps, polish.u, 4);
    if (cls.classification == "stable") {
      throw TheoremViolationError(
          "nonconstant critical point classified stable on the sphere at "
          "epsilon " +
          format_double(eps) + " (mu_1 = " + format_double(cls.eigenvalues[0]) +
          "); this contradicts the instability theorem and signals a "
          "discretization bug");
    }
    if (cls.classification != "unstable") all_nonconstant_unstable = false;
    WitnessReport wit = instability_witness(mesh, ops, well, eps, polish.u);
    IdentityReport idr = check_second_variation_identity(reduced, well);
    double q_oracle = -eps * idr.lhs;
    double q_rel_gap =
        std::abs(wit.q_value - q_oracle) / std::max(std::abs(q_oracle), 1e-300);
    saddles.row({cell(eps), cell(0), cell(polish.residual_trace.back()),
                 cell(cls.eigenvalues[0]), cell(cls.eigenvalues[1]),
                 cell(cls.eigenvalues[2]), cell(cls.tau), cls.classification,
                 cell(wit.q_value), wit.verdict, cell(q_oracle),
                 cell(q_rel_gap)});
    saddle_summaries.push_back(json{{"epsilon", eps},
                                    {"collapsed", false},
                                    {"mu_1", cls.eigenvalues[0]},
                                    {"classification", cls.classification},
                                    {"q_witness", wit.q_value},
                                    {"q_oracle", q_oracle},
                                    {"q_rel_gap", q_rel_gap}});
  }

  struct StartRow {
    std::string termination;
    int steps = 0;
    double residual = 0.0;
    std::string endpoint;
    double energy = 0.0;
    double u_min = 0.0, u_max = 0.0, u_mean = 0.0;
  };
  struct StartCell {
    double epsilon;
    std::uint64_t seed;
  };
  std::vector<StartCell> cells;
  for (double e : epsilons) {
    for (int j = 0; j < num_starts; ++j) {
      cells.push_back(StartCell{e, seed + static_cast<std::uint64_t>(j)});
    }
  }
  std::vector<StartRow> results(cells.size());
  std::atomic<bool> any_nonconstant{false};

  parallel_cells(static_cast<int>(cells.size()), threads, [&](int i) {
    const StartCell& c = cells[i];
    Rng rng(c.seed);
    VertexField u0(mesh.num_vertices);
    for (int v = 0; v < mesh.num_vertices; ++v) {
      u0[v] = rng.uniform(well.alpha(), well.beta());
    }
    SolveReport rep = solve_steady(ops, well, c.epsilon, u0, params);
    StartRow row;
    row.termination = rep.termination;
    row.steps = rep.steps;
    row.residual = rep.residual_trace.back();
    row.energy = phase_energy(ops, well, c.epsilon, rep.u);
    row.u_min = rep.u.minCoeff();
    row.u_max = rep.u.maxCoeff();
    row.u_mean = rep.u.mean();
    if (rep.termination != "converged") {
      row.endpoint = "unresolved";
    } else if (row.u_max - row.u_min <= 1e-6 * span) {
      double v = row.u_mean;
      if (std::abs(v - well.alpha()) <= 1e-3 * span) {
        row.endpoint = "constant-alpha";
      } else if (std::abs(v - well.beta()) <= 1e-3 * span) {
        row.endpoint = "constant-beta";
      } else {
        row.endpoint = "constant-interior";
      }
    } else {
      any_nonconstant.store(true);
      StabilityReport c2 = classify_stability(ops, well, c.epsilon, rep.u, 1);
      if (c2.classification == "stable") {
        throw TheoremViolationError(
            "random start (epsilon " + format_double(c.epsilon) + ", seed " +
            std::to_string(c.seed) +
            ") minimized to a stable nonconstant state; this contradicts the "
            "instability theorem and signals a discretization bug");
      }
      row.endpoint = "nonconstant-" + c2.classification;
    }
    results[i] = row;
  });

  CsvTable starts({"epsilon", "seed", "termination", "steps", "residual_inf",
                   "endpoint", "energy", "u_min", "u_max", "u_mean"});
  int constant_count = 0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const StartRow& r = results[i];
    if (r.endpoint.rfind("constant-", 0) == 0) ++constant_count;
    starts.row({cell(cells[i].epsilon), cell(cells[i].seed), r.termination,
                cell(r.steps), cell(r.residual), r.endpoint, cell(r.energy),
                cell(r.u_min), cell(r.u_max), cell(r.u_mean)});
  }

  saddles.write(dir / "saddles.csv");
  starts.write(dir / "starts.csv");

  RunnerOutput out;
  out.files = {"saddles.csv", "starts.csv"};
  out.summary = json{{"epsilons", epsilons},
                     {"num_starts", num_starts},
                     {"total_starts", cells.size()},
                     {"constant_endpoints", constant_count},
                     {"all_endpoints_constant",
                      constant_count == static_cast<int>(cells.size())},
                     {"all_nonconstant_unstable", all_nonconstant_unstable},
                     {"saddles", saddle_summaries}};
  return out;
}

inline RunnerOutput run_dumbbell_minimizer(const json& cfg,
                                           const std::filesystem::path& dir,
                                           int threads) {
  const DoubleWell well = config_well(cfg);
  const double d = cfg.at("d").get<double>();
  const int n_t = static_cast<int>(cfg.at("n_t").get<long long>());
  const int n_theta = static_cast<int>(cfg.at("n_theta").get<long long>());
  const int intervals =
      static_cast<int>(cfg.at("oracle_intervals").get<long long>());
  const auto epsilons = sorted_epsilons(cfg);
  const SolveParams params = flow_params(cfg);

  ProfileCurve profile = ProfileCurve::dumbbell(d);
  RevolutionMesh rev = gen_revolution_mesh(profile, n_t, n_theta);
  for (double e : epsilons) check_resolution(e, rev.mesh);
  OperatorPair ops = build_operators(rev.mesh);
  const double t_mid = profile.t_max() / 2.0;
  const double geodesic = 2.0 * M_PI * profile.psi(t_mid);
  const double sigma = surface_tension(well);
  const double level = 0.5 * (well.alpha() + well.beta());

  VertexField step(rev.mesh.num_vertices);
  for (int i = 0; i < rev.mesh.num_vertices; ++i) {
    step[i] = rev.vertex_t[i] < t_mid ? well.alpha() : well.beta();
  }

  struct CellOut {
    bool collapsed = false;
    double residual = 0.0;
    int steps = 0;
    double energy = 0.0;
    double mu_1 = 0.0, mu_2 = 0.0, tau = 0.0;
    std::string classification;
    double contour_length = 0.0;
    double length_rel_error = 0.0;
    double t_max_dev = 0.0;
    double l1 = 0.0;
    double linf_vs_oracle = 0.0;
    std::vector<std::array<double, 4>> contour_points;  // x y z t
    std::vector<int> loop_of_point;
  };
  std::vector<CellOut> results(epsilons.size());

  parallel_cells(static_cast<int>(epsilons.size()), threads, [&](int i) {
    const double eps = epsilons[i];
    CellOut out;
    AxisymmetricState reduced = reduced_solve(profile, well, eps, intervals);
    if (is_collapsed(reduced.u, well)) {
      out.collapsed = true;
      out.residual = reduced.residual_inf;
      results[i] = out;
      return;
    }
    VertexField u0 = extend_axisymmetric(reduced, rev.vertex_t);
    SolveReport rep = solve_steady(ops, well, eps, u0, params);
    if (rep.termination != "converged") {
      throw NonconvergenceError("steady solve " + rep.termination +
                                    " at epsilon " + format_double(eps),
                                rep.residual_trace);
    }
    out.residual = rep.residual_trace.back();
    out.steps = rep.steps;
    out.energy = phase_energy(ops, well, eps, rep.u);
    StabilityReport cls = classify_stability(ops, well, eps, rep.u, 4);
    out.mu_1 = cls.eigenvalues[0];
    out.mu_2 = cls.eigenvalues[1];
    out.tau = cls.tau;
    out.classification = cls.classification;
    if (out.mu_1 < -cls.tau) {
      throw TheoremViolationError(
          "neck state reported unstable (mu_1 = " + format_double(out.mu_1) +
          ") at feasible epsilon " + format_double(eps) +
          "; this contradicts the dumbbell minimizer theorem and signals a "
          "discretization bug");
    }
    IsoContour contour = extract_iso_contour(rev.mesh, rep.u, level);
    out.contour_length = contour.total_length;
    out.length_rel_error = std::abs(contour.total_length - geodesic) / geodesic;
    for (std::size_t li = 0; li < contour.loops.size(); ++li) {
      const IsoLoop& loop = contour.loops[li];
      for (std::size_t pi = 0; pi < loop.points.size(); ++pi) {
        const IsoPoint& p = loop.points[pi];
        double t = (1.0 - p.s) * rev.vertex_t[p.a] + p.s * rev.vertex_t[p.b];
        out.t_max_dev = std::max(out.t_max_dev, std::abs(t - t_mid));
        out.contour_points.push_back({loop.positions[pi][0],
                                      loop.positions[pi][1],
                                      loop.positions[pi][2], t});
        out.loop_of_point.push_back(static_cast<int>(li));
      }
    }
    out.l1 = ops.mass_diag.dot((rep.u - step).cwiseAbs());
    out.linf_vs_oracle = (rep.u - u0).cwiseAbs().maxCoeff();
    results[i] = out;
  });

  CsvTable states({"epsilon", "collapsed", "residual_inf", "steps", "energy",
                   "mu_1", "mu_2", "tau", "classification", "contour_length",
                   "geodesic_length", "length_rel_error", "contour_t_max_dev",
                   "l1_to_step", "linf_vs_oracle"});
  CsvTable contours({"epsilon", "loop", "point", "x", "y", "z", "t"});
  json per_eps = json::array();
  bool all_stable = true;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    const CellOut& r = results[i];
    if (r.collapsed) {
      double nan = std::nan("");
      states.row({cell(epsilons[i]), cell(1), cell(r.residual), cell(0),
                  cell(nan), cell(nan), cell(nan), cell(nan), "constant",
                  cell(nan), cell(geodesic), cell(nan), cell(nan), cell(nan),
                  cell(nan)});
      per_eps.push_back(json{{"epsilon", epsilons[i]}, {"collapsed", true}});
      all_stable = false;
      continue;
    }
    states.row({cell(epsilons[i]), cell(0), cell(r.residual), cell(r.steps),
                cell(r.energy), cell(r.mu_1), cell(r.mu_2), cell(r.tau),
                r.classification, cell(r.contour_length), cell(geodesic),
                cell(r.length_rel_error), cell(r.t_max_dev), cell(r.l1),
                cell(r.linf_vs_oracle)});
    int point_in_loop = 0;
    int prev_loop = -1;
    for (std::size_t p = 0; p < r.contour_points.size(); ++p) {
      if (r.loop_of_point[p] != prev_loop) {
        point_in_loop = 0;
        prev_loop = r.loop_of_point[p];
      }
      contours.row({cell(epsilons[i]), cell(r.loop_of_point[p]),
                    cell(point_in_loop++), cell(r.contour_points[p][0]),
                    cell(r.contour_points[p][1]), cell(r.contour_points[p][2]),
                    cell(r.contour_points[p][3])});
    }
    if (r.classification != "stable") all_stable = false;
    per_eps.push_back(json{{"epsilon", epsilons[i]},
                           {"collapsed", false},
                           {"mu_1", r.mu_1},
                           {"classification", r.classification},
                           {"contour_length", r.contour_length},
                           {"length_rel_error", r.length_rel_error},
                           {"contour_t_max_dev", r.t_max_dev},
                           {"l1_to_step", r.l1},
                           {"linf_vs_oracle", r.linf_vs_oracle}});
  }

  // l1 should shrink as epsilon does; walk the sorted list from the top.
  json l1_decreasing;
  std::vector<double> l1_by_desc;
  for (std::size_t i = epsilons.size(); i-- > 0;) {
    if (!results[i].collapsed) l1_by_desc.push_back(results[i].l1);
  }
  if (l1_by_desc.size() >= 2) {
    bool dec = true;
    for (std::size_t i = 1; i < l1_by_desc.size(); ++i) {
      if (!(l1_by_desc[i] < l1_by_desc[i - 1])) dec = false;
    }
    l1_decreasing = dec;
  }

  states.write(dir / "states.csv");
  contours.write(dir / "contours.csv");

  RunnerOutput out;
  out.files = {"contours.csv", "states.csv"};
  out.summary = json{{"d", d},
                     {"sigma", sigma},
                     {"geodesic_length", geodesic},
                     {"epsilons", epsilons},
                     {"all_stable", all_stable},
                     {"l1_decreasing_with_epsilon", l1_decreasing},
                     {"states", per_eps}};
  return out;
}

inline RunnerOutput run_gamma_sweep(const json& cfg,
                                    const std::filesystem::path& dir,
                                    int threads) {
  const DoubleWell well = config_well(cfg);
  const double d = cfg.at("d").get<double>();
  const int n_t = static_cast<int>(cfg.at("n_t").get<long long>());
  const int n_theta = static_cast<int>(cfg.at("n_theta").get<long long>());
  const int intervals =
      static_cast<int>(cfg.at("oracle_intervals").get<long long>());
  const auto epsilons = number_list(cfg.at("epsilons"), "epsilons");
  const SolveParams params = flow_params(cfg);

  ProfileCurve profile = ProfileCurve::dumbbell(d);
  RevolutionMesh rev = gen_revolution_mesh(profile, n_t, n_theta);
  for (double e : epsilons) check_resolution(e, rev.mesh);
  OperatorPair ops = build_operators(rev.mesh);
  const double t_mid = profile.t_max() / 2.0;
  const double geodesic = 2.0 * M_PI * profile.psi(t_mid);
  const double sigma = surface_tension(well);
  const double target = sigma * geodesic;
  const double level = 0.5 * (well.alpha() + well.beta());

  VertexField step(rev.mesh.num_vertices);
  for (int i = 0; i < rev.mesh.num_vertices; ++i) {
    step[i] = rev.vertex_t[i] < t_mid ? well.alpha() : well.beta();
  }

  struct CellOut {
    bool collapsed = false;
    double residual = 0.0;
    int steps = 0;
    double energy = 0.0;
    double ratio = 0.0;
    double l1 = 0.0;
    double contour_length = 0.0;
  };
  std::vector<CellOut> results(epsilons.size());

  parallel_cells(static_cast<int>(epsilons.size()), threads, [&](int i) {
    const double eps = epsilons[i];
    CellOut out;
    AxisymmetricState reduced = reduced_solve(profile, well, eps, intervals);
    if (is_collapsed(reduced.u, well)) {
      out.collapsed = true;
      out.residual = reduced.residual_inf;
      results[i] = out;
      return;
    }
    VertexField u0 = extend_axisymmetric(reduced, rev.vertex_t);
    SolveReport rep = solve_steady(ops, well, eps, u0, params);
    if (rep.termination != "converged") {
      throw NonconvergenceError("steady solve " + rep.termination +
                                    " at epsilon " + format_double(eps),
                                rep.residual_trace);
    }
    out.residual = rep.residual_trace.back();
    out.steps = rep.steps;
    out.energy = phase_energy(ops, well, eps, rep.u);
    out.ratio = out.energy / target;
    out.l1 = ops.mass_diag.dot((rep.u - step).cwiseAbs());
    out.contour_length = level_set_length(rev.mesh, rep.u, level);
    results[i] = out;
  });

  CsvTable sweep({"epsilon", "collapsed", "residual_inf", "steps", "energy",
                  "ratio", "l1_to_step", "contour_length"});
  std::vector<double> ratios, l1s;
  bool any_collapsed = false;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    const CellOut& r = results[i];
    if (r.collapsed) {
      any_collapsed = true;
      double nan = std::nan("");
      sweep.row({cell(epsilons[i]), cell(1), cell(r.residual), cell(0),
                 cell(nan), cell(nan), cell(nan), cell(nan)});
      continue;
    }
    sweep.row({cell(epsilons[i]), cell(0), cell(r.residual), cell(r.steps),
               cell(r.energy), cell(r.ratio), cell(r.l1),
               cell(r.contour_length)});
    ratios.push_back(r.ratio);
    l1s.push_back(r.l1);
  }
  sweep.write(dir / "sweep.csv");

  json ratios_decreasing, l1_decreasing, final_ratio, final_within;
  std::string diagnostic = "not-applicable";
  if (!any_collapsed && ratios.size() >= 2) {
    bool dec = true, l1dec = true;
    for (std::size_t i = 1; i < ratios.size(); ++i) {
      if (!(ratios[i] < ratios[i - 1])) dec = false;
      if (!(l1s[i] < l1s[i - 1])) l1dec = false;
    }
    ratios_decreasing = dec;
    l1_decreasing = l1dec;
    diagnostic = dec ? "ok" : "not-monotone";
  }
  if (!ratios.empty()) {
    final_ratio = ratios.back();
    final_within = std::abs(ratios.back() - 1.0) <= 0.05;
  }

  RunnerOutput out;
  out.files = {"sweep.csv"};
  out.summary = json{{"d", d},
                     {"sigma", sigma},
                     {"geodesic_length", geodesic},
                     {"target_energy", target},
                     {"epsilons", epsilons},
                     {"ratios", ratios},
                     {"ratios_strictly_decreasing", ratios_decreasing},
                     {"l1_strictly_decreasing", l1_decreasing},
                     {"final_ratio", final_ratio},
                     {"final_within_5_percent", final_within},
                     {"convergence_diagnostic", diagnostic}};
  return out;
}

inline RunnerOutput run_torus_degenerate(const json& cfg,
                                         const std::filesystem::path& dir,
                                         int threads) {
  const DoubleWell well = config_well(cfg);
  const double side = cfg.at("side").get<double>();
  const int resolution = static_cast<int>(cfg.at("resolution").get<long long>());
  const int intervals =
      static_cast<int>(cfg.at("oracle_intervals").get<long long>());
  const auto epsilons = sorted_epsilons(cfg);

  TorusMesh torus = gen_flat_torus(side, resolution);
  for (double e : epsilons) check_resolution(e, torus.mesh);
  OperatorPair ops = build_operators(torus.mesh);

  struct CellOut {
    PeriodicState reduced;
    bool collapsed = false;
    double residual = 0.0;
    double mu[3] = {0, 0, 0};
    double tau = 0.0;
    std::string classification;
    double q_witness = 0.0;
    double witness_threshold = 0.0;
    std::string witness_verdict;
    double mu_oracle[2] = {0, 0};
  };
  std::vector<CellOut> results(epsilons.size());

  parallel_cells(static_cast<int>(epsilons.size()), threads, [&](int i) {
    const double eps = epsilons[i];
    CellOut out;
    out.reduced = solve_periodic_steady(
        side, well, eps, periodic_pair_init(side, resolution, well, eps));
    if (is_collapsed(out.reduced.u, well)) {
      out.collapsed = true;
      out.residual = out.reduced.residual_inf;
      results[i] = out;
      return;
    }
    VertexField u = extend_periodic(out.reduced, torus);
    PolishReport polish = newton_polish(ops, well, eps, u);
    if (!polish.converged) {
      throw NonconvergenceError("torus polish stalled at epsilon " +
                                    format_double(eps),
                                polish.residual_trace);
    }
    out.residual = polish.residual_trace.back();
    StabilityReport cls = classify_stability(ops, well, eps, polish.u, 4);
    out.mu[0] = cls.eigenvalues[0];
    out.mu[1] = cls.eigenvalues[1];
    out.mu[2] = cls.eigenvalues[2];
    out.tau = cls.tau;
    out.classification = cls.classification;
    WitnessReport wit = instability_witness(torus.mesh, ops, well, eps,
                                            polish.u);
    out.q_witness = wit.q_value;
    out.witness_threshold = wit.tau * wit.mass_norm_sq;
    out.witness_verdict = wit.verdict;

    // independent tridiagonal oracle for the two lowest reduced eigenvalues
    PeriodicState fine = solve_periodic_steady(
        side, well, eps, periodic_pair_init(side, intervals, well, eps));
    const int n = static_cast<int>(fine.u.size());
    const double h = side / n;
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd mass = Eigen::VectorXd::Constant(n, h);
    for (int k = 0; k < n; ++k) {
      trips.emplace_back(k, (k + n - 1) % n, -eps / h);
      trips.emplace_back(k, k, 2.0 * eps / h + h * well.ddw(fine.u[k]) / eps);
      trips.emplace_back(k, (k + 1) % n, -eps / h);
    }
    SparseMatrix pencil(n, n);
    pencil.setFromTriplets(trips.begin(), trips.end());
    EigenResult eig = smallest_eigenpairs(pencil, mass, 2);
    out.mu_oracle[0] = eig.values[0];
    out.mu_oracle[1] = eig.values[1];
    results[i] = out;
  });

  CsvTable state({"epsilon", "collapsed", "residual_inf", "mu_1", "mu_2",
                  "mu_3", "tau", "classification", "q_witness",
                  "witness_threshold", "witness_verdict", "mu_1_oracle",
                  "mu_2_oracle"});
  CsvTable profile({"epsilon", "i", "x", "u"});
  json per_eps = json::array();
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    const CellOut& r = results[i];
    const int n = static_cast<int>(r.reduced.u.size());
    for (int k = 0; k < n; ++k) {
      profile.row({cell(epsilons[i]), cell(k), cell(k * side / n),
                   cell(r.reduced.u[k])});
    }
    if (r.collapsed) {
      double nan = std::nan("");
      state.row({cell(epsilons[i]), cell(1), cell(r.residual), cell(nan),
                 cell(nan), cell(nan), cell(nan), "constant", cell(nan),
                 cell(nan), "degenerate", cell(nan), cell(nan)});
      per_eps.push_back(json{{"epsilon", epsilons[i]},
                             {"collapsed", true},
                             {"note", "no nonconstant critical point; the "
                                      "reduced solve collapsed to a constant"}});
      continue;
    }
    state.row({cell(epsilons[i]), cell(0), cell(r.residual), cell(r.mu[0]),
               cell(r.mu[1]), cell(r.mu[2]), cell(r.tau), r.classification,
               cell(r.q_witness), cell(r.witness_threshold), r.witness_verdict,
               cell(r.mu_oracle[0]), cell(r.mu_oracle[1])});
    per_eps.push_back(
        json{{"epsilon", epsilons[i]},
             {"collapsed", false},
             {"classification", r.classification},
             {"mu_1", r.mu[0]},
             {"mu_2", r.mu[1]},
             {"mu_1_oracle", r.mu_oracle[0]},
             {"mu_2_oracle", r.mu_oracle[1]},
             {"q_witness", r.q_witness},
             {"witness_threshold", r.witness_threshold},
             {"translation_zero_mode", std::abs(r.mu[1]) <= 1e-3},
             {"ground_mode_within_tau", std::abs(r.mu[0]) <= r.tau},
             {"witness_within_threshold",
              std::abs(r.q_witness) <= r.witness_threshold}});
  }

  state.write(dir / "state.csv");
  profile.write(dir / "profile.csv");

  RunnerOutput out;
  out.files = {"profile.csv", "state.csv"};
  out.summary = json{{"side", side},
                     {"resolution", resolution},
                     {"epsilons", epsilons},
                     {"states", per_eps}};
  return out;
}

inline RunnerOutput run_identity_check(const json& cfg,
                                       const std::filesystem::path& dir,
                                       int threads) {
  const DoubleWell well = config_well(cfg);
  const double min_order = cfg.at("min_order").get<double>();
  std::vector<int> resolutions;
  for (const auto& r : cfg.at("resolutions")) {
    resolutions.push_back(static_cast<int>(r.get<long long>()));
  }
  struct Case {
    std::string profile_name;
    ProfileCurve profile;
    double epsilon;
    double d;  // nan for sphere
  };
  std::vector<Case> cases;
  for (const auto& c : cfg.at("cases")) {
    std::string p = c.at("profile").get<std::string>();
    double eps = c.at("epsilon").get<double>();
    if (p == "sphere") {
      cases.push_back(Case{p, ProfileCurve::sphere(), eps, std::nan("")});
    } else {
      double d = c.at("d").get<double>();
      cases.push_back(Case{p, ProfileCurve::dumbbell(d), eps, d});
    }
  }

  struct CellOut {
    bool collapsed = false;
    double lhs = 0.0, rhs = 0.0, gap = 0.0;
  };
  const int nr = static_cast<int>(resolutions.size());
  std::vector<CellOut> results(cases.size() * nr);

  parallel_cells(static_cast<int>(results.size()), threads, [&](int idx) {
    const Case& cs = cases[idx / nr];
    const int n = resolutions[idx % nr];
    CellOut out;
    AxisymmetricState st = reduced_solve(cs.profile, well, cs.epsilon, n);
    if (is_collapsed(st.u, well)) {
      out.collapsed = true;
    } else {
      IdentityReport rep = check_second_variation_identity(st, well);
      out.collapsed = rep.degenerate;
      out.lhs = rep.lhs;
      out.rhs = rep.rhs;
      out.gap = rep.relative_gap;
    }
    results[idx] = out;
  });

  CsvTable identity({"case", "profile", "d", "epsilon", "n", "collapsed", "lhs",
                     "rhs", "relative_gap"});
  CsvTable orders({"case", "profile", "epsilon", "observed_order"});
  json case_summaries = json::array();
  std::vector<std::string> failures;
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const Case& cs = cases[ci];
    std::vector<std::pair<int, double>> valid;
    for (int ri = 0; ri < nr; ++ri) {
      const CellOut& r = results[ci * nr + ri];
      identity.row({cell(static_cast<int>(ci)), cs.profile_name, cell(cs.d),
                    cell(cs.epsilon), cell(resolutions[ri]),
                    cell(r.collapsed ? 1 : 0),
                    cell(r.collapsed ? std::nan("") : r.lhs),
                    cell(r.collapsed ? std::nan("") : r.rhs),
                    cell(r.collapsed ? std::nan("") : r.gap)});
      if (!r.collapsed) valid.emplace_back(resolutions[ri], r.gap);
    }
    json order_json;
    if (valid.size() >= 2) {
      auto [n0, g0] = valid.front();
      auto [n1, g1] = valid.back();
      double order = std::log(g0 / std::max(g1, 1e-300)) /
                     std::log(static_cast<double>(n1) / n0);
      order_json = order;
      orders.row({cell(static_cast<int>(ci)), cs.profile_name,
                  cell(cs.epsilon), cell(order)});
      if (!(order >= min_order)) {
        failures.push_back(cs.profile_name + " (epsilon " +
                           format_double(cs.epsilon) + "): observed order " +
                           format_double(order));
      }
    } else {
      orders.row({cell(static_cast<int>(ci)), cs.profile_name,
                  cell(cs.epsilon), cell(std::nan(""))});
    }
    case_summaries.push_back(json{{"profile", cs.profile_name},
                                  {"epsilon", cs.epsilon},
                                  {"observed_order", order_json}});
  }

  identity.write(dir / "identity.csv");
  orders.write(dir / "orders.csv");

  if (!failures.empty()) {
    std::string msg = "identity convergence below the required order " +
                      format_double(min_order) + ":";
    for (const auto& f : failures) msg += " " + f + ";";
    throw AccuracyError(msg);
  }

  RunnerOutput out;
  out.files = {"identity.csv", "orders.csv"};
  out.summary = json{{"min_order", min_order},
                     {"resolutions", resolutions},
                     {"cases", case_summaries},
                     {"all_orders_ok", true}};
  return out;
}

inline RunnerOutput run_oracle_compare(const json& cfg,
                                       const std::filesystem::path& dir,
                                       int threads) {
  const DoubleWell well = config_well(cfg);
  const std::string profile_name = cfg.at("profile").get<std::string>();
  ProfileCurve profile = profile_name == "sphere"
                             ? ProfileCurve::sphere()
                             : ProfileCurve::dumbbell(cfg.at("d").get<double>());
  const int intervals =
      static_cast<int>(cfg.at("oracle_intervals").get<long long>());
  const auto epsilons = sorted_epsilons(cfg);
  std::vector<int> resolutions;
  for (const auto& r : cfg.at("resolutions")) {
    resolutions.push_back(static_cast<int>(r.get<long long>()));
  }

  std::vector<RevolutionMesh> meshes;
  std::vector<OperatorPair> mesh_ops;
  for (int r : resolutions) {
    meshes.push_back(gen_revolution_mesh(profile, r, r));
    for (double e : epsilons) check_resolution(e, meshes.back().mesh);
    mesh_ops.push_back(build_operators(meshes.back().mesh));
  }

  struct Oracle {
    AxisymmetricState state;
    double energy = 0.0;
    double mu_1 = 0.0;
    double q = 0.0;
    bool collapsed = false;
  };
  std::vector<Oracle> oracles;
  for (double eps : epsilons) {
    Oracle o;
    o.state = reduced_solve(profile, well, eps, intervals);
    o.collapsed = is_collapsed(o.state.u, well);
    if (!o.collapsed) {
      o.energy = reduced_energy(o.state, well);
      ModeSpectrum modes = axisym_mode_spectrum(o.state, well, 2, 2);
      o.mu_1 = modes.min_eigenvalue;
      IdentityReport idr = check_second_variation_identity(o.state, well);
      o.q = -eps * idr.lhs;
    }
    oracles.push_back(std::move(o));
  }

  struct CellOut {
    bool collapsed = false;
    double residual = 0.0;
    double linf = 0.0;
    double energy = 0.0;
    double mu_1 = 0.0;
    double q_witness = 0.0;
  };
  const int nr = static_cast<int>(resolutions.size());
  std::vector<CellOut> results(epsilons.size() * nr);

  parallel_cells(static_cast<int>(results.size()), threads, [&](int idx) {
    const std::size_t ei = idx / nr;
    const int ri = idx % nr;
    const double eps = epsilons[ei];
    CellOut out;
    if (oracles[ei].collapsed) {
      out.collapsed = true;
      results[idx] = out;
      return;
    }
    const RevolutionMesh& rev = meshes[ri];
    const OperatorPair& ops = mesh_ops[ri];
    VertexField u0 = extend_axisymmetric(oracles[ei].state, rev.vertex_t);
    PolishReport polish = newton_polish(ops, well, eps, u0);
    if (!polish.converged) {
      throw NonconvergenceError(
          "mesh polish stalled at epsilon " + format_double(eps) +
              ", resolution " + std::to_string(resolutions[ri]),
          polish.residual_trace);
    }
    if (is_collapsed(polish.u, well)) {
      out.collapsed = true;
      results[idx] = out;
      return;
    }
    out.residual = polish.residual_trace.back();
    out.linf = (polish.u - u0).cwiseAbs().maxCoeff();
    out.energy = phase_energy(ops, well, eps, polish.u);
    StabilityReport cls = classify_stability(ops, well, eps, polish.u, 1);
    out.mu_1 = cls.eigenvalues[0];
    WitnessReport wit =
        instability_witness(rev.mesh, ops, well, eps, polish.u);
    out.q_witness = wit.q_value;
    results[idx] = out;
  });

  CsvTable compare({"epsilon", "n_t", "n_theta", "vertices", "mean_edge",
                    "collapsed", "residual_inf", "linf_vs_oracle",
                    "energy_mesh", "energy_oracle", "energy_rel_gap", "mu_1",
                    "mu_1_oracle", "mu_1_abs_gap", "q_witness", "q_oracle",
                    "q_rel_gap"});
  json per_eps = json::array();
  for (std::size_t ei = 0; ei < epsilons.size(); ++ei) {
    std::vector<std::pair<int, double>> linfs;
    double max_q_gap = 0.0;
    for (int ri = 0; ri < nr; ++ri) {
      const CellOut& r = results[ei * nr + ri];
      const Oracle& o = oracles[ei];
      if (r.collapsed) {
        double nan = std::nan("");
        compare.row({cell(epsilons[ei]), cell(resolutions[ri]),
                     cell(resolutions[ri]),
                     cell(meshes[ri].mesh.num_vertices),
                     cell(meshes[ri].mesh.mean_edge_length), cell(1),
                     cell(nan), cell(nan), cell(nan), cell(nan), cell(nan),
                     cell(nan), cell(nan), cell(nan), cell(nan), cell(nan),
                     cell(nan)});
        continue;
      }
      double e_gap = std::abs(r.energy - o.energy) /
                     std::max(std::abs(o.energy), 1e-300);
      double q_gap = std::abs(r.q_witness - o.q) /
                     std::max(std::abs(o.q), 1e-300);
      max_q_gap = std::max(max_q_gap, q_gap);
      linfs.emplace_back(resolutions[ri], r.linf);
      compare.row({cell(epsilons[ei]), cell(resolutions[ri]),
                   cell(resolutions[ri]), cell(meshes[ri].mesh.num_vertices),
                   cell(meshes[ri].mesh.mean_edge_length), cell(0),
                   cell(r.residual), cell(r.linf), cell(r.energy),
                   cell(o.energy), cell(e_gap), cell(r.mu_1), cell(o.mu_1),
                   cell(std::abs(r.mu_1 - o.mu_1)), cell(r.q_witness),
                   cell(o.q), cell(q_gap)});
    }
    json linf_order;
    if (linfs.size() >= 2) {
      auto [n0, l0] = linfs.front();
      auto [n1, l1] = linfs.back();
      linf_order = std::log(l0 / std::max(l1, 1e-300)) /
                   std::log(static_cast<double>(n1) / n0);
    }
    per_eps.push_back(json{{"epsilon", epsilons[ei]},
                           {"collapsed", oracles[ei].collapsed},
                           {"final_linf",
                            linfs.empty() ? json() : json(linfs.back().second)},
                           {"linf_order", linf_order},
                           {"max_q_rel_gap",
                            linfs.empty() ? json() : json(max_q_gap)}});
  }

  compare.write(dir / "compare.csv");

  RunnerOutput out;
  out.files = {"compare.csv"};
  out.summary = json{{"profile", profile_name},
                     {"epsilons", epsilons},
                     {"resolutions", resolutions},
                     {"per_epsilon", per_eps}};
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dispatch, manifest writing, rerun
// ---------------------------------------------------------------------------

inline RunResult run_experiment(const json& raw_config,
                                const std::filesystem::path& out_dir,
                                int threads = 1) {
  require(threads >= 1, "threads must be at least 1");
  json cfg = normalize_config(raw_config);
  const std::string experiment = cfg.at("experiment").get<std::string>();
  std::filesystem::create_directories(out_dir);

  RunManifest manifest;
  manifest.experiment = experiment;
  manifest.config = cfg;
  manifest.config_digest = config_digest(cfg);
  manifest.seed = cfg.at("seed").get<std::uint64_t>();
  manifest.version = artifact_version;
  manifest.started_at = detail::utc_timestamp();

  detail::RunnerOutput ro;
  if (experiment == "sphere-instability") {
    ro = detail::run_sphere_instability(cfg, out_dir, threads);
  } else if (experiment == "dumbbell-minimizer") {
    ro = detail::run_dumbbell_minimizer(cfg, out_dir, threads);
  } else if (experiment == "gamma-sweep") {
    ro = detail::run_gamma_sweep(cfg, out_dir, threads);
  } else if (experiment == "torus-degenerate") {
    ro = detail::run_torus_degenerate(cfg, out_dir, threads);
  } else if (experiment == "identity-check") {
    ro = detail::run_identity_check(cfg, out_dir, threads);
  } else {
    ro = detail::run_oracle_compare(cfg, out_dir, threads);
  }

  detail::write_json_file(out_dir / "summary.json", ro.summary);
  ro.files.push_back("summary.json");
  manifest.finished_at = detail::utc_timestamp();

  for (const auto& f : ro.files) {
    OutputRecord rec;
    rec.file = f;
    rec.bytes = std::filesystem::file_size(out_dir / f);
    rec.sha256 = sha256_file(out_dir / f);
    manifest.outputs.push_back(rec);
  }

  RunResult result;
  result.manifest = manifest;
  result.out_dir = out_dir;
  result.manifest_path = out_dir / "manifest.json";
  result.summary = ro.summary;
  detail::write_json_file(result.manifest_path, manifest.to_json());
  return result;
}

/// Integrity check: every listed output exists next to the manifest with the
/// recorded byte length and content hash.
struct ManifestEntryCheck {
  std::string file;
  bool exists = false;
  bool bytes_match = false;
  bool sha_match = false;
};

struct ManifestCheck {
  bool ok = false;
  bool digest_ok = false;
  std::vector<ManifestEntryCheck> entries;
};

inline ManifestCheck verify_manifest(const std::filesystem::path& manifest_path) {
  json mj = detail::read_json_file(manifest_path);
  RunManifest m = RunManifest::from_json(mj);
  std::filesystem::path dir = manifest_path.parent_path();
  ManifestCheck check;
  check.digest_ok = config_digest(m.config) == m.config_digest;
  check.ok = check.digest_ok;
  for (const auto& o : m.outputs) {
    ManifestEntryCheck e;
    e.file = o.file;
    std::filesystem::path p = dir / o.file;
    e.exists = std::filesystem::exists(p);
    if (e.exists) {
      e.bytes_match = std::filesystem::file_size(p) == o.bytes;
      e.sha_match = sha256_file(p) == o.sha256;
    }
    if (!(e.exists && e.bytes_match && e.sha_match)) check.ok = false;
    check.entries.push_back(e);
  }
  return check;
}

struct RerunEntry {
  std::string file;
  std::string expected_sha256;
  std::string actual_sha256;
  bool match = false;
};

struct RerunReport {
  bool config_digest_ok = false;
  bool all_match = false;
  std::vector<RerunEntry> entries;
  RunResult result;
};

/// Re-execute the run recorded in a manifest and compare every output file
/// byte-for-byte against the recorded hashes.
inline RerunReport rerun_from_manifest(const std::filesystem::path& manifest_path,
                                       const std::filesystem::path& out_dir,
                                       int threads = 1) {
  json mj = detail::read_json_file(manifest_path);
  RunManifest m = RunManifest::from_json(mj);
  RerunReport report;
  report.config_digest_ok = config_digest(m.config) == m.config_digest;
  report.result = run_experiment(m.config, out_dir, threads);
  report.all_match = report.config_digest_ok;
  for (const auto& o : m.outputs) {
    RerunEntry e;
    e.file = o.file;
    e.expected_sha256 = o.sha256;
    std::filesystem::path p = out_dir / o.file;
    e.actual_sha256 = std::filesystem::exists(p) ? sha256_file(p) : "missing";
    e.match = e.actual_sha256 == e.expected_sha256;
    if (!e.match) report.all_match = false;
    report.entries.push_back(e);
  }
  return report;
}

}  // namespace phaselab
