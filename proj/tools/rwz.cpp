// rwz: sample point processes, run named verification experiments, aggregate reports.
// Exit codes: 0 pass, 1 verification failure, 2 usage error, 3 numeric/infrastructure error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rwz/audit.hpp"
#include "rwz/experiments.hpp"
#include "rwz/pointproc.hpp"

#ifndef RWZ_VERSION
#define RWZ_VERSION "dev"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace rwz;

namespace {

enum Exit { kPass = 0, kFail = 1, kUsage = 2, kNumeric = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw NumericError("cannot write " + path.string());
  out << std::setw(2) << j << '\n';
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw NumericError("cannot create " + dir + ": " + ec.message());
}

json meta_header(const std::string& command, const std::vector<std::string>& argv) {
  return {{"kind", "meta"}, {"tool", "rwz"}, {"version", RWZ_VERSION}, {"command", command}, {"argv", argv}};
}

// "key=value"; value parsed as JSON, else taken as a string
std::pair<std::string, json> parse_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
  const std::string key = s.substr(0, eq), val = s.substr(eq + 1);
  json v = json::parse(val, nullptr, false);
  if (v.is_discarded()) v = val;
  return {key, v};
}

// Model descriptor in a config file: "poisson" or {"family": "poisson", "intensity": 1, ...}.
void merge_model(json& params, const json& model) {
  if (model.is_string()) {
    params["model"] = model;
  } else if (model.is_object()) {
    for (auto it = model.begin(); it != model.end(); ++it)
      params[it.key() == "family" ? "model" : it.key()] = it.value();
  } else {
    throw UsageError("config: model must be a name or an object");
  }
}

struct ModelFlags {
  std::optional<std::string> model;
  std::optional<double> intensity, a, c1, c2, p;
  std::optional<int> n;

  void add(CLI::App* app) {
    app->add_option("--model", model, "poisson | cox | lattice | perturbed | ginibre | gef");
    app->add_option("--intensity", intensity, "Poisson intensity c");
    app->add_option("--n", n, "Ginibre matrix size");
    app->add_option("--a", a, "perturbed lattice variance E|zeta|^2");
    app->add_option("--c1", c1, "Cox intensity 1");
    app->add_option("--c2", c2, "Cox intensity 2");
    app->add_option("--p", p, "Cox mixing probability");
  }
  void apply(json& j) const {
    if (model) j["model"] = *model;
    if (intensity) j["intensity"] = *intensity;
    if (n) j["n"] = *n;
    if (a) j["a"] = *a;
    if (c1) j["c1"] = *c1;
    if (c2) j["c2"] = *c2;
    if (p) j["p"] = *p;
  }
};

// --- sample -------------------------------------------------------------------

int cmd_sample(const ModelFlags& mf, std::optional<double> radius, std::uint64_t seed, const std::string& out,
               const std::vector<std::string>& argv) {
  json j;
  mf.apply(j);
  if (!j.contains("model")) throw UsageError("sample: --model is required");
  const std::string name = j["model"];
  ProcessModel m;
  switch (family_from_name(name)) {
    case Family::Poisson: m = ProcessModel::poisson(j.value("intensity", 1.0)); break;
    case Family::CoxTwoPoisson:
      m = ProcessModel::cox_two_poisson(j.value("c1", 1.0), j.value("c2", 3.0), j.value("p", 0.5));
      break;
    case Family::ShiftedLattice: m = ProcessModel::shifted_lattice(); break;
    case Family::PerturbedLattice: m = ProcessModel::perturbed_lattice(j.value("a", 0.04)); break;
    case Family::Ginibre:
      if (!j.contains("n")) throw UsageError("sample: ginibre needs --n");
      m = ProcessModel::ginibre(j["n"].get<int>());
      break;
    case Family::GEFZeros: m = ProcessModel::gef_zeros(); break;
  }
  if (m.family != Family::Ginibre && !radius) throw UsageError("sample: --radius is required for " + name);
  const PointConfiguration cfg = sample(m, radius.value_or(0.0), seed);
  ensure_dir(out);
  write_points_csv(cfg, (fs::path(out) / "points.csv").string());
  json meta = json::parse(config_meta_json(cfg));
  json header = meta_header("sample", argv);
  for (auto it = header.begin(); it != header.end(); ++it) meta[it.key()] = it.value();
  write_json_file(fs::path(out) / "meta.json", meta);
  std::cout << cfg.size() << " points -> " << (fs::path(out) / "points.csv").string() << '\n';
  if (!std::isnan(cfg.root_residual)) std::cout << "root residual " << cfg.root_residual << '\n';
  return kPass;
}

// --- verify -------------------------------------------------------------------

std::string verdict_word(bool pass) { return pass ? "PASS" : "FAIL"; }

int cmd_verify(const std::string& name, const std::string& config_path, const ModelFlags& mf,
               const std::map<std::string, std::optional<double>>& numeric_flags,
               const std::vector<std::string>& sets, std::string out, int threads,
               const std::vector<std::string>& argv) {
  json params = json::object();
  std::string experiment = name;
  if (!config_path.empty()) {
    json cfg = read_json_file(config_path);
    if (!cfg.is_object()) throw UsageError("config must be a JSON object");
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
      const std::string& k = it.key();
      if (k == "experiment") {
        if (experiment.empty()) experiment = it.value().get<std::string>();
        else if (experiment != it.value().get<std::string>())
          throw UsageError("config names experiment '" + it.value().get<std::string>() + "'");
      } else if (k == "model") {
        merge_model(params, it.value());
      } else if (k == "params") {
        if (!it.value().is_object()) throw UsageError("config: params must be an object");
        for (auto p = it.value().begin(); p != it.value().end(); ++p) params[p.key()] = p.value();
      } else if (k == "output") {
        if (out.empty()) out = it.value().get<std::string>();
      } else if (k == "threads") {
        if (threads == 0) threads = it.value().get<int>();
      } else {
        throw UsageError("config: unknown field '" + k + "'");
      }
    }
  }
  if (experiment.empty()) throw UsageError("verify: experiment name required");
  // flags override file values
  mf.apply(params);
  for (const auto& [key, v] : numeric_flags)
    if (v) params[key] = *v;
  for (const auto& s : sets) {
    auto [k, v] = parse_assignment(s);
    params[k] = v;
  }

  const auto& spec = find_experiment(experiment);
  const json resolved = resolve_params(spec, params);
  RunOptions ro;
  ro.threads = threads;
  const ExperimentResult res = spec.body(resolved, ro);
  const json report = res.report();

  if (out.empty()) out = ".";
  ensure_dir(out);
  write_json_file(fs::path(out) / (experiment + ".report.json"), report);
  res.write_replicates_csv((fs::path(out) / (experiment + ".replicates.csv")).string());
  json meta = meta_header("verify", argv);
  meta["experiment"] = experiment;
  meta["params"] = resolved;
  meta["threads"] = threads;
  write_json_file(fs::path(out) / (experiment + ".meta.json"), meta);

  for (const auto& c : res.checks) std::cout << "  [" << verdict_word(c.pass) << "] " << c.name << '\n';
  std::cout << experiment << ": " << verdict_word(res.pass()) << '\n';
  return res.pass() ? kPass : kFail;
}

// --- report -------------------------------------------------------------------

std::string cell(const json& v) {
  if (v.is_null()) return "-";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) {
    std::ostringstream os;
    os << std::setprecision(6) << v.get<double>();
    return os.str();
  }
  return v.dump();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string r = "\"";
  for (char ch : s) r += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return r + "\"";
}

int cmd_report(const std::string& dir) {
  if (!fs::is_directory(dir)) throw UsageError("report: not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());

  struct Row {
    std::string experiment, model, oracle, mc, verdict;
  };
  std::vector<Row> rows;
  std::map<std::string, int> seen;
  bool any_fail = false;
  for (const auto& f : files) {
    std::ifstream in(f);
    json j = json::parse(in, nullptr, false);
    if (!j.is_discarded() && j.is_object() && j.value("kind", "") == "meta") continue;
    if (j.is_discarded() || !j.is_object() || !j.contains("experiment") || !j["experiment"].is_string() ||
        !j.contains("verdict") || !j["verdict"].is_object() || !j["verdict"].contains("pass") ||
        !j["verdict"]["pass"].is_boolean()) {
      std::cerr << "warning: skipping malformed report " << f.string() << '\n';
      continue;
    }
    std::string name = j["experiment"];
    const int k = ++seen[name];
    if (k > 1) name += "#" + std::to_string(k);
    const bool pass = j["verdict"]["pass"];
    any_fail = any_fail || !pass;
    rows.push_back({name, cell(j.value("model", json())), cell(j.value("oracle", json())),
                    cell(j.value("mc_variance", json())), verdict_word(pass)});
  }

  std::ofstream csv(fs::path(dir) / "summary.csv");
  if (!csv) throw NumericError("cannot write summary.csv");
  csv << "experiment,model,oracle,mc_variance,verdict\n";
  for (const auto& r : rows)
    csv << csv_escape(r.experiment) << ',' << csv_escape(r.model) << ',' << csv_escape(r.oracle) << ','
        << csv_escape(r.mc) << ',' << r.verdict << '\n';

  std::size_t w0 = 10, w1 = 5, w2 = 6, w3 = 11;
  for (const auto& r : rows) {
    w0 = std::max(w0, r.experiment.size());
    w1 = std::max(w1, r.model.size());
    w2 = std::max(w2, std::min<std::size_t>(r.oracle.size(), 24));
    w3 = std::max(w3, r.mc.size());
  }
  auto line = [&](const std::string& a, const std::string& b, const std::string& c, const std::string& d,
                  const std::string& e) {
    std::cout << std::left << std::setw(int(w0)) << a << "  " << std::setw(int(w1)) << b << "  " << std::setw(int(w2))
              << c << "  " << std::setw(int(w3)) << d << "  " << e << '\n';
  };
  line("experiment", "model", "oracle", "mc_variance", "verdict");
  for (const auto& r : rows) line(r.experiment, r.model, r.oracle, r.mc, r.verdict);
  std::cout << rows.size() << " report(s), " << (any_fail ? "some failed" : "all passed") << '\n';
  return any_fail ? kFail : kPass;
}

// --- audit --------------------------------------------------------------------

int cmd_audit(int reps, std::uint64_t seed, const std::string& out, int threads, const std::vector<std::string>& argv) {
  AuditOptions o;
  o.n_reps = reps;
  o.seed = seed;
  o.run.threads = threads;
  json all = json::array();
  bool ok = true;
  for (const auto& a : run_audits(o)) {
    all.push_back(a.to_json());
    ok = ok && a.decided;
    std::cout << a.name << ": " << (a.decided ? "decided -> " + a.adopted : std::string("UNDECIDED")) << '\n';
    for (const auto& e : a.evidence) std::cout << "  " << e << '\n';
  }
  if (!out.empty()) {
    ensure_dir(out);
    write_json_file(fs::path(out) / "audits.json", {{"audits", all}});
    json meta = meta_header("audit", argv);
    meta["seed"] = seed;
    meta["n_reps"] = reps;
    write_json_file(fs::path(out) / "audits.meta.json", meta);
  }
  return ok ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"random Weierstrass zeta toolkit"};
  app.set_version_flag("--version", std::string(RWZ_VERSION));
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker cap for Monte Carlo replicates (0: all cores)")
      ->check(CLI::NonNegativeNumber);

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "draw one realization; writes points.csv and meta.json");
  ModelFlags sample_model;
  sample_model.add(sample_cmd);
  std::optional<double> radius;
  std::uint64_t sample_seed = 0;
  std::string sample_out;
  sample_cmd->add_option("--radius", radius, "window radius (GEF: keep radius)");
  sample_cmd->add_option("--seed", sample_seed, "seed")->required();
  sample_cmd->add_option("--out", sample_out, "output directory")->required();

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "run a named experiment; writes report, replicates and meta");
  std::string exp_name, config_path, verify_out;
  std::vector<std::string> sets;
  ModelFlags verify_model;
  verify_model.add(verify_cmd);
  std::map<std::string, std::optional<double>> numeric_flags = {
      {"r", {}}, {"R", {}}, {"n_reps", {}}, {"seed", {}}, {"window", {}}, {"scale", {}}};
  verify_cmd->add_option("experiment", exp_name, "experiment name (see `rwz list`)");
  verify_cmd->add_option("--config", config_path, "JSON config file; flags override its values");
  verify_cmd->add_option("--r", numeric_flags["r"], "contour radius");
  verify_cmd->add_option("--R", numeric_flags["R"], "truncation radius");
  verify_cmd->add_option("--reps", numeric_flags["n_reps"], "replicates");
  verify_cmd->add_option("--seed", numeric_flags["seed"], "base seed");
  verify_cmd->add_option("--window", numeric_flags["window"], "sampling window radius");
  verify_cmd->add_option("--scale", numeric_flags["scale"], "Gaussian bump scale");
  verify_cmd->add_option("--set", sets, "extra parameter key=value (JSON value)");
  verify_cmd->add_option("--out", verify_out, "output directory (default .)");
  verify_cmd->add_option("--threads", threads, "worker cap");

  // report
  auto* report_cmd = app.add_subcommand("report", "summarize a directory of report JSONs");
  std::string report_dir;
  report_cmd->add_option("dir", report_dir, "directory")->required();

  // audit
  auto* audit_cmd = app.add_subcommand("audit", "run the normalization audits");
  int audit_reps = 0;
  std::uint64_t audit_seed = 20240601;
  std::string audit_out;
  audit_cmd->add_option("--reps", audit_reps, "replicates per MC audit (0: defaults)");
  audit_cmd->add_option("--seed", audit_seed, "seed");
  audit_cmd->add_option("--out", audit_out, "output directory");
  audit_cmd->add_option("--threads", threads, "worker cap");

  auto* list_cmd = app.add_subcommand("list", "list experiments and their default parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (*sample_cmd) return cmd_sample(sample_model, radius, sample_seed, sample_out, args);
    if (*verify_cmd) {
      std::map<std::string, std::optional<double>> flags = numeric_flags;
      return cmd_verify(exp_name, config_path, verify_model, flags, sets, verify_out, threads, args);
    }
    if (*report_cmd) return cmd_report(report_dir);
    if (*audit_cmd) return cmd_audit(audit_reps, audit_seed, audit_out, threads, args);
    if (*list_cmd) {
      for (const auto& e : experiment_registry())
        std::cout << e.name << "  " << e.summary << "\n    " << e.defaults.dump() << '\n';
      return kPass;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParameterError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const WindowError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const UnsupportedModelError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const json::exception& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kUsage;
}
