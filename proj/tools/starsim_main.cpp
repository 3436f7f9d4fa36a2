// starsim — command-line front end: Monte Carlo estimators, the closed-form
// model, resource accounting and the exhaustive selftest, with deterministic
// CSV/JSON artifacts for replay and regression.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "starsim/analytic.hpp"
#include "starsim/estimators.hpp"
#include "starsim/protocols.hpp"
#include "starsim/selftest.hpp"
#include "starsim/steane.hpp"
#include "starsim/version.hpp"

using nlohmann::json;
using namespace starsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSelftest = 2;
constexpr int kExitZeroAcceptance = 3;

struct RunConfig {
  std::string subcommand;
  double p = 0.01;
  std::string p_grid;  // comma-separated physical rates; overrides --p where grids apply
  uint32_t L = 7;
  uint64_t trials = 0;  // 0 = subcommand default
  uint64_t seed = 1;
  double tau = 0.0;
  double omega = 1e21;
  std::string code = "steane-713";
  double confidence = 0.99;
  std::string out = "-";
  std::string format;  // "" = subcommand default
  unsigned workers = 1;
  double threshold_const = kDefaultThresholdConst;
  double kappa_prefactor = 1.0;
  bool L_given = false;
  bool p_given = false;
};

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "p",   "p-grid", "L",       "trials", "seed",   "tau",            "omega",
      "code", "confidence", "out", "format", "workers", "threshold-const", "kappa-prefactor"};
  return keys;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Flat key = value config file; '#' starts a comment; unknown keys are fatal.
std::vector<std::string> load_config_flags(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::vector<std::string> flags;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (!known_keys().count(key))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (value.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": empty value for '" + key + "'");
    flags.push_back("--" + key);
    flags.push_back(value);
  }
  return flags;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_grid(const std::string& grid) {
  std::vector<double> out;
  std::stringstream ss(grid);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    size_t pos = 0;
    double v = std::stod(item, &pos);
    if (pos != item.size()) throw std::runtime_error("bad p-grid entry: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw std::runtime_error("p-grid is empty");
  return out;
}

// Embeds everything that determines the results. Execution metadata that
// provably cannot change them (worker count, output path) stays out, so
// replays with different pool sizes yield byte-identical artifacts.
json config_json(const RunConfig& cfg) {
  return json{{"subcommand", cfg.subcommand},
              {"p", cfg.p},
              {"p_grid", cfg.p_grid},
              {"L", cfg.L},
              {"trials", cfg.trials},
              {"seed", cfg.seed},
              {"tau", cfg.tau},
              {"omega", cfg.omega},
              {"code", cfg.code},
              {"confidence", cfg.confidence},
              {"format", cfg.format},
              {"threshold_const", cfg.threshold_const},
              {"kappa_prefactor", cfg.kappa_prefactor}};
}

// Header block carrying the full effective config, so every artifact replays.
std::string csv_header(const RunConfig& cfg) {
  std::ostringstream os;
  os << "# starsim " << kVersion << "\n";
  os << "# subcommand = " << cfg.subcommand << "\n";
  os << "# code = " << cfg.code << "\n";
  if (!cfg.p_grid.empty()) os << "# p-grid = " << cfg.p_grid << "\n";
  else os << "# p = " << g17(cfg.p) << "\n";
  os << "# L = " << cfg.L << "\n";
  os << "# trials = " << cfg.trials << "\n";
  os << "# seed = " << cfg.seed << "\n";
  os << "# tau = " << g17(cfg.tau) << "\n";
  os << "# omega = " << g17(cfg.omega) << "\n";
  os << "# confidence = " << g17(cfg.confidence) << "\n";
  os << "# threshold-const = " << g17(cfg.threshold_const) << "\n";
  os << "# kappa-prefactor = " << g17(cfg.kappa_prefactor) << "\n";
  return os.str();
}

void write_artifact(const RunConfig& cfg, const std::string& body) {
  if (cfg.out == "-" || cfg.out.empty()) {
    std::fputs(body.c_str(), stdout);
    return;
  }
  std::ofstream out(cfg.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + cfg.out);
  out << body;
}

std::string dump_json(const RunConfig& cfg, json results) {
  json doc{{"artifact", cfg.subcommand},
           {"version", kVersion},
           {"config", config_json(cfg)},
           {"results", std::move(results)}};
  return doc.dump(2) + "\n";
}

json rate_json(const RateEstimate& r) {
  return json{{"successes", r.successes}, {"trials", r.trials},   {"point", r.point},
              {"ci_low", r.ci_low},       {"ci_high", r.ci_high}, {"confidence", r.confidence}};
}

int finish(const RunConfig& cfg, const std::string& body, bool zero_accepted) {
  write_artifact(cfg, body);
  if (zero_accepted) {
    std::cerr << "starsim: zero accepted trials\n";
    return kExitZeroAcceptance;
  }
  return kExitOk;
}

// ---- subcommands ----

int run_channel(RunConfig cfg) {
  if (cfg.trials == 0) cfg.trials = 250000;
  if (cfg.format.empty()) cfg.format = "json";
  ChannelEstimate est =
      estimate_residual_channel(cfg.p, cfg.trials, cfg.seed, cfg.workers, cfg.confidence);
  LeadingChannel lead = leading_channel(cfg.p);
  if (cfg.format == "csv") {
    std::ostringstream os;
    os << csv_header(cfg);
    os << "scope,component,successes,trials,point,ci_low,ci_high,analytic\n";
    const char* comp_names[3] = {"X", "Y", "Z"};
    const double lead_eps[3] = {lead.eps_x, lead.eps_y, lead.eps_z};
    for (int k = 0; k < 3; ++k) {
      const RateEstimate& r = est.pooled[static_cast<size_t>(k)];
      os << "pooled," << comp_names[k] << "," << r.successes << "," << r.trials << ","
         << g17(r.point) << "," << g17(r.ci_low) << "," << g17(r.ci_high) << ","
         << g17(lead_eps[k]) << "\n";
    }
    for (int w = 0; w < 7; ++w)
      for (int k = 0; k < 3; ++k) {
        const RateEstimate& r = est.per_wire[static_cast<size_t>(w)][static_cast<size_t>(k)];
        os << "wire" << w << "," << comp_names[k] << "," << r.successes << "," << r.trials << ","
           << g17(r.point) << "," << g17(r.ci_low) << "," << g17(r.ci_high) << ","
           << g17(lead_eps[k]) << "\n";
      }
    return finish(cfg, os.str(), est.accepted == 0);
  }
  json per_wire = json::array();
  for (int w = 0; w < 7; ++w) {
    const auto& row = est.per_wire[static_cast<size_t>(w)];
    per_wire.push_back(json{{"X", rate_json(row[0])}, {"Y", rate_json(row[1])},
                            {"Z", rate_json(row[2])}});
  }
  json results{{"acceptance", rate_json(est.acceptance)},
               {"pooled",
                {{"X", rate_json(est.pooled[0])},
                 {"Y", rate_json(est.pooled[1])},
                 {"Z", rate_json(est.pooled[2])}}},
               {"per_wire", per_wire},
               {"analytic",
                {{"eps_x", lead.eps_x},
                 {"eps_y", lead.eps_y},
                 {"eps_z", lead.eps_z},
                 {"out_of_validated_range", lead.out_of_validated_range}}}};
  return finish(cfg, dump_json(cfg, std::move(results)), est.accepted == 0);
}

int run_logical_error(RunConfig cfg) {
  if (cfg.trials == 0) cfg.trials = 200000;
  if (cfg.format.empty()) cfg.format = "csv";
  std::vector<double> grid = cfg.p_grid.empty() ? std::vector<double>{cfg.p}
                                                : parse_grid(cfg.p_grid);
  std::vector<LogicalErrorEstimate> points;
  std::vector<std::pair<double, double>> slope_points;
  bool zero = false;
  for (double p : grid) {
    LogicalErrorEstimate est =
        estimate_logical_measurement_error(p, cfg.trials, cfg.seed, GateKind::MEAS_X,
                                           cfg.workers, cfg.confidence);
    zero = zero || est.acceptance.successes == 0;
    if (est.error.point > 0.0) slope_points.push_back({p, est.error.point});
    points.push_back(est);
  }
  std::optional<double> slope;
  if (slope_points.size() >= 2) slope = log_log_slope(slope_points);
  if (cfg.format == "csv") {
    std::ostringstream os;
    os << csv_header(cfg);
    if (slope) os << "# log-log-slope = " << g17(*slope) << "\n";
    os << "p,trials,accepted,acceptance,errors,error,ci_low,ci_high,analytic_pq1\n";
    for (size_t i = 0; i < grid.size(); ++i) {
      const LogicalErrorEstimate& est = points[i];
      os << g17(grid[i]) << "," << est.acceptance.trials << "," << est.acceptance.successes
         << "," << g17(est.acceptance.point) << "," << est.error.successes << ","
         << g17(est.error.point) << "," << g17(est.error.ci_low) << ","
         << g17(est.error.ci_high) << "," << g17(pq1(grid[i], Pauli::X, cfg.tau)) << "\n";
    }
    return finish(cfg, os.str(), zero);
  }
  json rows = json::array();
  for (size_t i = 0; i < grid.size(); ++i)
    rows.push_back(json{{"p", grid[i]},
                        {"error", rate_json(points[i].error)},
                        {"acceptance", rate_json(points[i].acceptance)},
                        {"analytic_pq1", pq1(grid[i], Pauli::X, cfg.tau)}});
  json results{{"points", std::move(rows)}};
  if (slope) results["log_log_slope"] = *slope;
  return finish(cfg, dump_json(cfg, std::move(results)), zero);
}

int run_connect(RunConfig cfg) {
  if (cfg.trials == 0) cfg.trials = 20000;
  if (cfg.format.empty()) cfg.format = "json";
  ConnectionStats stats =
      estimate_connection_stats(cfg.p, cfg.L, cfg.trials, cfg.seed, cfg.workers, cfg.confidence);
  const double ps = ps_analytic(cfg.p, cfg.tau);
  json results{{"p_s", rate_json(stats.p_s)},
               {"p_fail", rate_json(stats.p_fail)},
               {"conditional", rate_json(stats.conditional)},
               {"attempts", stats.attempts},
               {"mean_attempts_per_trial", stats.mean_attempts_per_trial},
               {"analytic", {{"p_s", ps}, {"p_fail", pfail(cfg.L, ps)}}}};
  return finish(cfg, dump_json(cfg, std::move(results)), stats.attempts == 0);
}

int run_star(RunConfig cfg) {
  if (cfg.trials == 0) cfg.trials = 200000;
  if (cfg.format.empty()) cfg.format = "json";
  PairHomogeneity hom =
      estimate_pair_homogeneity(cfg.p, cfg.trials, cfg.seed, cfg.workers, cfg.confidence);
  json wires = json::array();
  for (const RateEstimate& r : hom.wire_error) wires.push_back(rate_json(r));
  json results{{"pair_acceptance", rate_json(hom.acceptance)}, {"wire_error", std::move(wires)}};
  if (cfg.p <= 0.05) {
    CorrelationReport corr =
        correlation_diagnostic(cfg.p, cfg.trials, cfg.seed, cfg.workers, cfg.confidence);
    json pairs = json::array();
    int violations = 0;
    for (const CorrelationReport::PairStat& ps : corr.pairs) {
      violations += ps.within ? 0 : 1;
      pairs.push_back(json{{"i", ps.i},
                           {"j", ps.j},
                           {"joint", ps.joint},
                           {"product", ps.product},
                           {"excess", ps.excess},
                           {"sigma", ps.sigma},
                           {"within", ps.within}});
    }
    results["correlation"] = json{{"accepted", corr.accepted},
                                  {"violations", violations},
                                  {"pairs", std::move(pairs)}};
  }
  ResourceCount rc = count_resources(cfg.L, cfg.p, cfg.tau);
  results["resources"] = json{{"N", rc.n_ops},
                              {"K", rc.k_locations},
                              {"fresh_acceptance", rc.fresh_acceptance},
                              {"repeat_acceptance", rc.repeat_acceptance},
                              {"expected_block", rc.expected_block},
                              {"expected_pair", rc.expected_pair},
                              {"expected_leaf", rc.expected_leaf}};
  return finish(cfg, dump_json(cfg, std::move(results)), hom.accepted == 0);
}

int run_sweep(RunConfig cfg) {
  if (!cfg.L_given) cfg.L = 9;  // covers the default grid up to p = 0.02
  if (cfg.format.empty()) cfg.format = "csv";
  std::vector<double> grid = cfg.p_grid.empty()
                                 ? std::vector<double>{0.005, 0.0075, 0.01, 0.0125,
                                                       0.015, 0.0175, 0.02}
                                 : parse_grid(cfg.p_grid);
  if (cfg.p_grid.empty() && cfg.p_given) grid = {cfg.p};
  std::ostringstream os;
  os << csv_header(cfg);
  os << "p,L,tau,p_q0,p_q1,p_s,p_fail,q,verdict,kappa,R,N,K,C,CR\n";
  json rows = json::array();
  for (double p : grid) {
    ThresholdReport rep = q_of_p(p, cfg.L, cfg.tau, cfg.threshold_const);
    ResourceCount rc = count_resources(cfg.L, p, cfg.tau);
    double kappa = std::numeric_limits<double>::quiet_NaN();
    double R = kappa, C = kappa, CR = kappa;
    if (rep.q > 0.0 && rep.q < 0.25) {
      ResourceEstimate res = resources(p, rep.q, cfg.omega, rc.n_ops, rc.k_locations,
                                       cfg.kappa_prefactor);
      kappa = res.kappa;
      R = res.R;
      C = res.C;
      CR = res.CR;
    }
    os << g17(p) << "," << cfg.L << "," << g17(cfg.tau) << "," << g17(rep.p_q0) << ","
       << g17(rep.p_q1) << "," << g17(rep.p_s) << "," << g17(rep.p_fail) << "," << g17(rep.q)
       << "," << (rep.verdict ? "true" : "false") << "," << g17(kappa) << "," << g17(R) << ","
       << g17(rc.n_ops) << "," << g17(rc.k_locations) << "," << g17(C) << "," << g17(CR)
       << "\n";
    rows.push_back(json{{"p", p},
                        {"L", cfg.L},
                        {"tau", cfg.tau},
                        {"p_q0", rep.p_q0},
                        {"p_q1", rep.p_q1},
                        {"p_s", rep.p_s},
                        {"p_fail", rep.p_fail},
                        {"q", rep.q},
                        {"verdict", rep.verdict},
                        {"kappa", kappa},
                        {"R", R},
                        {"N", rc.n_ops},
                        {"K", rc.k_locations},
                        {"C", C},
                        {"CR", CR}});
  }
  if (cfg.format == "csv") return finish(cfg, os.str(), false);
  return finish(cfg, dump_json(cfg, json{{"rows", std::move(rows)}}), false);
}

int run_resources(RunConfig cfg) {
  if (cfg.format.empty()) cfg.format = "json";
  ThresholdReport rep = q_of_p(cfg.p, cfg.L, cfg.tau, cfg.threshold_const);
  ResourceCount rc = count_resources(cfg.L, cfg.p, cfg.tau);
  ResourceEstimate res =
      resources(cfg.p, rep.q, cfg.omega, rc.n_ops, rc.k_locations, cfg.kappa_prefactor);
  json results{{"threshold",
                {{"p", rep.p},
                 {"L", rep.L},
                 {"p_q0", rep.p_q0},
                 {"p_q1", rep.p_q1},
                 {"p_s", rep.p_s},
                 {"p_fail", rep.p_fail},
                 {"q", rep.q},
                 {"threshold", rep.threshold},
                 {"margin", rep.margin},
                 {"verdict", rep.verdict}}},
               {"count",
                {{"N", rc.n_ops},
                 {"K", rc.k_locations},
                 {"fresh_acceptance", rc.fresh_acceptance},
                 {"repeat_acceptance", rc.repeat_acceptance},
                 {"expected_block", rc.expected_block},
                 {"expected_pair", rc.expected_pair},
                 {"expected_leaf", rc.expected_leaf}}},
               {"estimate",
                {{"kappa", res.kappa},
                 {"R", res.R},
                 {"C", res.C},
                 {"CR", res.CR},
                 {"omega", res.omega},
                 {"q", res.q}}}};
  return finish(cfg, dump_json(cfg, std::move(results)), false);
}

int run_selftest_cmd(RunConfig cfg) {
  if (cfg.format.empty()) cfg.format = "json";
  SelftestReport rep = run_selftest(cfg.seed);
  for (const SelftestCheck& c : rep.checks)
    std::printf("%-4s %-32s %s\n", c.ok ? "ok" : "FAIL", c.name.c_str(), c.detail.c_str());
  std::printf("%s\n", rep.all_ok ? "selftest passed" : "selftest FAILED");
  if (cfg.out != "-" && !cfg.out.empty()) {
    json checks = json::array();
    for (const SelftestCheck& c : rep.checks)
      checks.push_back(json{{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
    write_artifact(cfg, dump_json(cfg, json{{"all_ok", rep.all_ok}, {"checks", checks}}));
  }
  return rep.all_ok ? kExitOk : kExitSelftest;
}

void add_common_options(CLI::App* sub, RunConfig& cfg) {
  auto take_last = [](CLI::Option* o) { o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast); };
  take_last(sub->add_option("--p", cfg.p, "physical error rate per operation"));
  take_last(sub->add_option("--p-grid", cfg.p_grid, "comma-separated physical error rates"));
  take_last(sub->add_option("--L", cfg.L, "leaves per star (sweep default: 9)"));
  take_last(sub->add_option("--trials", cfg.trials, "Monte Carlo trials (0 = subcommand default)"));
  take_last(sub->add_option("--seed", cfg.seed, "master RNG seed"));
  take_last(sub->add_option("--tau", cfg.tau, "storage noise per wait step, as a fraction of p"));
  take_last(sub->add_option("--omega", cfg.omega, "computation size for resource estimates"));
  take_last(sub->add_option("--code", cfg.code, "code id (steane-713)"));
  take_last(sub->add_option("--confidence", cfg.confidence, "confidence level for intervals"));
  take_last(sub->add_option("--out", cfg.out, "output path, '-' for stdout"));
  take_last(sub->add_option("--format", cfg.format, "artifact format")
                ->check(CLI::IsMember({"csv", "json"})));
  take_last(sub->add_option("--workers", cfg.workers, "worker threads (results are identical)"));
  take_last(sub->add_option("--threshold-const", cfg.threshold_const,
                            "cluster threshold constant for verdicts"));
  take_last(sub->add_option("--kappa-prefactor", cfg.kappa_prefactor,
                            "prefactor on kappa in the R formula"));
}

int validate_config(const RunConfig& cfg) {
  if (cfg.code != "steane-713") {
    std::cerr << "starsim: unsupported code id '" << cfg.code << "' (only steane-713)\n";
    return kExitUsage;
  }
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) {
    std::cerr << "starsim: confidence must lie strictly between 0 and 1\n";
    return kExitUsage;
  }
  if (cfg.workers < 1) {
    std::cerr << "starsim: workers must be >= 1\n";
    return kExitUsage;
  }
  if (!(cfg.p >= 0.0 && cfg.p <= 1.0)) {
    std::cerr << "starsim: p must lie in [0, 1]\n";
    return kExitUsage;
  }
  if (cfg.tau < 0.0) {
    std::cerr << "starsim: tau must be >= 0\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  // Pull out --config first: its key = value pairs become flags injected
  // before the explicit ones, so the command line always wins.
  std::vector<std::string> args;
  std::string config_path;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config") {
      if (i + 1 >= argc) {
        std::cerr << "starsim: --config needs a file path\n";
        return kExitUsage;
      }
      config_path = argv[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      config_path = a.substr(9);
    } else {
      args.push_back(a);
    }
  }
  if (!config_path.empty()) {
    if (args.empty() || args[0].rfind("-", 0) == 0) {
      std::cerr << "starsim: --config requires a subcommand\n";
      return kExitUsage;
    }
    try {
      std::vector<std::string> flags = load_config_flags(config_path);
      args.insert(args.begin() + 1, flags.begin(), flags.end());
    } catch (const std::exception& e) {
      std::cerr << "starsim: " << e.what() << "\n";
      return kExitUsage;
    }
  }

  CLI::App app{"verified star-cluster simulator and analytic model"};
  app.require_subcommand(1);
  RunConfig cfg;

  struct SubSpec {
    const char* name;
    const char* help;
    int (*fn)(RunConfig);
  };
  const SubSpec specs[] = {
      {"channel", "residual Pauli channel of verified blocks vs the leading-order model",
       run_channel},
      {"logical-error", "decoded logical measurement error vs p_q1", run_logical_error},
      {"connect", "connection statistics: p_s, p_fail, conditional error", run_connect},
      {"star", "pair homogeneity, correlation diagnostics and star resources", run_star},
      {"sweep", "analytic grid: q(p), verdicts and resource overheads", run_sweep},
      {"resources", "single-point resource estimate", run_resources},
      {"selftest", "exhaustive oracles: enumerations, scans, engine cross-validation",
       run_selftest_cmd},
  };
  std::map<const CLI::App*, const SubSpec*> dispatch;
  for (const SubSpec& s : specs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common_options(sub, cfg);
    sub->add_option("--config", "flat key = value config file (handled before parsing)");
    dispatch[sub] = &s;
  }

  // argv-style vector for CLI11 (reversed, as CLI11 consumes from the back).
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  cfg.subcommand = sub->get_name();
  cfg.L_given = sub->count("--L") > 0;
  cfg.p_given = sub->count("--p") > 0;
  if (int rc = validate_config(cfg); rc != kExitOk) return rc;

  try {
    return dispatch.at(sub)->fn(cfg);
  } catch (const std::exception& e) {
    std::cerr << "starsim: " << e.what() << "\n";
    return kExitUsage;
  }
}
