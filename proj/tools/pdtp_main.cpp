// pdtp — command-line front end: reproducible table/CSV emitters for the
// discrete-time Prabhakar counting process, its continuous-time limit,
// subordinated graph walks and seeded Monte Carlo validation runs.

#include <CLI11.hpp>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pdtp/counting.hpp"
#include "pdtp/graphwalk.hpp"
#include "pdtp/montecarlo.hpp"
#include "pdtp/powerseries.hpp"
#include "pdtp/version.hpp"

namespace {

using pdtp::CtParams;
using pdtp::EvalOptions;
using pdtp::PdtpParams;
namespace counting = pdtp::counting;
namespace graphwalk = pdtp::graphwalk;
namespace montecarlo = pdtp::montecarlo;

std::string fmt17(double v) {
  char buf[40];
  auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// ----------------------------------------------------------------------
// grid / list parsing
// ----------------------------------------------------------------------

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

// "1,4,16" and "1..7" (mixable, comma-separated)
std::vector<long> parse_long_list(const std::string& text) {
  std::vector<long> out;
  for (const auto& tok : split(text, ',')) {
    if (tok.empty()) continue;
    auto dots = tok.find("..");
    if (dots == std::string::npos) {
      out.push_back(std::stol(tok));
    } else {
      long a = std::stol(tok.substr(0, dots));
      long b = std::stol(tok.substr(dots + 2));
      for (long v = a; v <= b; ++v) out.push_back(v);
    }
  }
  if (out.empty()) throw pdtp::UsageError("empty integer list: " + text);
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& tok : split(text, ','))
    if (!tok.empty()) out.push_back(std::stod(tok));
  if (out.empty()) throw pdtp::UsageError("empty list: " + text);
  return out;
}

// "log:0.01..100:64" or "lin:0..5:11"
std::vector<double> parse_t_grid(const std::string& text) {
  auto parts = split(text, ':');
  if (parts.size() != 3)
    throw pdtp::UsageError("t-grid must look like log:a..b:N or lin:a..b:N");
  auto dots = parts[1].find("..");
  if (dots == std::string::npos)
    throw pdtp::UsageError("t-grid range must look like a..b");
  double a = std::stod(parts[1].substr(0, dots));
  double b = std::stod(parts[1].substr(dots + 2));
  long n = std::stol(parts[2]);
  if (n < 2 || !(b > a)) throw pdtp::UsageError("bad t-grid: " + text);
  std::vector<double> out(n);
  if (parts[0] == "log") {
    if (!(a > 0)) throw pdtp::UsageError("log grid needs a > 0");
    double la = std::log(a), lb = std::log(b);
    for (long i = 0; i < n; ++i)
      out[i] = std::exp(la + (lb - la) * i / (n - 1));
  } else if (parts[0] == "lin") {
    for (long i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1);
  } else {
    throw pdtp::UsageError("t-grid kind must be log or lin");
  }
  return out;
}

counting::Route parse_route(const std::string& r) {
  if (r == "closed-form") return counting::Route::kClosedForm;
  if (r == "oracle") return counting::Route::kOracle;
  if (r == "auto") return counting::Route::kAuto;
  throw pdtp::UsageError("route must be closed-form, oracle or auto");
}

// ----------------------------------------------------------------------
// option layering: defaults < env (PDTP_*) < --config file < flags
// ----------------------------------------------------------------------

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "alpha",  "nu",     "xi",      "xi0",    "t",       "t-max",
      "t-list", "t-grid", "n",       "n-list", "mode",    "h-list",
      "graph",  "start",  "seed",    "walkers", "eps-tail", "route",
      "threads", "format", "output", "matrix-at"};
  return keys;
}

std::string env_name(const std::string& key) {
  std::string out = "PDTP_";
  for (char c : key) out.push_back(c == '-' ? '_' : std::toupper(c));
  return out;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pdtp::UsageError("cannot open config file: " + path);
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto strip = [](std::string s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.pop_back();
      std::size_t b = 0;
      while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
      return s.substr(b);
    };
    std::string k = strip(line.substr(0, eq));
    std::string v = strip(line.substr(eq + 1));
    if (!k.empty() && k != "command") out[k] = v;
  }
  return out;
}

// Rebuild argv as [prog, cmd, <env pairs>, <config pairs>, <user args>],
// every option taking the last occurrence, so flags win over the config
// file which wins over the environment.
std::vector<std::string> weave_args(int argc, char** argv) {
  std::vector<std::string> user(argv + 1, argv + argc);
  std::string cmd;
  std::size_t cmd_pos = 0;
  for (std::size_t i = 0; i < user.size(); ++i) {
    if (!user[i].empty() && user[i][0] != '-') {
      cmd = user[i];
      cmd_pos = i;
      break;
    }
  }
  std::vector<std::string> out;
  if (cmd.empty()) return user;  // help / error paths

  std::map<std::string, std::string> layered;
  for (const auto& key : known_keys())
    if (const char* v = std::getenv(env_name(key).c_str())) layered[key] = v;

  // config file: --config <path> or --config=<path>, also via PDTP_CONFIG
  std::string config_path;
  if (const char* v = std::getenv("PDTP_CONFIG")) config_path = v;
  for (std::size_t i = 0; i < user.size(); ++i) {
    if (user[i] == "--config" && i + 1 < user.size())
      config_path = user[i + 1];
    else if (user[i].rfind("--config=", 0) == 0)
      config_path = user[i].substr(9);
  }
  if (!config_path.empty())
    for (auto& [k, v] : read_config_file(config_path)) layered[k] = v;

  out.insert(out.end(), user.begin(), user.begin() + cmd_pos + 1);
  for (auto& [k, v] : layered) {
    out.push_back("--" + k);
    out.push_back(v);
  }
  out.insert(out.end(), user.begin() + cmd_pos + 1, user.end());
  return out;
}

// ----------------------------------------------------------------------
// output writing
// ----------------------------------------------------------------------

struct Table {
  std::string command;
  std::vector<std::pair<std::string, std::string>> header;  // echoed config
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(std::ostream& out, const Table& t) {
  out << "# pdtp " << pdtp::kVersion << " schema=" << pdtp::kOutputSchema
      << "\n";
  out << "# command=" << t.command << "\n";
  for (const auto& [k, v] : t.header) out << "# " << k << "=" << v << "\n";
  out << "# columns=";
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    out << (i ? "," : "") << t.columns[i];
  out << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

void write_json(std::ostream& out, const Table& t) {
  nlohmann::ordered_json j;
  j["schema"] = pdtp::kOutputSchema;
  j["version"] = pdtp::kVersion;
  j["command"] = t.command;
  nlohmann::ordered_json params;
  for (const auto& [k, v] : t.header) params[k] = v;
  j["params"] = params;
  j["columns"] = t.columns;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) rows.push_back(row);
  j["rows"] = rows;
  out << j.dump(2) << "\n";
}

void emit(const Table& t, const std::string& output_path,
          const std::string& format) {
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!output_path.empty()) {
    file.open(output_path, std::ios::binary);
    if (!file)
      throw pdtp::UsageError("cannot open output file: " + output_path);
    out = &file;
  }
  if (format == "csv")
    write_csv(*out, t);
  else if (format == "json")
    write_json(*out, t);
  else
    throw pdtp::UsageError("format must be csv or json");
}

// ----------------------------------------------------------------------
// shared option bundle
// ----------------------------------------------------------------------

struct Options {
  double alpha = 0.5, nu = 1.0, xi = 0.5, xi0 = 1.0;
  long t = 8;
  long t_max = 16;
  std::string t_list = "1,4,16";
  std::string t_grid = "log:0.01..100:64";
  std::string n = "0";
  std::string h_list = "0.2,0.1,0.05,0.025";
  std::string mode = "state";
  std::string graph;
  int start = 0;
  std::uint64_t seed = 1;
  long walkers = 100000;
  double eps_tail = 1e-6;
  std::string route = "closed-form";
  int threads = 0;
  std::string format = "csv";
  std::string output;
  long matrix_at = -1;
  std::string config;  // consumed during weaving; registered for --help
};

void add_common(CLI::App* cmd, Options& o) {
  auto last = CLI::MultiOptionPolicy::TakeLast;
  cmd->add_option("--format", o.format, "output format: csv or json")
      ->multi_option_policy(last);
  cmd->add_option("--output", o.output, "output path (default stdout)")
      ->multi_option_policy(last);
  cmd->add_option("--config", o.config,
                  "flat key=value file with the same keys as the flags "
                  "(flags win)")
      ->multi_option_policy(last);
}

PdtpParams discrete_params(const Options& o) {
  return PdtpParams(o.alpha, o.nu, o.xi);
}

void echo_discrete(Table& t, const Options& o) {
  t.header.emplace_back("alpha", fmt17(o.alpha));
  t.header.emplace_back("nu", fmt17(o.nu));
  t.header.emplace_back("xi", fmt17(o.xi));
}

void echo_ct(Table& t, const Options& o) {
  t.header.emplace_back("alpha", fmt17(o.alpha));
  t.header.emplace_back("nu", fmt17(o.nu));
  t.header.emplace_back("xi0", fmt17(o.xi0));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prabhakar discrete-time counting process toolkit"};
  app.require_subcommand(0, 1);
  Options o;
  auto last = CLI::MultiOptionPolicy::TakeLast;

  // ---- pmf ----
  CLI::App* pmf = app.add_subcommand(
      "pmf", "inter-arrival pmf theta(t) on t = 0..t-max");
  pmf->add_option("--alpha", o.alpha)->multi_option_policy(last);
  pmf->add_option("--nu", o.nu)->multi_option_policy(last);
  pmf->add_option("--xi", o.xi)->multi_option_policy(last);
  pmf->add_option("--t-max", o.t_max)->multi_option_policy(last);
  pmf->add_option("--route", o.route, "closed-form | oracle | auto")
      ->multi_option_policy(last);
  add_common(pmf, o);

  // ---- states ----
  CLI::App* states = app.add_subcommand(
      "states", "state probabilities Phi(n, t) for n = 0..t at fixed t");
  states->add_option("--alpha", o.alpha)->multi_option_policy(last);
  states->add_option("--nu", o.nu)->multi_option_policy(last);
  states->add_option("--xi", o.xi)->multi_option_policy(last);
  states->add_option("--t", o.t)->multi_option_policy(last);
  states->add_option("--route", o.route)->multi_option_policy(last);
  add_common(states, o);

  // ---- ct-states ----
  CLI::App* ct_states = app.add_subcommand(
      "ct-states", "continuous-limit state probabilities on a time grid");
  ct_states->add_option("--alpha", o.alpha)->multi_option_policy(last);
  ct_states->add_option("--nu", o.nu)->multi_option_policy(last);
  ct_states->add_option("--xi0", o.xi0)->multi_option_policy(last);
  ct_states->add_option("--n", o.n, "states, e.g. 1..7 or 0,2,5")
      ->multi_option_policy(last);
  ct_states->add_option("--t-grid", o.t_grid, "log:a..b:N or lin:a..b:N")
      ->multi_option_policy(last);
  add_common(ct_states, o);

  // ---- tail ----
  CLI::App* tail = app.add_subcommand(
      "tail", "long-time power-law asymptote (alpha < 1)");
  tail->add_option("--alpha", o.alpha)->multi_option_policy(last);
  tail->add_option("--nu", o.nu)->multi_option_policy(last);
  tail->add_option("--xi", o.xi)->multi_option_policy(last);
  tail->add_option("--mode", o.mode, "state | interarrival")
      ->multi_option_policy(last);
  tail->add_option("--t-grid", o.t_grid)->multi_option_policy(last);
  add_common(tail, o);

  // ---- limit-probe ----
  CLI::App* probe = app.add_subcommand(
      "limit-probe",
      "well-scaled continuous-limit probe over a list of step lengths");
  probe->add_option("--alpha", o.alpha)->multi_option_policy(last);
  probe->add_option("--nu", o.nu)->multi_option_policy(last);
  probe->add_option("--xi0", o.xi0)->multi_option_policy(last);
  probe->add_option("--n", o.n)->multi_option_policy(last);
  probe->add_option("--t", o.t, "continuous time of the probe")
      ->multi_option_policy(last);
  probe->add_option("--h-list", o.h_list)->multi_option_policy(last);
  add_common(probe, o);

  // ---- walk ----
  CLI::App* walk = app.add_subcommand(
      "walk", "exact subordinated-walk occupation probabilities");
  walk->add_option("--graph", o.graph, "edge-list file")->multi_option_policy(last);
  walk->add_option("--alpha", o.alpha)->multi_option_policy(last);
  walk->add_option("--nu", o.nu)->multi_option_policy(last);
  walk->add_option("--xi", o.xi)->multi_option_policy(last);
  walk->add_option("--t-max", o.t_max)->multi_option_policy(last);
  walk->add_option("--start", o.start)->multi_option_policy(last);
  walk->add_option("--route", o.route)->multi_option_policy(last);
  walk->add_option("--matrix-at", o.matrix_at,
                   "emit the full transition matrix P(t) at this time "
                   "instead of the start-row table")
      ->multi_option_policy(last);
  add_common(walk, o);

  // ---- simulate ----
  CLI::App* sim = app.add_subcommand(
      "simulate",
      "seeded Monte Carlo ensemble vs the analytic law (counting states, "
      "or node occupation when --graph is given)");
  sim->add_option("--alpha", o.alpha)->multi_option_policy(last);
  sim->add_option("--nu", o.nu)->multi_option_policy(last);
  sim->add_option("--xi", o.xi)->multi_option_policy(last);
  sim->add_option("--t-list", o.t_list)->multi_option_policy(last);
  sim->add_option("--graph", o.graph)->multi_option_policy(last);
  sim->add_option("--start", o.start)->multi_option_policy(last);
  sim->add_option("--seed", o.seed)->multi_option_policy(last);
  sim->add_option("--walkers", o.walkers)->multi_option_policy(last);
  sim->add_option("--eps-tail", o.eps_tail)->multi_option_policy(last);
  sim->add_option("--threads", o.threads,
                  "worker threads (0 = hardware); never affects output bytes")
      ->multi_option_policy(last);
  add_common(sim, o);

  std::vector<std::string> woven;
  try {
    woven = weave_args(argc, argv);
  } catch (const pdtp::Error& e) {
    std::cerr << R"({"error":{"type":"UsageError","message":")" << e.what()
              << "\"}}\n";
    return 1;
  }
  std::vector<const char*> cargs;
  cargs.push_back(argv[0]);
  for (const auto& s : woven) cargs.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    EvalOptions opts;
    Table out;

    if (pmf->parsed()) {
      out.command = "pmf";
      PdtpParams p = discrete_params(o);
      echo_discrete(out, o);
      out.header.emplace_back("t-max", std::to_string(o.t_max));
      out.header.emplace_back("route", o.route);
      out.columns = {"t", "theta"};
      counting::Route route = parse_route(o.route);
      for (long t = 0; t <= o.t_max; ++t)
        out.rows.push_back({std::to_string(t),
                            fmt17(counting::interarrival_pmf(p, t, route, opts))});
    } else if (states->parsed()) {
      out.command = "states";
      PdtpParams p = discrete_params(o);
      echo_discrete(out, o);
      out.header.emplace_back("t", std::to_string(o.t));
      out.header.emplace_back("route", o.route);
      out.columns = {"n", "probability"};
      auto dist =
          counting::state_distribution(p, o.t, parse_route(o.route), opts);
      for (long n = 0; n <= o.t; ++n)
        out.rows.push_back({std::to_string(n), fmt17(dist.probs[n])});
    } else if (ct_states->parsed()) {
      out.command = "ct-states";
      CtParams ct(o.alpha, o.nu, o.xi0);
      echo_ct(out, o);
      out.header.emplace_back("n", o.n);
      out.header.emplace_back("t-grid", o.t_grid);
      out.columns = {"n", "t", "probability"};
      auto ns = parse_long_list(o.n);
      auto ts = parse_t_grid(o.t_grid);
      for (long n : ns)
        for (double t : ts)
          out.rows.push_back({std::to_string(n), fmt17(t),
                              fmt17(counting::ct_state_prob(ct, n, t, opts))});
    } else if (tail->parsed()) {
      out.command = "tail";
      PdtpParams p = discrete_params(o);
      echo_discrete(out, o);
      out.header.emplace_back("mode", o.mode);
      out.header.emplace_back("t-grid", o.t_grid);
      out.columns = {"t", "asymptote"};
      counting::TailMode mode;
      if (o.mode == "state")
        mode = counting::TailMode::kState;
      else if (o.mode == "interarrival")
        mode = counting::TailMode::kInterarrival;
      else
        throw pdtp::UsageError("mode must be state or interarrival");
      for (double t : parse_t_grid(o.t_grid))
        out.rows.push_back({fmt17(t),
                            fmt17(counting::tail_asymptote(p, mode, t))});
    } else if (probe->parsed()) {
      out.command = "limit-probe";
      CtParams ct(o.alpha, o.nu, o.xi0);
      echo_ct(out, o);
      out.header.emplace_back("n", o.n);
      out.header.emplace_back("t", std::to_string(o.t));
      out.header.emplace_back("h-list", o.h_list);
      out.columns = {"h",        "t_discrete", "rounding_residue",
                     "xi_scaled", "oracle_route", "discrete",
                     "ct",       "gap"};
      auto hs = parse_double_list(o.h_list);
      long n = parse_long_list(o.n).at(0);
      for (const auto& rec : counting::scaled_limit_probe(
               ct, n, static_cast<double>(o.t), hs, opts))
        out.rows.push_back({fmt17(rec.h), std::to_string(rec.t_discrete),
                            fmt17(rec.rounding_residue), fmt17(rec.xi_scaled),
                            rec.oracle_route ? "1" : "0",
                            fmt17(rec.discrete_value), fmt17(rec.ct_value),
                            fmt17(rec.gap)});
    } else if (walk->parsed()) {
      out.command = "walk";
      if (o.graph.empty()) throw pdtp::UsageError("walk: --graph is required");
      PdtpParams p = discrete_params(o);
      graphwalk::Graph g = graphwalk::Graph::load_edge_list(o.graph);
      echo_discrete(out, o);
      out.header.emplace_back("graph", o.graph);
      out.header.emplace_back("start", std::to_string(o.start));
      out.header.emplace_back("route", o.route);
      counting::Route route = parse_route(o.route);
      if (o.matrix_at >= 0) {
        out.header.emplace_back("matrix-at", std::to_string(o.matrix_at));
        auto pm = graphwalk::dtrw_matrix(g, p, o.matrix_at, route, opts);
        std::ostringstream body;
        graphwalk::write_matrix_csv(body, pm.m);
        // raw row-major matrix block after the echoed header
        std::ostream* os = &std::cout;
        std::ofstream file;
        if (!o.output.empty()) {
          file.open(o.output, std::ios::binary);
          if (!file)
            throw pdtp::UsageError("cannot open output file: " + o.output);
          os = &file;
        }
        Table hdr = out;
        hdr.columns = {};
        *os << "# pdtp " << pdtp::kVersion << " schema=" << pdtp::kOutputSchema
            << "\n# command=walk\n";
        for (const auto& [k, v] : hdr.header) *os << "# " << k << "=" << v << "\n";
        *os << body.str();
        return 0;
      }
      out.header.emplace_back("t-max", std::to_string(o.t_max));
      out.columns = {"t", "node", "probability"};
      auto mats = graphwalk::dtrw_matrices(g, p, o.t_max, route, opts);
      for (long t = 0; t <= o.t_max; ++t)
        for (int j = 0; j < g.size(); ++j)
          out.rows.push_back({std::to_string(t), std::to_string(j),
                              fmt17(mats[t].m(o.start, j))});
    } else if (sim->parsed()) {
      out.command = "simulate";
      PdtpParams p = discrete_params(o);
      echo_discrete(out, o);
      out.header.emplace_back("t-list", o.t_list);
      out.header.emplace_back("seed", std::to_string(o.seed));
      out.header.emplace_back("walkers", std::to_string(o.walkers));
      out.header.emplace_back("eps-tail", fmt17(o.eps_tail));
      if (!o.graph.empty()) {
        out.header.emplace_back("graph", o.graph);
        out.header.emplace_back("start", std::to_string(o.start));
      }
      out.columns = {"t", "n", "empirical", "analytic", "wilson_halfwidth"};
      auto times = parse_long_list(o.t_list);
      auto sampler = montecarlo::build_sampler(p, o.eps_tail);
      montecarlo::EnsembleConfig cfg{o.seed, o.walkers, o.threads};
      if (o.graph.empty()) {
        auto hists = montecarlo::counting_ensemble(sampler, times, cfg);
        for (std::size_t i = 0; i < times.size(); ++i) {
          auto analytic = counting::state_distribution(
              p, times[i], counting::Route::kAuto, opts);
          for (long n = 0; n <= times[i]; ++n)
            out.rows.push_back({std::to_string(times[i]), std::to_string(n),
                                fmt17(hists[i].freq[n]),
                                fmt17(analytic.probs[n]),
                                fmt17(hists[i].wilson_halfwidth[n])});
        }
      } else {
        graphwalk::Graph g = graphwalk::Graph::load_edge_list(o.graph);
        auto hists =
            montecarlo::walk_ensemble(g, sampler, times, o.start, cfg);
        for (std::size_t i = 0; i < times.size(); ++i) {
          auto analytic = graphwalk::occupation_row(
              g, p, times[i], o.start, counting::Route::kAuto, opts);
          for (int j = 0; j < g.size(); ++j)
            out.rows.push_back({std::to_string(times[i]), std::to_string(j),
                                fmt17(hists[i].freq[j]), fmt17(analytic[j]),
                                fmt17(hists[i].wilson_halfwidth[j])});
        }
      }
    } else {
      std::cout << app.help() << "\n";
      return 0;
    }

    emit(out, o.output, o.format);
    return 0;
  } catch (const pdtp::Error& e) {
    const char* type = "Error";
    if (dynamic_cast<const pdtp::BranchError*>(&e)) type = "BranchError";
    else if (dynamic_cast<const pdtp::DomainError*>(&e)) type = "DomainError";
    else if (dynamic_cast<const pdtp::UsageError*>(&e)) type = "UsageError";
    else if (dynamic_cast<const pdtp::IntegrityError*>(&e)) type = "IntegrityError";
    else if (dynamic_cast<const pdtp::ConvergenceError*>(&e)) type = "ConvergenceError";
    nlohmann::ordered_json err;
    err["error"]["type"] = type;
    err["error"]["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::ordered_json err;
    err["error"]["type"] = "Error";
    err["error"]["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
}
