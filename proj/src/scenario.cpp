#include "gsw/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/version.hpp>
#include <json.hpp>

namespace gsw {
namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using Json = nlohmann::ordered_json;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  return parts;
}

double parse_number(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError(key + ": '" + text + "' is not a finite number");
  return v;
}

// Accepts plain numbers and multiples of pi: "0.3", "pi", "pi/4", "3*pi/8".
double parse_angle(const std::string& text, const std::string& key) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  const auto at = t.find("pi");
  if (at == std::string::npos) return parse_number(t, key);
  double factor = 1.0;
  const std::string head = trim(t.substr(0, at));
  if (!head.empty()) {
    if (head.back() != '*') throw ConfigError(key + ": cannot parse angle '" + text + "'");
    factor = parse_number(head.substr(0, head.size() - 1), key);
  }
  const std::string tail = trim(t.substr(at + 2));
  double divisor = 1.0;
  if (!tail.empty()) {
    if (tail.front() != '/') throw ConfigError(key + ": cannot parse angle '" + text + "'");
    divisor = parse_number(tail.substr(1), key);
    if (divisor == 0.0) throw ConfigError(key + ": division by zero in '" + text + "'");
  }
  return factor * std::numbers::pi / divisor;
}

template <typename Int>
Int parse_integer(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  Int v{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) throw ConfigError(key + ": '" + text + "' is not a valid integer");
  return v;
}

bool parse_bool(const std::string& text, const std::string& key) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  throw ConfigError(key + ": '" + text + "' is not a boolean");
}

const std::map<std::string, std::vector<std::string>>& known_keys() {
  static const std::map<std::string, std::vector<std::string>> keys{
      {"geometry", {"N", "L"}},
      {"fields", {"n", "background", "init", "link_amplitude"}},
      {"schedule", {"alpha"}},
      {"solver", {"max_iter", "tol", "initial_step", "armijo", "backtrack", "step_floor", "low_amplitude_threshold", "require_convergence"}},
      {"run", {"seed", "output"}},
      {"analysis",
       {"delta", "delta_relative", "holder_inner", "holder_outer", "holder_min_r2", "loops", "multiplicities", "orientations", "mu_tolerance"}},
  };
  return keys;
}

void reject_unknown(const pt::ptree& tree) {
  const auto& keys = known_keys();
  for (const auto& [section, body] : tree) {
    const auto it = keys.find(section);
    if (it == keys.end()) throw ConfigError("unknown section [" + section + "]");
    if (!body.data().empty()) throw ConfigError("key '" + section + "' outside of any section");
    for (const auto& [key, value] : body) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        throw ConfigError("unknown key " + section + "." + key);
    }
  }
}

std::optional<std::string> lookup(const pt::ptree& tree, const std::string& key) {
  if (const auto v = tree.get_optional<std::string>(pt::ptree::path_type(key, '.'))) return trim(*v);
  return std::nullopt;
}

std::string require(const pt::ptree& tree, const std::string& key) {
  auto v = lookup(tree, key);
  if (!v || v->empty()) throw ConfigError("missing required key " + key);
  return *v;
}

fs::path resolve(const std::string& p, const fs::path& base) {
  fs::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

std::string resolve_source(const std::string& value, const std::vector<std::string>& keywords, const fs::path& base) {
  if (std::find(keywords.begin(), keywords.end(), value) != keywords.end()) return value;
  return resolve(value, base).string();
}

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
  std::vector<int> out;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) continue;
    out.push_back(parse_integer<int>(item, key));
  }
  return out;
}

AnalysisConfig parse_analysis(const pt::ptree& tree) {
  AnalysisConfig a;
  if (auto v = lookup(tree, "analysis.delta")) a.delta = parse_number(*v, "analysis.delta");
  if (auto v = lookup(tree, "analysis.delta_relative")) a.delta_relative = parse_number(*v, "analysis.delta_relative");
  if (auto v = lookup(tree, "analysis.holder_inner")) a.holder_inner = parse_number(*v, "analysis.holder_inner");
  if (auto v = lookup(tree, "analysis.holder_outer")) a.holder_outer = parse_number(*v, "analysis.holder_outer");
  if (auto v = lookup(tree, "analysis.holder_min_r2")) a.holder_min_r_squared = parse_number(*v, "analysis.holder_min_r2");
  if (auto v = lookup(tree, "analysis.mu_tolerance")) a.mu_tolerance = parse_number(*v, "analysis.mu_tolerance");
  if (auto v = lookup(tree, "analysis.loops")) {
    for (const auto& loop_text : split(*v, ';')) {
      if (loop_text.empty()) continue;
      std::vector<Index> loop;
      std::istringstream in(loop_text);
      std::string token;
      while (in >> token) loop.push_back(parse_integer<Index>(token, "analysis.loops"));
      a.loops.push_back(std::move(loop));
    }
  }
  if (auto v = lookup(tree, "analysis.multiplicities")) a.multiplicities = parse_int_list(*v, "analysis.multiplicities");
  if (auto v = lookup(tree, "analysis.orientations")) a.orientations = parse_int_list(*v, "analysis.orientations");
  return a;
}

void validate_analysis(const AnalysisConfig& a) {
  if (a.delta && !(*a.delta > 0.0)) throw ConfigError("analysis.delta = " + fmt17(*a.delta) + " violates delta > 0");
  if (!(a.delta_relative > 0.0)) throw ConfigError("analysis.delta_relative = " + fmt17(a.delta_relative) + " violates delta_relative > 0");
  if (!(a.holder_inner > 0.0)) throw ConfigError("analysis.holder_inner = " + fmt17(a.holder_inner) + " violates holder_inner > 0");
  if (!(a.holder_outer > a.holder_inner)) throw ConfigError("analysis.holder_outer = " + fmt17(a.holder_outer) + " violates holder_outer > holder_inner");
  if (!(a.mu_tolerance > 0.0)) throw ConfigError("analysis.mu_tolerance violates mu_tolerance > 0");
  for (int o : a.orientations)
    if (o != 1 && o != -1 && o != 0) throw ConfigError("analysis.orientations entries must be 1, -1 or 0");
  for (int m : a.multiplicities)
    if (m < 1) throw ConfigError("analysis.multiplicities entries must be >= 1");
}

pt::ptree read_tree(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  reject_unknown(tree);
  return tree;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s;
}

// ---------------------------------------------------------------------------
// Run helpers

struct Clock {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); }
};

Snapshot load_input_snapshot(const std::string& path, const std::string& key) {
  try {
    return read_snapshot(path);
  } catch (const SnapshotError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

BackgroundFieldd make_background(const RunConfig& c, const LatticeGeometry& g) {
  if (c.background == "identity") return BackgroundFieldd::identity(g, c.rank);
  auto snap = load_input_snapshot(c.background, "fields.background");
  if (!(snap.geometry() == g) || snap.b.rank() != c.rank) throw ConfigError("fields.background: snapshot geometry or rank does not match the config");
  return std::move(snap.b);
}

InitialState make_initial_state(const RunConfig& c, const LatticeGeometry& g) {
  if (c.init == "random") return random_initial_state(g, c.rank, c.link_amplitude, *c.seed);
  if (c.init == "constant") return {GaugeFieldd(g), constant_solution(g, c.rank, Quaterniond::identity())};
  auto snap = load_input_snapshot(c.init, "fields.init");
  if (!(snap.geometry() == g) || snap.psi.rank() != c.rank) throw ConfigError("fields.init: snapshot geometry or rank does not match the config");
  return {std::move(snap.a), std::move(snap.psi)};
}

Json versions() {
  return {{"gsw", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." + std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." + std::to_string(BOOST_VERSION % 100)},
          {"compiler", __VERSION__},
          {"cxx_standard", __cplusplus}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& c, Json result, const std::vector<std::string>& artifacts,
                    double wall) {
  const std::string echo = format_config(c);
  write_text(dir / "config.ini", echo);
  Json m;
  m["tool"] = "gsw";
  m["command"] = command;
  m["versions"] = versions();
  m["config_file"] = "config.ini";
  m["config"] = echo;
  m["seed"] = *c.seed;
  m["result"] = std::move(result);
  Json list = Json::array();
  for (const auto& a : artifacts) list.push_back(a);
  list.push_back("config.ini");
  m["artifacts"] = std::move(list);
  m["wall_seconds"] = wall;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

fs::path prepare_output(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.output, ec);
  if (ec) throw ConfigError("run.output: cannot create " + c.output.string() + " (" + ec.message() + ")");
  return c.output;
}

double zero_threshold(const AnalysisConfig& a, const Eigen::VectorXd& amp) {
  if (a.delta) return *a.delta;
  const double d = a.delta_relative * (amp.size() ? amp.maxCoeff() : 0.0);
  return d > 0.0 ? d : a.delta_relative;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Json holder_json(const ZeroSetReport& r) {
  if (!r.holder) return nullptr;
  return {{"exponent", r.holder->exponent}, {"r_squared", r.holder->r_squared}, {"samples", r.holder->samples}, {"accepted", r.holder->accepted}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

RunConfig parse_config(std::istream& in, const fs::path& base_dir) {
  const pt::ptree tree = read_tree(in);
  RunConfig c;
  c.sites_per_axis = parse_integer<int>(require(tree, "geometry.N"), "geometry.N");
  c.length = parse_number(require(tree, "geometry.L"), "geometry.L");
  c.rank = parse_integer<int>(require(tree, "fields.n"), "fields.n");
  if (auto v = lookup(tree, "fields.background")) c.background = resolve_source(*v, {"identity"}, base_dir);
  if (auto v = lookup(tree, "fields.init")) c.init = resolve_source(*v, {"random", "constant"}, base_dir);
  if (auto v = lookup(tree, "fields.link_amplitude")) c.link_amplitude = parse_number(*v, "fields.link_amplitude");
  for (const auto& item : split(require(tree, "schedule.alpha"), ',')) c.schedule.push_back(parse_angle(item, "schedule.alpha"));

  auto& s = c.solver;
  if (auto v = lookup(tree, "solver.max_iter")) s.max_iter = parse_integer<int>(*v, "solver.max_iter");
  if (auto v = lookup(tree, "solver.tol")) s.tol = parse_number(*v, "solver.tol");
  if (auto v = lookup(tree, "solver.initial_step")) s.initial_step = parse_number(*v, "solver.initial_step");
  if (auto v = lookup(tree, "solver.armijo")) s.armijo = parse_number(*v, "solver.armijo");
  if (auto v = lookup(tree, "solver.backtrack")) s.backtrack = parse_number(*v, "solver.backtrack");
  if (auto v = lookup(tree, "solver.step_floor")) s.step_floor = parse_number(*v, "solver.step_floor");
  if (auto v = lookup(tree, "solver.low_amplitude_threshold")) s.low_amplitude_threshold = parse_number(*v, "solver.low_amplitude_threshold");
  if (auto v = lookup(tree, "solver.require_convergence")) s.require_convergence = parse_bool(*v, "solver.require_convergence");

  if (auto v = lookup(tree, "run.seed"); v && !v->empty()) c.seed = parse_integer<std::uint64_t>(*v, "run.seed");
  if (auto v = lookup(tree, "run.output"); v && !v->empty()) c.output = resolve(*v, base_dir);
  c.analysis = parse_analysis(tree);
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse_config(in, path.parent_path());
}

AnalysisConfig load_analysis_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  auto a = parse_analysis(read_tree(in));
  validate_analysis(a);
  return a;
}

void validate(const RunConfig& c) {
  if (c.sites_per_axis < 4) throw ConfigError("geometry.N = " + std::to_string(c.sites_per_axis) + " violates N >= 4");
  if (c.sites_per_axis > 1024) throw ConfigError("geometry.N = " + std::to_string(c.sites_per_axis) + " violates N <= 1024");
  if (!(c.length > 0.0)) throw ConfigError("geometry.L = " + fmt17(c.length) + " violates L > 0");
  if (c.rank < 1 || c.rank > 64) throw ConfigError("fields.n = " + std::to_string(c.rank) + " violates 1 <= n <= 64");
  if (!(c.link_amplitude >= 0.0)) throw ConfigError("fields.link_amplitude violates link_amplitude >= 0");
  if (c.init == "constant" && c.rank % 2 != 0) throw ConfigError("fields.init = constant needs an even n");
  if (c.schedule.empty()) throw ConfigError("schedule.alpha is empty");
  for (std::size_t i = 0; i < c.schedule.size(); ++i) {
    const double a = c.schedule[i];
    if (!(a >= 0.0 && a < std::numbers::pi / 2))
      throw ConfigError("schedule.alpha[" + std::to_string(i) + "] = " + fmt17(a) + " violates 0 <= alpha < pi/2");
    if (i > 0 && !(a < c.schedule[i - 1])) throw ConfigError("schedule.alpha[" + std::to_string(i) + "] = " + fmt17(a) + " violates strictly decreasing schedule");
  }
  const auto& s = c.solver;
  if (s.max_iter < 0) throw ConfigError("solver.max_iter violates max_iter >= 0");
  if (!(s.tol >= 0.0)) throw ConfigError("solver.tol violates tol >= 0");
  if (!(s.initial_step > 0.0)) throw ConfigError("solver.initial_step violates initial_step > 0");
  if (!(s.armijo > 0.0 && s.armijo < 1.0)) throw ConfigError("solver.armijo violates 0 < armijo < 1");
  if (!(s.backtrack > 0.0 && s.backtrack < 1.0)) throw ConfigError("solver.backtrack violates 0 < backtrack < 1");
  if (!(s.step_floor > 0.0)) throw ConfigError("solver.step_floor violates step_floor > 0");
  if (!(s.low_amplitude_threshold >= 0.0)) throw ConfigError("solver.low_amplitude_threshold violates low_amplitude_threshold >= 0");
  if (!c.seed) throw ConfigError("run.seed is required (set it in [run] or pass --seed)");
  if (c.output.empty()) throw ConfigError("run.output is required (set it in [run] or pass --out)");
  validate_analysis(c.analysis);
}

std::string format_config(const RunConfig& c) {
  std::ostringstream o;
  o << "[geometry]\nN = " << c.sites_per_axis << "\nL = " << fmt17(c.length) << "\n\n";
  o << "[fields]\nn = " << c.rank << "\nbackground = " << c.background << "\ninit = " << c.init << "\nlink_amplitude = " << fmt17(c.link_amplitude)
    << "\n\n";
  o << "[schedule]\nalpha = ";
  for (std::size_t i = 0; i < c.schedule.size(); ++i) o << (i ? ", " : "") << fmt17(c.schedule[i]);
  const auto& s = c.solver;
  o << "\n\n[solver]\nmax_iter = " << s.max_iter << "\ntol = " << fmt17(s.tol) << "\ninitial_step = " << fmt17(s.initial_step)
    << "\narmijo = " << fmt17(s.armijo) << "\nbacktrack = " << fmt17(s.backtrack) << "\nstep_floor = " << fmt17(s.step_floor)
    << "\nlow_amplitude_threshold = " << fmt17(s.low_amplitude_threshold) << "\nrequire_convergence = " << (s.require_convergence ? "true" : "false")
    << "\n\n";
  o << "[run]\nseed = " << (c.seed ? std::to_string(*c.seed) : std::string()) << "\noutput = " << c.output.string() << "\n\n";
  const auto& a = c.analysis;
  o << "[analysis]\n";
  if (a.delta) o << "delta = " << fmt17(*a.delta) << "\n";
  o << "delta_relative = " << fmt17(a.delta_relative) << "\nholder_inner = " << fmt17(a.holder_inner) << "\nholder_outer = " << fmt17(a.holder_outer)
    << "\nholder_min_r2 = " << fmt17(a.holder_min_r_squared) << "\nmu_tolerance = " << fmt17(a.mu_tolerance) << "\n";
  if (!a.loops.empty()) {
    o << "loops = ";
    for (std::size_t i = 0; i < a.loops.size(); ++i) {
      o << (i ? "; " : "");
      for (std::size_t j = 0; j < a.loops[i].size(); ++j) o << (j ? " " : "") << a.loops[i][j];
    }
    o << "\n";
  }
  if (!a.multiplicities.empty()) o << "multiplicities = " << join(a.multiplicities) << "\n";
  if (!a.orientations.empty()) o << "orientations = " << join(a.orientations) << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Commands

int cmd_solve(const RunConfig& c, CommandIo io) {
  validate(c);
  const Clock clock;
  const fs::path dir = prepare_output(c);
  const auto g = c.geometry();
  const auto b = make_background(c, g);
  const auto init = make_initial_state(c, g);
  const double alpha = c.schedule.front();

  std::ofstream csv(dir / "diagnostics.csv", std::ios::binary | std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write diagnostics.csv");
  csv << "iter,energy,step,min_amp\n";
  SolverOptions options = c.solver;
  options.callback = [&](const IterationInfo& info) {
    csv << info.iteration << ',' << fmt17(info.energy) << ',' << fmt17(info.step) << ',' << fmt17(info.min_amplitude) << '\n';
    if (!io.quiet && info.iteration % 1000 == 0)
      io.out << "iter " << info.iteration << "  energy " << fmt17(info.energy) << "  min|Psi| " << fmt17(info.min_amplitude) << '\n';
  };
  const auto report = solve(init.a, b, init.psi, alpha, options);
  csv.close();
  write_snapshot(dir / "snapshot.gsw", {alpha, report.a, report.psi, b});

  const bool failed = is_failure(report, c.solver);
  Json result{{"status", std::string(to_string(report.status))},
              {"failed", failed},
              {"alpha", alpha},
              {"iterations", report.iterations},
              {"energy", report.energy_trace.back()},
              {"residual_norm", std::sqrt(2.0 * report.energy_trace.back())},
              {"min_amplitude", report.min_amplitude},
              {"low_amplitude", report.low_amplitude},
              {"solver_seconds", report.wall_seconds}};
  write_manifest(dir, "solve", c, std::move(result), {"snapshot.gsw", "diagnostics.csv", "manifest.json"}, clock.seconds());

  if (!io.quiet)
    io.out << "solve: " << to_string(report.status) << " after " << report.iterations << " iterations, energy " << fmt17(report.energy_trace.back())
           << '\n';
  if (report.low_amplitude) io.err << "WARNING: min|Psi| = " << fmt17(report.min_amplitude) << " is below the low-amplitude threshold\n";
  if (failed) {
    io.err << "ERROR: solver failure (" << to_string(report.status) << ") at alpha = " << fmt17(alpha) << '\n';
    return exit_code::solver_failure;
  }
  return exit_code::ok;
}

int cmd_continue(const RunConfig& c, CommandIo io) {
  validate(c);
  const Clock clock;
  const fs::path dir = prepare_output(c);
  const auto g = c.geometry();
  const auto b = make_background(c, g);
  const auto init = make_initial_state(c, g);

  SolverOptions options = c.solver;
  const auto result = continue_alpha(c.schedule, init.a, b, init.psi, options);

  std::vector<std::string> artifacts;
  std::ofstream csv(dir / "summary.csv", std::ios::binary | std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write summary.csv");
  csv << "alpha,epsilon,energy,residual,min_amp,zero_cells\n";
  std::vector<std::pair<double, double>> curve;
  Json rungs = Json::array();
  for (std::size_t i = 0; i < result.rungs.size(); ++i) {
    const auto& r = result.rungs[i];
    char name[32];
    std::snprintf(name, sizeof name, "rung_%03zu.gsw", i);
    write_snapshot(dir / name, {r.alpha, r.a, r.psi, b});
    artifacts.emplace_back(name);
    const auto amp = site_amplitude(r.psi);
    const auto cells = zero_set(g, amp, zero_threshold(c.analysis, amp)).cells.size();
    csv << fmt17(r.alpha) << ',' << fmt17(r.epsilon) << ',' << fmt17(r.energy) << ',' << fmt17(r.residual_norm) << ',' << fmt17(r.min_amplitude) << ','
        << cells << '\n';
    curve.emplace_back(r.epsilon, r.min_amplitude);
    rungs.push_back({{"alpha", r.alpha},
                     {"epsilon", r.epsilon},
                     {"status", std::string(to_string(r.status))},
                     {"iterations", r.iterations},
                     {"energy", r.energy},
                     {"min_amplitude", r.min_amplitude},
                     {"snapshot", name}});
    if (!io.quiet)
      io.out << "rung " << i << ": alpha " << fmt17(r.alpha) << "  " << to_string(r.status) << " after " << r.iterations << " iterations, energy "
             << fmt17(r.energy) << "  min|Psi| " << fmt17(r.min_amplitude) << '\n';
  }
  csv.close();
  artifacts.emplace_back("summary.csv");
  write_line_chart_svg(dir / "min_amplitude.svg", curve, "min |Psi| along the continuation", "epsilon = tan(alpha)", "min |Psi|");
  artifacts.emplace_back("min_amplitude.svg");

  Json summary{{"completed", result.completed()}, {"rungs", std::move(rungs)}};
  if (result.failed) {
    summary["failed_rung"] = {{"index", result.rungs.size()},
                              {"alpha", result.failed->alpha},
                              {"status", std::string(to_string(result.failed->status))},
                              {"energy", result.failed->energy}};
  }
  artifacts.emplace_back("manifest.json");
  write_manifest(dir, "continue", c, std::move(summary), artifacts, clock.seconds());

  if (result.failed) {
    io.err << "ERROR: solver failure (" << to_string(result.failed->status) << ") at rung " << result.rungs.size() << ", alpha = "
           << fmt17(result.failed->alpha) << '\n';
    return result.rungs.empty() ? exit_code::solver_failure : exit_code::partial_continuation;
  }
  return exit_code::ok;
}

ZeroSetReport analyze_state(const Snapshot& snap, const AnalysisConfig& analysis, std::vector<std::string>* notes) {
  auto note = [&](std::string text) {
    if (notes) notes->push_back(std::move(text));
  };
  const auto& g = snap.geometry();
  const Eigen::VectorXd amp = site_amplitude(snap.psi);
  const double delta = zero_threshold(analysis, amp);
  auto report = zero_set(g, amp, delta);

  if (!report.empty()) {
    HolderOptions ho{analysis.holder_inner * g.spacing(), analysis.holder_outer * g.spacing(), analysis.holder_min_r_squared};
    try {
      report.holder = holder_exponent(g, amp, report, ho);
    } catch (const std::domain_error& e) {
      note(std::string("holder: ") + e.what());
    }
  }

  for (std::size_t i = 0; i < analysis.loops.size(); ++i) {
    if (snap.psi.rank() != 2) {
      note("monodromy: loop " + std::to_string(i) + " skipped, needs n = 2");
      continue;
    }
    try {
      report.monodromies.push_back({static_cast<int>(i), z2_monodromy(snap.psi, analysis.loops[i], {delta})});
    } catch (const std::exception& e) {
      note("monodromy: loop " + std::to_string(i) + ": " + e.what());
    }
  }

  if (!analysis.orientations.empty()) {
    std::vector<ComponentOrientation> data(report.components.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (i < analysis.multiplicities.size()) data[i].multiplicity = analysis.multiplicities[i];
      if (i < analysis.orientations.size()) data[i].orientation = analysis.orientations[i];
    }
    if (analysis.orientations.size() != data.size())
      note("class: " + std::to_string(analysis.orientations.size()) + " orientations given for " + std::to_string(data.size()) + " components");
    try {
      report.homology_class = zero_set_class(report, data);
    } catch (const std::domain_error& e) {
      note(std::string("class: ") + e.what());
    }
  }
  return report;
}

int cmd_analyze(const fs::path& snapshot, const AnalysisConfig& analysis, const fs::path& out_dir, CommandIo io) {
  validate_analysis(analysis);
  const Clock clock;
  Snapshot snap = [&] {
    try {
      return read_snapshot(snapshot);
    } catch (const SnapshotError& e) {
      io.err << "ERROR: " << e.what() << '\n';
      throw;
    }
  }();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw ConfigError("--out: cannot create " + out_dir.string() + " (" + ec.message() + ")");

  std::vector<std::string> notes;
  const auto report = analyze_state(snap, analysis, &notes);
  const auto& g = snap.geometry();

  Json doc;
  doc["tool"] = "gsw";
  doc["version"] = kVersion;
  doc["snapshot"] = snapshot.string();
  doc["geometry"] = {{"N", g.size()}, {"L", g.length()}, {"h", g.spacing()}};
  doc["n"] = snap.psi.rank();
  doc["alpha"] = snap.alpha;
  doc["threshold"] = report.threshold;
  doc["min_amplitude"] = site_amplitude(snap.psi).minCoeff();
  doc["zero_cells"] = report.cells.size();
  Json comps = Json::array();
  for (std::size_t i = 0; i < report.components.size(); ++i) {
    const auto& comp = report.components[i];
    Json cells = Json::array();
    for (CellIndex cell : comp.cells) {
      const auto x = g.coords(cell);
      cells.push_back({x[0], x[1], x[2]});
    }
    comps.push_back({{"id", i},
                     {"size", comp.cells.size()},
                     {"period", {comp.period[0], comp.period[1], comp.period[2]}},
                     {"multiply_wrapping", comp.multiply_wrapping},
                     {"cells", std::move(cells)}});
  }
  doc["components"] = std::move(comps);
  doc["holder"] = holder_json(report);
  Json mono = Json::array();
  for (const auto& m : report.monodromies) mono.push_back({{"loop", m.loop_id}, {"sign", m.sign}});
  doc["monodromy"] = std::move(mono);
  doc["homology_class"] = report.homology_class ? Json{(*report.homology_class)[0], (*report.homology_class)[1], (*report.homology_class)[2]} : Json(nullptr);
  Json flux = Json::array();
  bool flux_consistent = true;
  for (Plane p : kPlanes) {
    const int f0 = chern_flux(snap.a, p, 0);
    for (int slice = 1; slice < g.size(); ++slice) flux_consistent = flux_consistent && chern_flux(snap.a, p, slice) == f0;
    flux.push_back(f0);
  }
  doc["chern_flux"] = std::move(flux);
  doc["chern_flux_slice_independent"] = flux_consistent;
  doc["notes"] = notes;
  doc["wall_seconds"] = clock.seconds();
  write_text(out_dir / "zero_set_report.json", doc.dump(2) + "\n");

  if (!io.quiet) {
    io.out << "analyze: " << report.cells.size() << " zero cells in " << report.components.size() << " components (delta = " << fmt17(report.threshold)
           << ")\n";
    for (const auto& n : notes) io.out << "  note: " << n << '\n';
  }
  return exit_code::ok;
}

int cmd_check(const CheckOptions& options, CommandIo io) {
  const auto results = run_checks(options);
  char line[160];
  std::snprintf(line, sizeof line, "%-34s %-24s %-12s %s\n", "check", "measured", "tolerance", "result");
  io.out << line;
  bool all = true;
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-34s %-24.17g %-12.3g %s\n", r.name.c_str(), r.measured, r.tolerance, r.passed ? "PASS" : "FAIL");
    io.out << line;
    all = all && r.passed;
  }
  for (const auto& r : results)
    if (!r.passed) io.err << "ERROR: check failed: " << r.name << " (measured " << fmt17(r.measured) << ", tolerance " << fmt17(r.tolerance) << ")\n";
  return all ? exit_code::ok : exit_code::check_failed;
}

// ---------------------------------------------------------------------------
// SVG

void write_line_chart_svg(const fs::path& path, const std::vector<std::pair<double, double>>& points, const std::string& title,
                          const std::string& x_label, const std::string& y_label) {
  constexpr double width = 640, height = 420, left = 80, right = 30, top = 50, bottom = 60;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!points.empty()) {
    x0 = x1 = points.front().first;
    y0 = y1 = points.front().second;
    for (const auto& [x, y] : points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  auto pad = [](double& lo, double& hi) {
    if (hi - lo < 1e-300) {
      const double d = std::abs(lo) > 0 ? 0.1 * std::abs(lo) : 1.0;
      lo -= d;
      hi += d;
    }
  };
  pad(x0, x1);
  pad(y0, y1);
  const double pw = width - left - right, ph = height - top - bottom;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
    << "\">\n";
  o << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  o << "  <text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" << xml_escape(title) << "</text>\n";
  o << "  <g stroke=\"black\" stroke-width=\"1\">\n"
    << "    <line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph << "\"/>\n"
    << "    <line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\"/>\n"
    << "  </g>\n";
  o << "  <g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    o << "    <line x1=\"" << svg_num(sx(xv)) << "\" y1=\"" << top + ph << "\" x2=\"" << svg_num(sx(xv)) << "\" y2=\"" << top + ph + 5
      << "\" stroke=\"black\"/>\n";
    o << "    <text x=\"" << svg_num(sx(xv)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
    o << "    <line x1=\"" << left - 5 << "\" y1=\"" << svg_num(sy(yv)) << "\" x2=\"" << left << "\" y2=\"" << svg_num(sy(yv)) << "\" stroke=\"black\"/>\n";
    o << "    <text x=\"" << left - 8 << "\" y=\"" << svg_num(sy(yv) + 4) << "\" text-anchor=\"end\">" << tick_label(yv) << "</text>\n";
  }
  o << "  </g>\n";
  o << "  <text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
    << xml_escape(x_label) << "</text>\n";
  o << "  <text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 "
    << top + ph / 2 << ")\">" << xml_escape(y_label) << "</text>\n";
  if (!points.empty()) {
    o << "  <polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < points.size(); ++i) o << (i ? " " : "") << svg_num(sx(points[i].first)) << ',' << svg_num(sy(points[i].second));
    o << "\"/>\n";
    for (const auto& [x, y] : points) o << "  <circle cx=\"" << svg_num(sx(x)) << "\" cy=\"" << svg_num(sy(y)) << "\" r=\"3.5\" fill=\"#1f5fa8\"/>\n";
  }
  o << "</svg>\n";
  write_text(path, o.str());
}

// ---------------------------------------------------------------------------
// CLI

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lattice solver and degeneration diagnostics for generalized Seiberg-Witten equations", "gsw"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path;
  std::string out_dir;
  std::string snapshot_path;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  bool perturb = false;

  auto common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "INI configuration file");
    if (config_required) opt->required();
    sub->add_option("--out", out_dir, "output directory (overrides [run] output)");
    sub->add_option("--seed", seed, "RNG seed (overrides [run] seed)");
    sub->add_flag("--quiet", quiet, "suppress progress output");
  };
  auto* solve_cmd = app.add_subcommand("solve", "solve at the first alpha of the schedule");
  common(solve_cmd, true);
  auto* continue_cmd = app.add_subcommand("continue", "continuation along the alpha schedule");
  common(continue_cmd, true);
  auto* analyze_cmd = app.add_subcommand("analyze", "zero set, Hölder, monodromy and class of a snapshot");
  analyze_cmd->add_option("snapshot", snapshot_path, "snapshot file")->required();
  common(analyze_cmd, false);
  auto* check_cmd = app.add_subcommand("check", "run the invariant suite");
  check_cmd->add_flag("--quiet", quiet, "print failures only");
  check_cmd->add_option("--seed", seed, "RNG seed for the random samples");
  check_cmd->add_flag("--perturb-moment-map", perturb, "test hook: use a wrong moment-map convention")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "ERROR: " << e.what() << '\n';
    return exit_code::invalid_config;
  }

  std::ostringstream sink;
  CommandIo io{out, err, quiet};
  try {
    if (check_cmd->parsed()) {
      CheckOptions options;
      options.perturb_moment_map = perturb;
      if (seed) options.seed = *seed;
      if (quiet) {
        const int code = cmd_check(options, {sink, err, true});
        if (code == exit_code::ok) out << "all checks passed\n";
        return code;
      }
      return cmd_check(options, io);
    }
    if (analyze_cmd->parsed()) {
      AnalysisConfig analysis;
      if (!config_path.empty()) analysis = load_analysis_config(config_path);
      const fs::path dir = out_dir.empty() ? fs::path(snapshot_path).parent_path() : fs::path(out_dir);
      try {
        return cmd_analyze(snapshot_path, analysis, dir.empty() ? fs::path(".") : dir, io);
      } catch (const SnapshotError&) {
        return exit_code::bad_snapshot;
      }
    }
    RunConfig config = load_config(config_path);
    if (seed) config.seed = seed;
    if (!out_dir.empty()) config.output = out_dir;
    if (solve_cmd->parsed()) return cmd_solve(config, io);
    return cmd_continue(config, io);
  } catch (const ConfigError& e) {
    err << "ERROR: " << e.what() << '\n';
    return exit_code::invalid_config;
  } catch (const std::exception& e) {
    err << "ERROR: " << e.what() << '\n';
    return exit_code::check_failed;
  }
}

}  // namespace gsw
