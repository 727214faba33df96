#pragma once

// Experiment driver behind the command-line tool: flat key = value configs,
// dispatch to the library, and CSV / JSON / SVG / log artifacts.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "orlicz/capacity.hpp"
#include "orlicz/errors.hpp"
#include "orlicz/mesh.hpp"
#include "orlicz/numeric.hpp"
#include "orlicz/parallel.hpp"
#include "orlicz/shape_opt.hpp"
#include "orlicz/symmetry.hpp"
#include "orlicz/trace_solver.hpp"
#include "orlicz/young.hpp"

namespace orlicz {

enum class Command { constant, window, hole, sweep_alpha, blowup, capacity, continuity, symmetrize, young_check };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::constant:
      return "constant";
    case Command::window:
      return "window";
    case Command::hole:
      return "hole";
    case Command::sweep_alpha:
      return "sweep-alpha";
    case Command::blowup:
      return "blowup";
    case Command::capacity:
      return "capacity";
    case Command::continuity:
      return "continuity";
    case Command::symmetrize:
      return "symmetrize";
    case Command::young_check:
      return "young-check";
  }
  return "?";
}

struct ExperimentConfig {
  Command command = Command::constant;
  std::string domain = "disk";
  double radius = 1.0;
  double side = 1.0;
  double h = 0.1;
  std::string G_expr = "pow(2)";
  std::string H_expr = "pow(2)";
  std::vector<double> alpha;
  std::vector<double> eps;
  std::string shape = "window";  ///< sweep-alpha: window or hole
  SolverConfig solver;
  std::uint64_t seed = 0;
  int dimension = 2;  ///< N in the Young-function checks
  // capacity
  double box_radius = 4.0;
  std::vector<double> obstacle_radius{0.0};
  Point obstacle_center{0.0, 0.0};
  std::vector<double> h_list;
  // continuity
  double hole_half = 0.25;
  std::string perturbation = "translate";
  double shift0 = 1.0;
  int steps = 4;
  // symmetrize
  std::string field = "two_bump";
  std::string field_file;
  Point axis{1.0, 0.0};
  int radial_bins = 64;
  int angles = 256;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_number(const std::string& key, const std::string& text, int line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size() || !std::isfinite(v)) {
    throw ParseError("line " + std::to_string(line) + ": '" + key + "' expects a number, got '" + text + "'");
  }
  return v;
}

inline long long parse_integer(const std::string& key, const std::string& text, int line) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != text.size()) {
    throw ParseError("line " + std::to_string(line) + ": '" + key + "' expects an integer, got '" + text + "'");
  }
  return v;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text, int line) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, trim(item), line));
  if (out.empty()) throw ParseError("line " + std::to_string(line) + ": '" + key + "' expects a list");
  return out;
}

inline Point parse_point(const std::string& key, const std::string& text, int line) {
  const auto v = parse_list(key, text, line);
  if (v.size() != 2) throw ParseError("line " + std::to_string(line) + ": '" + key + "' expects x, y");
  return {v[0], v[1]};
}

inline Command parse_command(const std::string& text, int line) {
  static const std::map<std::string, Command> names{
      {"constant", Command::constant},       {"window", Command::window},
      {"hole", Command::hole},               {"sweep-alpha", Command::sweep_alpha},
      {"blowup", Command::blowup},           {"capacity", Command::capacity},
      {"continuity", Command::continuity},   {"symmetrize", Command::symmetrize},
      {"young-check", Command::young_check},
  };
  const auto it = names.find(text);
  if (it == names.end()) throw ParseError("line " + std::to_string(line) + ": unknown command '" + text + "'");
  return it->second;
}

}  // namespace detail

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, malformed
/// values and unparsable Young-function expressions throw ParseError.
inline ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig c;
  bool have_command = false;
  std::string raw;
  int line = 0;
  std::map<std::string, int> seen;
  while (std::getline(is, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string text = detail::trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("line " + std::to_string(line) + ": expected 'key = value'");
    const std::string key = detail::trim(std::string_view(text).substr(0, eq));
    const std::string val = detail::trim(std::string_view(text).substr(eq + 1));
    if (key.empty() || val.empty()) throw ParseError("line " + std::to_string(line) + ": empty key or value");
    if (seen.count(key)) throw ParseError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
    seen[key] = line;
    auto num = [&] { return detail::parse_number(key, val, line); };
    auto integer = [&] { return detail::parse_integer(key, val, line); };
    if (key == "command") {
      c.command = detail::parse_command(val, line);
      have_command = true;
    } else if (key == "domain") {
      if (val != "disk" && val != "square") throw ParseError("line " + std::to_string(line) + ": domain is disk or square");
      c.domain = val;
    } else if (key == "radius") {
      c.radius = num();
    } else if (key == "side") {
      c.side = num();
    } else if (key == "h") {
      c.h = num();
    } else if (key == "G") {
      c.G_expr = val;
    } else if (key == "H") {
      c.H_expr = val;
    } else if (key == "alpha") {
      c.alpha = detail::parse_list(key, val, line);
    } else if (key == "eps") {
      c.eps = detail::parse_list(key, val, line);
    } else if (key == "shape") {
      if (val != "window" && val != "hole") throw ParseError("line " + std::to_string(line) + ": shape is window or hole");
      c.shape = val;
    } else if (key == "seed") {
      const long long s = integer();
      if (s < 0) throw ParseError("line " + std::to_string(line) + ": seed must be nonnegative");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "N") {
      c.dimension = static_cast<int>(integer());
    } else if (key == "solver.eps_reg") {
      c.solver.eps_reg = num();
    } else if (key == "solver.step0") {
      c.solver.step0 = num();
    } else if (key == "solver.armijo_c") {
      c.solver.armijo_c = num();
    } else if (key == "solver.armijo_shrink") {
      c.solver.armijo_shrink = num();
    } else if (key == "solver.max_iters") {
      c.solver.max_iters = static_cast<int>(integer());
    } else if (key == "solver.tol_rel") {
      c.solver.tol_rel = num();
    } else if (key == "solver.stall_window") {
      c.solver.stall_window = static_cast<int>(integer());
    } else if (key == "box_radius") {
      c.box_radius = num();
    } else if (key == "obstacle_radius") {
      c.obstacle_radius = detail::parse_list(key, val, line);
    } else if (key == "obstacle_center") {
      c.obstacle_center = detail::parse_point(key, val, line);
    } else if (key == "h_list") {
      c.h_list = detail::parse_list(key, val, line);
    } else if (key == "hole_half") {
      c.hole_half = num();
    } else if (key == "perturbation") {
      if (val != "translate" && val != "dilate") {
        throw ParseError("line " + std::to_string(line) + ": perturbation is translate or dilate");
      }
      c.perturbation = val;
    } else if (key == "shift0") {
      c.shift0 = num();
    } else if (key == "steps") {
      c.steps = static_cast<int>(integer());
    } else if (key == "field") {
      c.field = val;
    } else if (key == "field_file") {
      c.field_file = val;
    } else if (key == "axis") {
      c.axis = detail::parse_point(key, val, line);
    } else if (key == "radial_bins") {
      c.radial_bins = static_cast<int>(integer());
    } else if (key == "angles") {
      c.angles = static_cast<int>(integer());
    } else {
      throw ParseError("line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
  if (!have_command) throw ParseError("config: missing 'command'");
  for (const auto* expr : {&c.G_expr, &c.H_expr}) {
    try {
      parse_young(*expr);
    } catch (const ParseError& e) {
      throw ParseError(std::string("config: ") + e.what());
    } catch (const std::exception& e) {
      throw ParseError("config: expression '" + *expr + "' is not an admissible Young function: " + e.what());
    }
  }
  c.solver.seed = c.seed;
  return c;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  return parse_config(in);
}

// ---------------------------------------------------------------------------
// Validation.

struct Finding {
  enum class Severity { error, warning };
  Severity severity = Severity::error;
  std::string message;
};

inline std::shared_ptr<const MeshDomain> make_domain(const ExperimentConfig& c, double h) {
  if (c.domain == "disk") return std::make_shared<const MeshDomain>(make_disk(c.radius, h));
  return std::make_shared<const MeshDomain>(make_square(c.side, h));
}

inline Point domain_center(const ExperimentConfig& c) {
  return c.domain == "disk" ? Point{0.0, 0.0} : Point{0.5 * c.side, 0.5 * c.side};
}

/// Dry-run checks; never solves and never throws for config content.
inline std::vector<Finding> validate(const ExperimentConfig& c) {
  std::vector<Finding> out;
  auto error = [&](std::string m) { out.push_back({Finding::Severity::error, std::move(m)}); };
  auto warning = [&](std::string m) { out.push_back({Finding::Severity::warning, std::move(m)}); };
  const double size = c.domain == "disk" ? c.radius : c.side;
  if (!(size > 0.0)) error("domain size must be positive");
  if (!(c.h > 0.0)) error("h must be positive");
  if (size > 0.0 && c.h > size) error("h larger than the domain");
  try {
    c.solver.validate();
  } catch (const std::exception& e) {
    error(e.what());
  }
  for (double h : c.h_list) {
    if (!(h > 0.0) || h > size) error("h_list entry out of range");
  }
  if (!out.empty()) return out;

  const double perimeter = c.domain == "disk" ? 2.0 * std::numbers::pi * c.radius : 4.0 * c.side;
  const double area = c.domain == "disk" ? std::numbers::pi * c.radius * c.radius : c.side * c.side;
  const bool window_like =
      c.command == Command::window || (c.command == Command::sweep_alpha && c.shape == "window");
  const bool hole_like =
      c.command == Command::hole || c.command == Command::blowup || (c.command == Command::sweep_alpha && c.shape == "hole");
  if (window_like || hole_like) {
    if (c.alpha.empty()) error("alpha missing");
    const double top = window_like ? perimeter : area;
    for (double a : c.alpha) {
      if (!(a > 0.0 && a < top)) error("alpha out of open range");
    }
  }
  if (c.command == Command::sweep_alpha) {
    for (std::size_t i = 1; i < c.alpha.size(); ++i) {
      if (!(c.alpha[i] > c.alpha[i - 1])) error("sweep-alpha needs an increasing alpha list");
    }
  }
  if (c.command == Command::blowup) {
    if (c.eps.empty()) error("eps missing");
    for (std::size_t i = 0; i < c.eps.size(); ++i) {
      if (!(c.eps[i] > 0.0)) error("eps must be positive");
      if (i > 0 && !(c.eps[i] < c.eps[i - 1])) error("eps list must decrease");
    }
    if (c.domain != "disk") warning("blowup bands are calibrated on the disk");
  }
  if (c.command == Command::capacity) {
    if (!(c.box_radius > 0.0)) error("box_radius must be positive");
    for (double r : c.obstacle_radius) {
      if (!(r >= 0.0) || r >= c.box_radius) error("obstacle_radius out of range");
    }
  }
  if (c.command == Command::continuity) {
    if (!(c.hole_half > 0.0)) error("hole_half must be positive");
    if (c.steps < 1) error("steps must be >= 1");
  }
  if (c.command == Command::symmetrize) {
    if (c.domain != "disk") error("symmetrize needs a disk domain");
    if (c.field_file.empty()) {
      bool known = false;
      for (const auto& f : disk_field_suite()) known = known || f.name == c.field;
      if (!known) error("unknown field '" + c.field + "'");
    }
    if (c.radial_bins < 1 || c.angles < 4) error("radial_bins >= 1 and angles >= 4 required");
    if (!(std::hypot(c.axis.x, c.axis.y) > 0.0)) error("axis must be nonzero");
  }
  if (c.dimension < 2) error("N must be >= 2");

  try {
    const auto G = parse_young(c.G_expr);
    const auto H = parse_young(c.H_expr);
    const auto report = check_trace_compatibility(G, H, c.dimension);
    if (report.verdict != Compatibility::compatible) warning("trace embedding compatibility not verified");
  } catch (const std::exception& e) {
    warning(std::string("trace embedding compatibility not verified: ") + e.what());
  }
  return out;
}

inline bool has_errors(const std::vector<Finding>& f) {
  return std::any_of(f.begin(), f.end(), [](const Finding& x) { return x.severity == Finding::Severity::error; });
}

// ---------------------------------------------------------------------------
// Tables and artifacts.

using Cell = std::variant<std::monostate, double, long long, bool, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

inline std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, double>) {
          return numeric::format_double(v);
        } else if constexpr (std::is_same_v<T, long long>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          return v;
        }
      },
      c);
}

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << csv_escape(t.columns[i]);
  os << "\r\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_escape(cell_text(row[i]));
    os << "\r\n";
  }
}

inline nlohmann::ordered_json table_json(const Table& t) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) {
              obj[t.columns[i]] = nullptr;
            } else {
              obj[t.columns[i]] = v;
            }
          },
          row[i]);
    }
    arr.push_back(std::move(obj));
  }
  return arr;
}

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  std::vector<PlotSeries> series;
};

/// Static SVG line plot with axes, tick labels and one polyline per series.
inline std::string render_svg(const PlotSpec& p) {
  constexpr double W = 640, Hh = 420, L = 70, R = 20, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : p.series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
  if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return Hh - B - (v - y0) / (y1 - y0) * (Hh - T - B); };
  auto f = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  auto label = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return std::string(buf);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << p.title << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << Hh - B << "\" x2=\"" << W - R << "\" y2=\"" << Hh - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << Hh - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
    os << "<text x=\"" << f(px(xv)) << "\" y=\"" << Hh - B + 16 << "\" text-anchor=\"middle\">" << label(xv) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << f(py(yv) + 4) << "\" text-anchor=\"end\">" << label(yv) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << Hh - 12 << "\" text-anchor=\"middle\">" << p.xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << (T + Hh - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (T + Hh - B) / 2 << ")\">" << p.ylabel << "</text>\n";
  for (std::size_t s = 0; s < p.series.size(); ++s) {
    const auto& ser = p.series[s];
    const char* color = colors[s % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < ser.x.size(); ++i) os << (i ? " " : "") << f(px(ser.x[i])) << ',' << f(py(ser.y[i]));
    os << "\"/>\n";
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      os << "<circle cx=\"" << f(px(ser.x[i])) << "\" cy=\"" << f(py(ser.y[i])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (s + 1) << "\" text-anchor=\"end\" fill=\"" << color << "\">"
       << ser.name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Execution.

struct ExperimentOutcome {
  Table table;
  std::vector<std::string> log;
  bool converged = true;
  std::optional<PlotSpec> plot;
  std::vector<std::pair<std::string, std::string>> extra_files;  ///< (file name, content)
};

namespace detail {

inline std::string join_history(const std::vector<double>& h) {
  std::string s;
  for (std::size_t i = 0; i < h.size(); ++i) s += (i ? " " : "") + numeric::format_double(h[i]);
  return s;
}

inline std::vector<Cell> solve_cells(double alpha_req, double alpha_ach, const TraceSolve& s) {
  return {alpha_req, alpha_ach, s.S_value, s.multiplier, s.kkt_residual, static_cast<long long>(s.iterations),
          s.converged};
}

inline const std::vector<std::string> kSolveColumns{"alpha_requested", "alpha_achieved", "S", "multiplier",
                                                    "kkt_residual", "iterations", "converged"};

inline ExperimentOutcome run_shapes(const ExperimentConfig& c, bool window, int jobs) {
  const auto G = parse_young(c.G_expr), H = parse_young(c.H_expr);
  const auto mesh = make_domain(c, c.h);
  std::vector<std::optional<ShapeOptResult>> results(c.alpha.size());
  parallel_for(static_cast<int>(c.alpha.size()), jobs, [&](int i) {
    const double a = c.alpha[static_cast<std::size_t>(i)];
    results[static_cast<std::size_t>(i)] =
        window ? optimize_window(G, H, mesh, a, c.solver) : optimize_hole(G, H, mesh, a, c.solver);
  });
  ExperimentOutcome out;
  out.table.columns = kSolveColumns;
  out.table.columns.push_back(window ? "contiguity_defect" : "zero_set_measure");
  out.table.columns.push_back("outer_iterations");
  PlotSeries series{"S", {}, {}};
  for (const auto& r : results) {
    auto row = solve_cells(r->alpha_requested, r->alpha_achieved, r->best_solve);
    if (window) {
      row.push_back(static_cast<long long>(contiguity_defect(*mesh, r->window)));
    } else {
      row.push_back(interior_zero_measure(*mesh, r->best_solve.extremal.values));
    }
    row.push_back(static_cast<long long>(r->outer_iterations));
    out.table.rows.push_back(std::move(row));
    out.converged = out.converged && r->best_solve.converged;
    series.x.push_back(r->alpha_requested);
    series.y.push_back(r->S_alpha);
    std::string accepted;
    for (const auto& [hash, S] : r->history) accepted += " " + std::to_string(hash) + ":" + numeric::format_double(S);
    out.log.push_back("alpha=" + numeric::format_double(r->alpha_requested) + " accepted shapes:" + accepted);
    out.log.push_back("alpha=" + numeric::format_double(r->alpha_requested) +
                      " J history: " + join_history(r->best_solve.history));
  }
  bool increasing = true;
  for (std::size_t i = 1; i < series.y.size(); ++i) increasing = increasing && series.y[i] > series.y[i - 1];
  out.log.push_back(std::string("S strictly increasing in alpha: ") + (increasing ? "yes" : "no"));
  out.plot = PlotSpec{std::string("S vs alpha (") + (window ? "window" : "hole") + ")", "alpha", "S", {series}};
  return out;
}

inline ExperimentOutcome run_constant(const ExperimentConfig& c) {
  const auto G = parse_young(c.G_expr), H = parse_young(c.H_expr);
  const auto mesh = make_domain(c, c.h);
  const TraceSolve s = solve(G, H, mesh, VanishingConstraint::none(), c.solver);
  ExperimentOutcome out;
  out.table.columns = kSolveColumns;
  out.table.rows.push_back(solve_cells(0.0, 0.0, s));
  out.converged = s.converged;
  out.log.push_back("J history: " + join_history(s.history));
  std::ostringstream rep;
  write_solve_report(rep, s, c.solver);
  out.log.push_back(rep.str());
  std::ostringstream field;
  write_field(field, s.extremal.values);
  out.extra_files.emplace_back("extremal.txt", field.str());
  return out;
}

inline ExperimentOutcome run_blowup(const ExperimentConfig& c, int jobs) {
  const auto G = parse_young(c.G_expr), H = parse_young(c.H_expr);
  const auto mesh = make_domain(c, c.h);
  const BlowupTable t = blowup_experiment(G, H, mesh, c.alpha.front(), c.eps, c.solver, jobs);
  ExperimentOutcome out;
  out.table.columns = {"eps", "delta", "alpha_requested", "alpha_achieved", "S", "multiplier", "kkt_residual",
                       "iterations"};
  PlotSeries series{"S", {}, {}};
  for (const auto& r : t.rows) {
    out.table.rows.push_back({r.eps, r.delta, c.alpha.front(), r.alpha_achieved, r.S, r.multiplier, r.kkt_residual,
                              static_cast<long long>(r.iterations)});
    series.x.push_back(r.eps);
    series.y.push_back(r.S);
  }
  out.log.push_back(std::string("S nondecreasing as eps decreases: ") + (t.monotone ? "yes" : "no"));
  out.log.push_back("last/first S ratio: " + numeric::format_double(t.growth_ratio));
  out.plot = PlotSpec{"S vs eps (annular band)", "eps", "S", {series}};
  return out;
}

inline ExperimentOutcome run_capacity(const ExperimentConfig& c, int jobs) {
  const auto G = parse_young(c.G_expr), H = parse_young(c.H_expr);
  const std::vector<double> hs = c.h_list.empty() ? std::vector<double>{c.h} : c.h_list;
  const Point center{domain_center(c).x + c.obstacle_center.x, domain_center(c).y + c.obstacle_center.y};
  std::vector<std::shared_ptr<const MeshDomain>> meshes;
  for (double h : hs) meshes.push_back(make_domain(c, h));
  std::vector<InvisibilityCase> cases;
  for (double r : c.obstacle_radius) {
    const std::string id = r == 0.0 ? "vertex" : "disk_r" + numeric::format_double(r);
    for (std::size_t i = 0; i < hs.size(); ++i) cases.push_back({meshes[i], hs[i], {id, center, r, false}});
  }
  const InvisibilityTable t = invisibility_experiment(G, H, cases, c.box_radius, c.solver, jobs);
  ExperimentOutcome out;
  out.table.columns = {"obstacle_id", "R", "h", "alpha_requested", "alpha_achieved", "capacity", "S_A", "S_empty",
                       "gap", "dist_H"};
  std::map<std::string, PlotSeries> series;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    const auto& o = cases[i].obstacle;
    const double req = std::numbers::pi * o.radius * o.radius;
    const double ach = o.radius == 0.0 ? 0.0 : triangles_in_disk(*cases[i].domain, o.center, o.radius).achieved_measure;
    out.table.rows.push_back({r.obstacle_id, r.R, r.h, req, ach, r.capacity, r.S_A, r.S_empty, r.gap, std::monostate{}});
    auto& s = series[r.obstacle_id];
    s.name = r.obstacle_id;
    s.x.push_back(r.h);
    s.y.push_back(r.gap);
  }
  PlotSpec plot{"gap |S_A - S_empty| vs h", "h", "gap", {}};
  for (auto& [k, s] : series) plot.series.push_back(std::move(s));
  out.plot = std::move(plot);
  return out;
}

inline ExperimentOutcome run_continuity(const ExperimentConfig& c, int jobs) {
  const auto G = parse_young(c.G_expr), H = parse_young(c.H_expr);
  const auto mesh = make_domain(c, c.h);
  const Point c0 = domain_center(c);
  const InteriorSubset A = triangles_in_square(*mesh, c0, c.hole_half);
  std::vector<InteriorSubset> perturbed;
  for (int k = 1; k <= c.steps; ++k) {
    const double q = std::ldexp(1.0, -k);
    perturbed.push_back(c.perturbation == "translate"
                            ? triangles_in_square(*mesh, {c0.x + c.shift0 * q, c0.y}, c.hole_half)
                            : triangles_in_square(*mesh, c0, c.hole_half * (1.0 + q)));
  }
  const HausdorffTable t = hausdorff_continuity_experiment(G, H, mesh, A, perturbed, c.solver, jobs);
  ExperimentOutcome out;
  out.table.columns = {"k", "alpha_requested", "alpha_achieved", "dist_H", "S_Ak", "S_A", "gap"};
  PlotSeries series{"gap", {}, {}};
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    out.table.rows.push_back({static_cast<long long>(r.k), A.achieved_measure, perturbed[i].achieved_measure, r.dist_H,
                              r.S_Ak, r.S_A, r.gap});
    series.x.push_back(r.dist_H);
    series.y.push_back(r.gap);
  }
  out.log.push_back(std::string("gaps nonincreasing (slack 1e-3): ") + (t.gaps_nonincreasing ? "yes" : "no"));
  out.plot = PlotSpec{"gap vs Hausdorff distance (" + c.perturbation + ")", "dist_H", "gap", {series}};
  return out;
}

inline ExperimentOutcome run_symmetrize(const ExperimentConfig& c, int jobs) {
  const auto G = parse_young(c.G_expr), H = parse_young(c.H_expr);
  const auto mesh = make_domain(c, c.h);
  Eigen::VectorXd u;
  if (!c.field_file.empty()) {
    std::ifstream in(c.field_file);
    if (!in) throw DomainError("cannot open field_file '" + c.field_file + "'");
    u = read_field(in);
    if (u.size() != mesh->vertex_count()) throw DomainError("field_file does not match the mesh");
  } else {
    u = sample_disk_field(*mesh, disk_field(c.field));
  }
  SymmetrizeOptions opts;
  opts.radial_bins = c.radial_bins;
  opts.angles = c.angles;
  opts.jobs = jobs;
  const ScalarField uf(mesh, u);
  const SymmetrizedField s = symmetrize(uf, c.axis, opts);
  ExperimentOutcome out;
  out.table.columns = {"bin", "radius", "level", "original_arc", "cap_half_angle"};
  for (std::size_t k = 0; k < s.radii.size(); ++k) {
    for (std::size_t l = 0; l < s.levels.size(); ++l) {
      out.table.rows.push_back({static_cast<long long>(k), s.radii[k], s.levels[l], s.original_arc[k][l],
                                s.half_angle[k][l]});
    }
  }
  auto rel = [](double a, double b) { return b != 0.0 ? (a - b) / b : a - b; };
  const auto thr = threshold_grid(u);
  const auto da = distribution(*mesh, u, MeasureKind::area, thr);
  const auto ds = distribution(*s.polar_mesh, s.field.values, MeasureKind::area, thr);
  double eq = 0.0;
  for (std::size_t i = 0; i < thr.size(); ++i) eq = std::max(eq, std::abs(da.measures[i] - ds.measures[i]));
  const auto ph = perimeter_hypothesis(*mesh, u);
  const auto ps = polya_szego_check(G, uf, s.field);
  out.log.push_back("equimeasurability max |rho_u - rho_sharp| / area: " + numeric::format_double(eq / mesh->total_area()));
  out.log.push_back("bulk modular relative change: " +
                    numeric::format_double(rel(bulk_modular(G, s.field), bulk_modular(G, uf))));
  out.log.push_back("trace modular relative change: " +
                    numeric::format_double(rel(trace_modular(H, s.field), trace_modular(H, uf))));
  out.log.push_back("layer cake vs bulk modular relative: " + numeric::format_double(rel(layer_cake(G, da), bulk_modular(G, uf))));
  out.log.push_back(std::string("perimeter hypothesis: ") + (ph.holds ? "holds" : "fails") +
                    " (worst ratio " + numeric::format_double(ph.worst_ratio) + ")");
  out.log.push_back("polya-szego lhs " + numeric::format_double(ps.lhs) + " rhs " + numeric::format_double(ps.rhs) +
                    (ps.holds ? " holds" : " violated"));
  std::ostringstream field, polar;
  write_field(field, s.field.values);
  write_mesh(polar, *s.polar_mesh);
  out.extra_files.emplace_back("symmetrized_field.txt", field.str());
  out.extra_files.emplace_back("polar_mesh.txt", polar.str());
  return out;
}

inline ExperimentOutcome run_young_check(const ExperimentConfig& c) {
  const auto G = parse_young(c.G_expr), H = parse_young(c.H_expr);
  const auto report = check_trace_compatibility(G, H, c.dimension);
  ExperimentOutcome out;
  out.table.columns = {"function", "expression", "g_minus", "g_plus", "doubling_constant", "convex_on_grid",
                       "lower_integral_finite", "compatibility"};
  for (const auto& [name, F] : {std::pair{"G", G}, std::pair{"H", H}}) {
    out.table.rows.push_back({std::string(name), F.expression(), F.indices().g_minus, F.indices().g_plus,
                              doubling_constant(F), is_convex_on_grid(F),
                              lower_compactness_integral_finite(F, c.dimension),
                              std::string(to_string(report.verdict))});
  }
  for (std::size_t i = 0; i < report.t_values.size(); ++i) {
    out.log.push_back("t=" + numeric::format_double(report.t_values[i]) +
                      " ratio=" + numeric::format_double(report.ratios[i]));
  }
  out.log.push_back("tail slope: " + numeric::format_double(report.tail_slope));
  return out;
}

}  // namespace detail

inline ExperimentOutcome execute(const ExperimentConfig& c, int jobs = 1) {
  switch (c.command) {
    case Command::constant:
      return detail::run_constant(c);
    case Command::window:
      return detail::run_shapes(c, true, jobs);
    case Command::hole:
      return detail::run_shapes(c, false, jobs);
    case Command::sweep_alpha:
      return detail::run_shapes(c, c.shape == "window", jobs);
    case Command::blowup:
      return detail::run_blowup(c, jobs);
    case Command::capacity:
      return detail::run_capacity(c, jobs);
    case Command::continuity:
      return detail::run_continuity(c, jobs);
    case Command::symmetrize:
      return detail::run_symmetrize(c, jobs);
    case Command::young_check:
      return detail::run_young_check(c);
  }
  throw DomainError("unknown command");
}

struct RunOptions {
  std::filesystem::path out_dir = "out";
  bool plot = false;
  int jobs = 1;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFindings = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitNotConverged = 4;

inline std::string error_json(const std::string& kind, int code, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = kind;
  j["exit_code"] = code;
  j["message"] = message;
  return j.dump();
}

/// Validates, runs and writes the artifacts. Returns the process exit code;
/// errors are reported on `err` as one JSON object.
inline int run(const ExperimentConfig& c, const RunOptions& opts, std::ostream& err) {
  const auto findings = validate(c);
  if (has_errors(findings)) {
    std::string msg;
    for (const auto& f : findings) {
      if (f.severity == Finding::Severity::error) msg += (msg.empty() ? "" : "; ") + f.message;
    }
    err << error_json("config", kExitConfig, msg) << '\n';
    return kExitConfig;
  }
  ExperimentOutcome outcome;
  try {
    outcome = execute(c, opts.jobs);
  } catch (const InfeasibleError& e) {
    err << error_json("infeasible", kExitInfeasible, e.what()) << '\n';
    return kExitInfeasible;
  } catch (const DomainError& e) {
    err << error_json("config", kExitConfig, e.what()) << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << error_json("numeric", kExitNotConverged, e.what()) << '\n';
    return kExitNotConverged;
  }

  std::filesystem::create_directories(opts.out_dir);
  {
    std::ofstream csv(opts.out_dir / "results.csv", std::ios::binary);
    write_csv(csv, outcome.table);
  }
  {
    std::ofstream js(opts.out_dir / "results.json", std::ios::binary);
    js << table_json(outcome.table).dump(2) << '\n';
  }
  {
    std::ofstream log(opts.out_dir / "run.log", std::ios::binary);
    log << "command = " << to_string(c.command) << '\n';
    log << "seed = " << c.seed << '\n';
    for (const auto& f : findings) log << "finding: " << f.message << '\n';
    for (const auto& line : outcome.log) log << line << '\n';
    if (!outcome.converged) log << "warning: at least one solve did not converge\n";
  }
  for (const auto& [name, content] : outcome.extra_files) {
    std::ofstream f(opts.out_dir / name, std::ios::binary);
    f << content;
  }
  if (opts.plot && outcome.plot) {
    std::ofstream svg(opts.out_dir / "plot.svg", std::ios::binary);
    svg << render_svg(*outcome.plot);
  }
  if (!outcome.converged) {
    err << error_json("not_converged", kExitNotConverged, "solver did not converge; partial results written") << '\n';
    return kExitNotConverged;
  }
  return kExitOk;
}

}  // namespace orlicz
