// Command-line interface: classification, grids, level structures, centers,
// realization, algebraic degree and the complex-side verification, with
// deterministic JSON or text reports. Exit codes: 0 success, 1 domain error
// (machine-readable error object), 2 usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pdyn/bridge.hpp"
#include "pdyn/parameter.hpp"

using namespace pdyn;
using Json = nlohmann::ordered_json;

namespace {

struct Config {
  Rational precision = Rational(24);
  int depth_budget = 12;
  double strip_im_min = kStripImMin;
  int resolution = 96;
};

// Procedure: load_config
// PDYN_CONFIG points at a key-value text file (key = value per line, '#'
// comments); unknown keys are ignored so configs can be shared across tools.
Config load_config() {
  Config cfg;
  const char* path = std::getenv("PDYN_CONFIG");
  if (!path) return cfg;
  std::ifstream in(path);
  if (!in) throw Error("ConfigError", std::string("cannot open config ") + path);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      size_t b = s.find_first_not_of(" \t");
      size_t e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key == "precision") cfg.precision = parse_rational(val);
    else if (key == "depth_budget") cfg.depth_budget = std::stoi(val);
    else if (key == "strip_im_min") cfg.strip_im_min = std::stod(val);
    else if (key == "resolution") cfg.resolution = std::stoi(val);
  }
  return cfg;
}

std::string double_str(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

Json series_json(const PuiseuxSeries& s) {
  Json terms = Json::array();
  for (const auto& [e, c] : s.terms())
    terms.push_back({{"exp", to_string(e)}, {"coeff", cyclo_to_string(c)}});
  return Json{{"m", s.ramification()},
              {"terms", terms},
              {"precision", s.is_exact() ? Json("exact") : Json(to_string(*s.precision()))}};
}

Json ball_json(const UltrametricBall& b) {
  return Json{{"center", series_json(b.center)},
              {"log_radius", to_string(b.log_radius)},
              {"kind", b.kind == BallKind::closed ? "closed" : "open"}};
}

Json grid_json(const MarkedGrid& g) {
  Json rows = Json::array();
  for (const auto& r : g.rows) rows.push_back(r);
  return Json{{"depth", g.depth},
              {"rows", rows},
              {"period", g.period ? Json(*g.period) : Json(nullptr)}};
}

MarkedGrid grid_from_json(const Json& j) {
  MarkedGrid g(j.at("depth").get<int>());
  const Json& rows = j.at("rows");
  if ((int)rows.size() != g.depth + 1)
    throw Error("ParseError", "grid rows do not match depth");
  for (int l = 0; l <= g.depth; ++l) {
    const Json& row = rows[(size_t)l];
    if ((int)row.size() != g.depth + 1 - l)
      throw Error("ParseError", "grid row " + std::to_string(l) + " has wrong length");
    for (int k = 0; k + l <= g.depth; ++k) g.set(l, k, row[(size_t)k].get<int>());
  }
  if (j.contains("period") && !j.at("period").is_null())
    g.period = j.at("period").get<int>();
  return g;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("ParseError", "cannot open " + path);
  Json j;
  in >> j;
  return j;
}

// flatten a JSON report into deterministic "key: value" lines
void print_text(const Json& j, const std::string& prefix = "") {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) print_text(v, prefix.empty() ? k : prefix + "." + k);
  } else if (j.is_array()) {
    std::cout << prefix << ": " << j.dump() << "\n";
  } else {
    std::cout << prefix << ": " << (j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
  }
}

void emit(const Json& j, const std::string& format) {
  if (format == "json") std::cout << j.dump(2) << "\n";
  else print_text(j);
}

const char* locus_name(Locus l) {
  switch (l) {
    case Locus::C3: return "C3";
    case Locus::S3: return "S3";
    case Locus::Eplus: return "Eplus";
    case Locus::Eminus: return "Eminus";
    default: return "Unresolved";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"non-archimedean cubic dynamics toolkit"};
  app.require_subcommand(1);

  Config cfg;
  try {
    cfg = load_config();
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  std::string format = "json";
  app.add_option("--format", format, "output format")
      ->check(CLI::IsMember({"json", "text"}));

  std::string nu_text, alpha_text, beta_text, z_text, branch_text;
  std::string grid_path, history_path;
  std::string precision_text;
  int level = 0, depth = -1, resolution = 0, trunc = 0;
  double t_re = 0.0, t_im = 0.0;

  auto* c_classify = app.add_subcommand("classify", "locus of a cubic map");
  c_classify->add_option("--alpha", alpha_text)->required();
  c_classify->add_option("--beta", beta_text)->required();
  c_classify->add_option("--depth", depth);

  auto* c_grid = app.add_subcommand("grid", "critical marked grid");
  c_grid->add_option("--nu", nu_text)->required();
  c_grid->add_option("--depth", depth)->required();

  auto* c_count = app.add_subcommand("ballcount", "number of level-n balls");
  c_count->add_option("--nu", nu_text)->required();
  c_count->add_option("--level", level)->required();

  auto* c_comp = app.add_subcommand("component", "component of the critical point");
  c_comp->add_option("--nu", nu_text)->required();
  c_comp->add_option("--depth", depth);

  auto* c_itin = app.add_subcommand("itinerary", "symbolic itinerary of a point");
  c_itin->add_option("--alpha", alpha_text)->required();
  c_itin->add_option("--beta", beta_text)->required();
  c_itin->add_option("--z", z_text)->required();
  c_itin->add_option("--depth", depth);

  auto* c_center = app.add_subcommand("center", "parameter ball and its center");
  c_center->add_option("--nu", nu_text)->required();
  c_center->add_option("--level", level)->required();
  c_center->add_option("--precision", precision_text);

  auto* c_realize = app.add_subcommand("realize", "parameter realizing a grid");
  c_realize->add_option("--grid", grid_path)->required();
  c_realize->add_option("--precision", precision_text);

  auto* c_degree = app.add_subcommand("degree", "algebraic degree of a center history");
  c_degree->add_option("--history", history_path)->required();

  auto* c_beval = app.add_subcommand("bridge-eval", "evaluate a parameter series at T");
  c_beval->add_option("--nu", nu_text)->required();
  c_beval->add_option("--re", t_re)->required();
  c_beval->add_option("--im", t_im)->required();
  c_beval->add_option("--trunc", trunc);

  auto* c_bcheck = app.add_subcommand("bridge-check", "compare complex and series grids");
  c_bcheck->add_option("--nu", nu_text)->required();
  c_bcheck->add_option("--re", t_re)->required();
  c_bcheck->add_option("--im", t_im)->required();
  c_bcheck->add_option("--depth", depth)->required();
  c_bcheck->add_option("--resolution", resolution);
  c_bcheck->add_option("--trunc", trunc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  Rational P = precision_text.empty() ? cfg.precision : parse_rational(precision_text);
  if (depth < 0) depth = cfg.depth_budget;
  if (resolution <= 0) resolution = cfg.resolution;
  if (trunc <= 0) trunc = (int)rational_floor(cfg.precision).get_si();

  try {
    Json out;
    if (*c_classify) {
      CubicMap f = CubicMap::phi(parse_series(alpha_text), parse_series(beta_text));
      Classification cls = classify(f, depth);
      out = {{"locus", locus_name(cls.locus)},
             {"logR", to_string(capture_radius(f))},
             {"escape_plus", cls.escape_plus},
             {"escape_minus", cls.escape_minus},
             {"depth", cls.depth_used}};
    } else if (*c_grid) {
      out = grid_json(critical_grid(CubicMap::psi_slice(parse_series(nu_text)), depth));
    } else if (*c_count) {
      LevelStructure ls = level_structure(CubicMap::psi_slice(parse_series(nu_text)), level);
      out = {{"count", ls.levels.back().size()}};
    } else if (*c_comp) {
      ComponentVerdict v =
          component_of_critical(CubicMap::psi_slice(parse_series(nu_text)), depth);
      Json radii = Json::array();
      for (const auto& r : v.radii) radii.push_back(to_string(r));
      out = {{"kind", v.kind == ComponentVerdict::PeriodicBall ? "periodic-ball"
                      : v.kind == ComponentVerdict::Singleton  ? "singleton"
                                                               : "unresolved"},
             {"period", v.period},
             {"log_radius", to_string(v.log_radius)},
             {"radii", radii},
             {"depth", v.depth}};
    } else if (*c_itin) {
      CubicMap f = CubicMap::phi(parse_series(alpha_text), parse_series(beta_text));
      out = {{"symbols", itinerary(f, parse_series(z_text), depth)}};
    } else if (*c_center) {
      PuiseuxSeries nu = parse_series(nu_text);
      ParameterBall pb = parameter_ball(nu, level, P);
      // center history across the nest decides the algebraic degree
      std::vector<std::pair<PuiseuxSeries, Rational>> history;
      for (int n = 0; n <= level; ++n) {
        ParameterBall h = n == level ? pb : parameter_ball(nu, n, P);
        history.push_back({h.center.value(), Rational(-h.ball.log_radius)});
      }
      out = {{"level", pb.level},
             {"grid", grid_json(pb.grid)},
             {"center", series_json(pb.center.value())},
             {"log_radius", to_string(pb.ball.log_radius)},
             {"period", pb.center_period},
             {"delta", algebraic_degree(history)}};
    } else if (*c_realize) {
      MarkedGrid g = grid_from_json(read_json_file(grid_path));
      out = {{"nu", series_json(realize_grid(g, P))}};
    } else if (*c_degree) {
      Json h = read_json_file(history_path);
      std::vector<std::pair<PuiseuxSeries, Rational>> history;
      for (const auto& item : h) {
        PuiseuxSeries c = item.at("center").is_string()
                              ? parse_series(item.at("center").get<std::string>())
                              : [&] {
                                  PuiseuxSeries s;
                                  const Json& sj = item.at("center");
                                  for (const auto& t : sj.at("terms"))
                                    s.set(parse_rational(t.at("exp").get<std::string>()),
                                          parse_cyclo(t.at("coeff").get<std::string>()));
                                  if (sj.at("precision") != Json("exact"))
                                    s.set_precision(parse_rational(
                                        sj.at("precision").get<std::string>()));
                                  return s;
                                }();
        history.push_back({c, parse_rational(item.at("log_radius").get<std::string>())});
      }
      out = {{"delta", algebraic_degree(history)}};
    } else if (*c_beval) {
      ComplexParam p = evaluate_at_T(parse_series(nu_text), Complex(t_re, t_im),
                                     Rational(trunc),
                                     std::exp(-2.0 * M_PI * cfg.strip_im_min));
      out = {{"a", {{"re", double_str(p.a.real())}, {"im", double_str(p.a.imag())}}},
             {"v", {{"re", double_str(p.v.real())}, {"im", double_str(p.v.imag())}}},
             {"tail_bound", double_str(p.tail_bound)}};
    } else if (*c_bcheck) {
      PuiseuxSeries nu = parse_series(nu_text);
      ComplexParam p = evaluate_at_T(nu, Complex(t_re, t_im), Rational(trunc),
                                     std::exp(-2.0 * M_PI * cfg.strip_im_min));
      MarkedGrid series_grid = critical_grid(CubicMap::psi_slice(nu), depth);
      MarkedGrid complex_grid = complex_critical_grid(p, depth, resolution);
      out = {{"match", series_grid.rows == complex_grid.rows},
             {"grid", grid_json(series_grid)},
             {"complex_grid", grid_json(complex_grid)}};
    }
    emit(out, format);
    return 0;
  } catch (const Violation& e) {
    Json err{{"error", "Violation"}, {"rule", e.rule}, {"l", e.l}, {"k", e.k},
             {"what", e.what()}};
    emit(err, format);
    return 1;
  } catch (const Error& e) {
    Json err{{"error", e.name()}, {"what", e.what()}};
    emit(err, format);
    return 1;
  }
}
