#include "maxlab/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "maxlab/bellman.hpp"
#include "maxlab/covering.hpp"
#include "maxlab/error.hpp"
#include "maxlab/operators.hpp"
#include "maxlab/partition.hpp"

namespace maxlab {

namespace {

const std::vector<std::pair<std::string, std::string>> kCommands = {
    {"maximal", "maximal function field and argmax bodies"},
    {"ratio", "||Mf||_p / ||f||_p with tail estimate"},
    {"optimize", "annealing search for a small ratio"},
    {"bellman-verify", "main and chord inequalities and a lower-bound certificate"},
    {"partition", "lambda-dense box filtration and its density check"},
    {"cover", "level-set covers, psi properties and the layer-cake sum"},
    {"dichotomy", "expansion / spread verdict for one body"},
    {"stein", "L log L against the centered maximal function"},
    {"grafakos", "one-sided level-set identity"},
    {"constants", "theorem constants"},
    {"counterexample", "superharmonic profile against its centered maximal function"},
};

std::vector<std::size_t> cube_shape(int dim, std::size_t n) {
  return std::vector<std::size_t>(static_cast<std::size_t>(dim), n);
}

Point filled(int dim, double v) {
  Point p{};
  for (int a = 0; a < dim; ++a) p[a] = v;
  return p;
}

int cube_levels(const GridFunction& g) {
  const std::size_t n = g.extent(0);
  int levels = 0;
  while ((std::size_t{1} << levels) < n) ++levels;
  return levels;
}

Body bounds_body(const GridFunction& g, BodyKind kind) {
  Body b = Body::from_box(g.bounds());
  b.kind = kind;
  return b;
}

class Outputs {
 public:
  explicit Outputs(const std::string& dir) : dir_(dir) {
    if (dir_.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create output directory " + dir_);
  }
  bool enabled() const { return !dir_.empty(); }
  void write(const std::string& name, const std::string& text) const {
    if (!enabled()) return;
    const std::string path = (std::filesystem::path(dir_) / name).string();
    std::ofstream f(path);
    if (!f) throw Error(ErrorKind::io, "cannot write " + path);
    f << text;
    if (!f) throw Error(ErrorKind::io, "cannot write " + path);
  }
  void grid(const std::string& name, const GridFunction& g) const {
    if (enabled()) write_ggrid((std::filesystem::path(dir_) / name).string(), g);
  }

 private:
  std::string dir_;
};

nlohmann::json constant_json(const ReferenceConstant& c) {
  return {{"value", c.value}, {"name", c.name}};
}

MaximalField uncentered_field(const GridFunction& g) {
  OperatorSpec s;
  s.lambda = 1.0;
  s.mode = g.dim() <= 2 ? SearchMode::exact_small : SearchMode::ladder;
  return lambda_maximal(g, s);
}

double operator_lambda(const RunConfig& c, double fallback) {
  return c.lambda.value_or(fallback);
}

nlohmann::json cmd_maximal(const RunConfig& c, const Outputs& out) {
  const GridFunction g = load_grid(c);
  const RatioOperator op = parse_operator(c, g.dim());
  MaximalField field = [&] {
    switch (op.kind) {
      case OperatorKind::dyadic: return dyadic_maximal(g, g.bounds(), cube_levels(g));
      case OperatorKind::one_sided: return one_sided_maximal(g);
      case OperatorKind::lambda_body: break;
    }
    OperatorSpec spec = op.spec;
    spec.record_argmax = out.enabled();
    return lambda_maximal(g, spec);
  }();
  out.grid("maximal.ggrid", field.values);
  if (field.kind == MaximalKind::lambda_body && out.enabled()) {
    out.write("argmax.jsonl", argmax_json_lines(field));
  }
  return {{"operator", field.descriptor},
          {"shape", g.shape()},
          {"max_f", g.max_value()},
          {"max_Mf", field.values.max_value()},
          {"integral_f", g.integral()},
          {"integral_Mf", field.values.integral()},
          {"norm_f_p", lp_norm(g, c.p)},
          {"norm_Mf_p", lp_norm(field.values, c.p)},
          {"constant", constant_json(reference_constant(op, g.dim(), c.p))}};
}

nlohmann::json cmd_ratio(const RunConfig& c, const Outputs& out) {
  const GridFunction g = load_grid(c);
  RatioOptions ro;
  ro.margin_cells = c.margin_cells;
  ro.refine = c.refine;
  const RatioReport r = ratio(g, parse_operator(c, g.dim()), c.p, ro);
  std::ostringstream csv;
  csv << std::setprecision(17) << "p,ratio,ratio_with_tail,constant,margin\n"
      << r.p << ',' << r.ratio << ',' << r.ratio_with_tail << ',' << r.constant.value << ','
      << r.margin << '\n';
  out.write("ratio.csv", csv.str());
  return r.to_json();
}

nlohmann::json cmd_optimize(const RunConfig& c, const Outputs& out) {
  const int dim = c.dim > 0 ? c.dim : 1;
  const std::size_t n = c.cells > 0 ? c.cells : 256;
  const RatioOperator op = parse_operator(c, dim);
  AnnealOptions opt;
  opt.steps = c.steps;
  opt.margin_cells = c.margin_cells;
  if (c.chains == 0) throw Error(ErrorKind::configuration, "chains must be positive");
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < c.chains; ++k) seeds.push_back(c.seed + k);
  const std::vector<SearchResult> results =
      minimize_ratio_chains(op, c.p, cube_shape(dim, n), opt, seeds);
  nlohmann::json chains = nlohmann::json::array();
  double best = INFINITY;
  for (const auto& r : results) {
    chains.push_back(r.to_json());
    best = std::min(best, r.report.ratio_with_tail);
    out.grid("best_" + std::to_string(r.seed) + ".ggrid", r.best);
    out.write("trace_" + std::to_string(r.seed) + ".tsv", r.trace_tsv());
  }
  return {{"operator", op.describe()},
          {"shape", cube_shape(dim, n)},
          {"steps", c.steps},
          {"best_ratio", best},
          {"constant", constant_json(reference_constant(op, dim, c.p))},
          {"chains", chains}};
}

StopCriteria stop_criteria(const RunConfig& c, std::optional<int> default_depth) {
  StopCriteria stop;
  stop.min_diam = c.min_diam;
  stop.max_depth = c.max_depth;
  if (!stop.min_diam && !stop.max_depth) stop.max_depth = default_depth;
  return stop;
}

nlohmann::json cmd_bellman(const RunConfig& c, const Outputs& out) {
  const GridFunction g = load_grid(c);
  FiltrationOptions fo;
  fo.lambda = operator_lambda(c, 1.5);
  fo.p = c.p;
  fo.stop = stop_criteria(c, 8);
  const FiltrationTree tree = build_filtration(g, g.bounds(), fo);
  const std::vector<double> margins = tree_margins(tree);
  double min_margin = INFINITY;
  std::size_t negative = 0;
  for (double m : margins) {
    min_margin = std::min(min_margin, m);
    negative += m < -1e-9 ? 1 : 0;
  }
  double chord_min = INFINITY;
  const std::size_t sweep = 10000;
  for (std::size_t i = 0; i < sweep; ++i) {
    const double s = 1.0 + (fo.lambda - 1.0) * static_cast<double>(i) / (sweep - 1);
    chord_min = std::min(chord_min, chord_margin(s, c.p, fo.lambda));
  }
  const Certificate cert = lemma_certificate(g, g.bounds(), tree, c.p, fo.lambda, uncentered_field(g));
  out.write("certificate.json", cert.to_json().dump(2) + "\n");
  const TheoremConstants k = theorem_constants(c.p, fo.lambda, g.dim());
  nlohmann::json certificate = cert.to_json();
  certificate.erase("nodes");
  return {{"lambda", fo.lambda},
          {"p", c.p},
          {"node_count", tree.nodes.size()},
          {"internal_nodes", margins.size()},
          {"min_margin", margins.empty() ? 0.0 : min_margin},
          {"negative_margins", negative},
          {"chord_min", chord_min},
          {"certificate", certificate},
          {"constant", {{"value", k.general}, {"name", "lambda-dense"}}},
          {"passed", negative == 0 && chord_min >= 0.0 && cert.margin >= -1e-6}};
}

nlohmann::json cmd_partition(const RunConfig& c, const Outputs& out) {
  const GridFunction g = load_grid(c);
  FiltrationOptions fo;
  fo.lambda = operator_lambda(c, 1.5);
  fo.p = c.p;
  fo.stop = stop_criteria(c, std::nullopt);
  const FiltrationTree tree = build_filtration(g, g.bounds(), fo);
  const DensityReport density = verify_density(tree, g, fo.lambda);
  out.write("tree.json", tree.to_json().dump(2) + "\n");
  out.write("density.json", density.to_json().dump(2) + "\n");
  if (g.dim() == 2) out.write("tree.svg", tree.to_svg());
  const TheoremConstants k = theorem_constants(c.p, fo.lambda, g.dim());
  return {{"tree", tree.to_json()},
          {"density", density.to_json()},
          {"passed", density.passed()},
          {"constant", {{"value", k.general}, {"name", "lambda-dense"}}}};
}

std::vector<double> level_ladder(const RunConfig& c, double top) {
  if (c.level) return {*c.level};
  if (!(top > 0.0)) throw Error(ErrorKind::degenerate_input, "f is zero");
  return geometric_ladder(top / 20.0, 0.99 * top, c.level_count);
}

nlohmann::json cmd_cover(const RunConfig& c, const Outputs& out) {
  const GridFunction g = load_grid(c);
  LevelFamilyOptions lo;
  lo.delta = c.tol;
  const RatioOperator op = parse_operator(c, g.dim());
  if (op.kind == OperatorKind::lambda_body) lo.family = op.spec.family;
  const MaximalField m1 = uncentered_field(g);
  const std::vector<double> ladder = level_ladder(c, g.max_value());
  nlohmann::json levels = nlohmann::json::array();
  std::ostringstream csv;
  csv << std::setprecision(12) << PsiReport::csv_header() << '\n';
  bool passed = true;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    const LevelSetCover cover = cover_level(g, ladder[i], lo, m1);
    levels.push_back(cover.report.to_json());
    csv << cover.report.csv_row() << '\n';
    passed = passed && cover.report.passed();
    out.grid("psi_" + std::to_string(i) + ".ggrid", cover.psi);
    out.write("cover_" + std::to_string(i) + ".json", cover.to_json().dump() + "\n");
  }
  out.write("cover.csv", csv.str());
  nlohmann::json report = {{"levels", levels}, {"passed", passed}};
  if (ladder.size() > 1) {
    const LayerCakeReport lc = layer_cake_report(g, c.p, ladder, lo, c.besicovitch);
    report["layer_cake"] = lc.to_json();
  }
  const double B = c.besicovitch.value_or(std::pow(5.0, g.dim()));
  report["constant"] = {{"value", uncentered_constant(c.p, B)}, {"name", "A(p,n,1)"}, {"B", B}};
  return report;
}

nlohmann::json cmd_dichotomy(const RunConfig& c, const Outputs&) {
  const GridFunction g = load_grid(c);
  const RatioOperator op = parse_operator(c, g.dim());
  const BodyKind kind = op.kind == OperatorKind::lambda_body ? op.spec.family : BodyKind::box;
  const double lambda = operator_lambda(c, 0.5);
  nlohmann::json report = dichotomy_check(g, bounds_body(g, kind), lambda, c.eps, c.eta).to_json();
  if (lambda > 0.0 && lambda < 1.0) {
    const double B = c.besicovitch.value_or(std::pow(5.0, g.dim()));
    report["constant"] =
        almost_centered_bound(g.dim(), c.p, lambda, c.eps, c.eta, B).to_json();
  }
  return report;
}

nlohmann::json cmd_stein(const RunConfig& c, const Outputs&) {
  const GridFunction g = load_grid(c);
  const RatioOperator op = parse_operator(c, g.dim());
  const BodyKind kind = op.kind == OperatorKind::lambda_body ? op.spec.family : BodyKind::box;
  nlohmann::json report = stein_check(g, bounds_body(g, kind)).to_json();
  // The constant C(n) exists but has no closed form.
  report["constant"] = {{"value", nullptr}, {"name", "C(n)"}};
  return report;
}

nlohmann::json cmd_grafakos(const RunConfig& c, const Outputs& out) {
  const GridFunction g = load_grid(c);
  const GrafakosReport r = grafakos_check(g, level_ladder(c, one_sided_maximal(g).values.max_value()));
  std::ostringstream csv;
  csv << std::setprecision(17) << "t,lhs,rhs,residual\n";
  for (const auto& row : r.rows) {
    csv << row.t << ',' << row.lhs << ',' << row.rhs << ',' << row.residual << '\n';
  }
  out.write("grafakos.csv", csv.str());
  nlohmann::json report = r.to_json();
  report["constant"] = {{"value", theorem_constants(c.p, 2.0, 1).limit}, {"name", "one-sided"}};
  return report;
}

nlohmann::json cmd_counterexample(const RunConfig& c, const Outputs&) {
  CounterexampleOptions o;
  if (c.cells > 0) o.cells_per_axis = c.cells;
  o.half_width = c.half_width;
  o.max_radius = c.max_radius;
  o.subsample = c.subsample;
  nlohmann::json report = centered_counterexample_report(o).to_json();
  report["constant"] = {{"value", 0.0}, {"name", "continuum deviation (M0 f = f)"}};
  return report;
}

// Prints a single number; a full JSON table when no constant is selected.
int cmd_constants(const RunConfig& c, std::ostream& os, const Outputs& out) {
  const auto print = [&](double v) { os << std::fixed << std::setprecision(6) << v << '\n'; };
  const TheoremConstants k = theorem_constants(c.p, std::ldexp(1.0, c.n), c.n);
  const double B = c.besicovitch.value_or(std::pow(5.0, c.n));
  nlohmann::json all = {{"p", c.p},
                        {"n", c.n},
                        {"limit", k.limit},
                        {"dyadic", k.dyadic},
                        {"uncentered", uncentered_constant(c.p, B)},
                        {"B", B}};
  if (c.lambda && *c.lambda > 1.0) all["general"] = theorem_constants(c.p, *c.lambda, c.n).general;
  if (c.lambda && *c.lambda > 0.0 && *c.lambda < 1.0) {
    all["almost_centered"] = almost_centered_bound(c.n, c.p, *c.lambda, c.eps, c.eta, B).to_json();
  }
  out.write("constants.json", all.dump(2) + "\n");
  if (c.lambda_limit) {
    print(k.limit);
  } else if (c.dyadic) {
    print(k.dyadic);
  } else if (c.lambda && *c.lambda > 1.0) {
    print(all["general"].get<double>());
  } else if (c.lambda) {
    const AlmostCenteredBound b = almost_centered_bound(c.n, c.p, *c.lambda, c.eps, c.eta, B);
    if (!b.constant) throw Error(ErrorKind::invalid_parameter, b.diagnostic);
    print(*b.constant);
  } else {
    os << all.dump(2) << '\n';
  }
  return 0;
}

std::string one_line(std::string s) {
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = {{"command", command},
                      {"grid", grid_path},
                      {"builtin", builtin},
                      {"cells", cells},
                      {"dim", dim},
                      {"op", op},
                      {"mode", mode},
                      {"p", p},
                      {"seed", seed},
                      {"out", out_dir},
                      {"tol", tol},
                      {"margin_cells", margin_cells},
                      {"refine", refine},
                      {"steps", steps},
                      {"chains", chains},
                      {"level_count", level_count},
                      {"eps", eps},
                      {"eta", eta},
                      {"lambda_limit", lambda_limit},
                      {"dyadic", dyadic},
                      {"n", n},
                      {"half_width", half_width},
                      {"max_radius", max_radius},
                      {"subsample", subsample}};
  const auto opt = [&](const char* key, const auto& v) {
    j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  opt("lambda", lambda);
  opt("min_diam", min_diam);
  opt("max_depth", max_depth);
  opt("level", level);
  opt("B", besicovitch);
  return j;
}

GridFunction load_grid(const RunConfig& c) {
  if (!c.grid_path.empty() && !c.builtin.empty()) {
    throw Error(ErrorKind::configuration, "give either --grid or --builtin, not both");
  }
  if (!c.grid_path.empty()) return read_ggrid(c.grid_path);
  if (c.builtin.empty()) throw Error(ErrorKind::configuration, "no grid: use --grid or --builtin");
  const auto cells = [&](std::size_t fallback) { return c.cells > 0 ? c.cells : fallback; };
  if (c.dim < 0 || c.dim > kMaxDim) throw Error(ErrorKind::dimension, "dim must be 1, 2 or 3");
  if (c.builtin == "indicator") {
    const int dim = c.dim > 0 ? c.dim : 1;
    // 1D: the unit interval inside [-64, 65]; otherwise the unit cube in [-3.5, 4.5]^n.
    const double lo = dim == 1 ? -64.0 : -3.5;
    const double width = dim == 1 ? 129.0 : 8.0;
    const std::size_t n = cells(dim == 1 ? 4096 : 64);
    return GridFunction::sample(cube_shape(dim, n), filled(dim, lo), width / static_cast<double>(n),
                                [dim](const Point& x) {
                                  for (int a = 0; a < dim; ++a) {
                                    if (x[a] < 0.0 || x[a] >= 1.0) return 0.0;
                                  }
                                  return 1.0;
                                });
  }
  if (c.builtin == "linear_ramp") {
    const int dim = c.dim > 0 ? c.dim : 2;
    const std::size_t n = cells(32);
    return GridFunction::sample(cube_shape(dim, n), {}, 1.0 / static_cast<double>(n),
                                [](const Point& x) { return x[0]; });
  }
  if (c.builtin == "superharmonic3d") {
    if (c.dim != 0 && c.dim != 3) throw Error(ErrorKind::dimension, "superharmonic3d is 3D");
    const std::size_t n = cells(32);
    const double L = c.half_width;
    return GridFunction::sample(cube_shape(3, n), filled(3, -L), 2.0 * L / static_cast<double>(n),
                                [](const Point& x) {
                                  const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                                  return r <= 1.0 ? 1.0 : 1.0 / r;
                                });
  }
  if (c.builtin == "random") {
    const int dim = c.dim > 0 ? c.dim : 1;
    const std::size_t n = cells(64);
    GridFunction g = GridFunction::zeros(cube_shape(dim, n), {}, 1.0 / static_cast<double>(n));
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(g.size());
    for (auto& x : v) x = u(rng);
    return g.with_values(std::move(v));
  }
  throw Error(ErrorKind::configuration, "unknown builtin '" + c.builtin + "'");
}

RatioOperator parse_operator(const RunConfig& c, int dim) {
  RatioOperator op;
  if (c.op == "dyadic") return RatioOperator::dyadic_cubes();
  if (c.op == "one-sided") return RatioOperator::one_sided_right();
  if (c.op == "uncentered-box") {
    op.spec.lambda = 1.0;
  } else if (c.op == "lambda-box") {
    op.spec.lambda = c.lambda.value_or(0.5);
  } else if (c.op == "lambda-ball2") {
    op.spec.family = BodyKind::ball2;
    op.spec.lambda = c.lambda.value_or(0.5);
  } else if (c.op == "centered-ball2") {
    op.spec.family = BodyKind::ball2;
    op.spec.lambda = 0.0;
  } else {
    throw Error(ErrorKind::configuration, "unknown operator '" + c.op + "'");
  }
  if (c.mode == "exact") {
    op.spec.mode = SearchMode::exact_small;
  } else if (c.mode == "ladder") {
    op.spec.mode = SearchMode::ladder;
  } else if (c.mode == "auto") {
    const bool exact = op.spec.family == BodyKind::box && dim <= 2;
    op.spec.mode = exact ? SearchMode::exact_small : SearchMode::ladder;
  } else {
    throw Error(ErrorKind::configuration, "unknown mode '" + c.mode + "'");
  }
  op.spec.validate();
  return op;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const Outputs files(config.out_dir);
    if (config.command == "constants") return cmd_constants(config, out, files);
    nlohmann::json report;
    if (config.command == "maximal") {
      report = cmd_maximal(config, files);
    } else if (config.command == "ratio") {
      report = cmd_ratio(config, files);
    } else if (config.command == "optimize") {
      report = cmd_optimize(config, files);
    } else if (config.command == "bellman-verify") {
      report = cmd_bellman(config, files);
    } else if (config.command == "partition") {
      report = cmd_partition(config, files);
    } else if (config.command == "cover") {
      report = cmd_cover(config, files);
    } else if (config.command == "dichotomy") {
      report = cmd_dichotomy(config, files);
    } else if (config.command == "stein") {
      report = cmd_stein(config, files);
    } else if (config.command == "grafakos") {
      report = cmd_grafakos(config, files);
    } else if (config.command == "counterexample") {
      report = cmd_counterexample(config, files);
    } else {
      throw Error(ErrorKind::configuration, "unknown command '" + config.command + "'");
    }
    const nlohmann::json doc = {{"command", config.command}, {"config", config.to_json()},
                                {"report", report}};
    files.write("report.json", doc.dump(2) + "\n");
    out << doc.dump(2) << '\n';
    return 0;
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << one_line(e.what()) << '\n';
    return 3;
  }
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical checks for lower bounds of maximal operators", "maxlab"};
  app.require_subcommand(1);
  RunConfig c;
  double lambda = 0.0, min_diam = 0.0, level = 0.0, besicovitch = 0.0;
  int max_depth = 0;
  std::vector<std::pair<CLI::App*, std::string>> subs;
  for (const auto& [name, about] : kCommands) {
    CLI::App* s = app.add_subcommand(name, about);
    subs.push_back({s, name});
    auto* grid = s->add_option("--grid", c.grid_path, ".ggrid input");
    auto* builtin = s->add_option("--builtin", c.builtin,
                                  "indicator, linear_ramp, superharmonic3d or random");
    grid->excludes(builtin);
    s->add_option("--cells", c.cells, "cells per axis for builtins and searches");
    s->add_option("--dim", c.dim, "dimension for builtins and searches");
    s->add_option("--op", c.op,
                  "uncentered-box, lambda-box, lambda-ball2, centered-ball2, dyadic, one-sided");
    s->add_option("--mode", c.mode, "exact, ladder or auto");
    s->add_option("--lambda", lambda, "operator lambda in [0, 1] or density lambda > 1");
    s->add_option("--p", c.p, "exponent");
    s->add_option("--seed", c.seed, "random seed");
    s->add_option("--out", c.out_dir, "directory for report files");
    s->add_option("--tol", c.tol, "relative tolerance");
    s->add_option("--margin", c.margin_cells, "zero cells added around the grid");
    s->add_option("--refine", c.refine, "cell refinement for norm evaluation");
    s->add_option("--steps", c.steps, "annealing steps per chain");
    s->add_option("--chains", c.chains, "annealing chains (seeds seed, seed+1, ...)");
    s->add_option("--min-diam", min_diam, "split nodes while diameter >= this");
    s->add_option("--max-depth", max_depth, "maximum tree depth");
    s->add_option("--t", level, "single level t");
    s->add_option("--levels", c.level_count, "number of levels in the ladder");
    s->add_option("--eps", c.eps, "epsilon");
    s->add_option("--eta", c.eta, "eta");
    s->add_flag("--lambda-limit", c.lambda_limit, "the lambda -> 1 constant");
    s->add_flag("--dyadic", c.dyadic, "the dyadic constant");
    s->add_option("--n", c.n, "dimension for constants");
    s->add_option("--B", besicovitch, "Besicovitch constant (default 5^n)");
    s->add_option("--half-width", c.half_width, "counterexample domain half width");
    s->add_option("--max-radius", c.max_radius, "counterexample ball radius cap");
    s->add_option("--subsample", c.subsample, "transverse lines per cell for ball quadrature");
  }
  if (!args.empty() && args[0].rfind("-", 0) != 0 &&
      std::none_of(kCommands.begin(), kCommands.end(),
                   [&](const auto& cmd) { return cmd.first == args[0]; })) {
    err << "error: configuration: unknown command '" << one_line(args[0]) << "'\n";
    return 2;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: configuration: " << one_line(e.what()) << '\n';
    return 2;
  }
  for (const auto& [s, name] : subs) {
    if (!s->parsed()) continue;
    c.command = name;
    if (s->count("--lambda")) c.lambda = lambda;
    if (s->count("--min-diam")) c.min_diam = min_diam;
    if (s->count("--max-depth")) c.max_depth = max_depth;
    if (s->count("--t")) c.level = level;
    if (s->count("--B")) c.besicovitch = besicovitch;
  }
  return run(c, out, err);
}

}  // namespace maxlab
