#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"

#include "conemorse/chain.hpp"
#include "conemorse/error.hpp"
#include "conemorse/io.hpp"
#include "conemorse/morse.hpp"
#include "conemorse/parallel.hpp"
#include "conemorse/random.hpp"
#include "conemorse/sphere.hpp"

namespace {

using namespace conemorse;
using io::Json;
using linalg::RealMatrix;

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSchemaError:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidRanks:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kNonFiniteEntry:
    case ErrorCode::kBoundaryNotSquareZero:
    case ErrorCode::kLeibnizViolation:
    case ErrorCode::kNotAChainMap:
      return kExitValidation;
    default:
      return kExitNumerical;
  }
}

struct Output {
  std::string path;
  std::string format = "json";

  void write(const std::string& text) const {
    if (path.empty()) {
      std::cout << text;
      return;
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + path + "'");
    out << text;
  }
};

Json matrix_json(const RealMatrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

morse::MorseOptions sphere_options(const RealMatrix& cpsi, bool numeric) {
  morse::MorseOptions opts;
  opts.rank_tol = 1e-6 * std::max(1.0, cpsi.max_abs());
  opts.leibniz_tol = numeric ? 1e-4 : 1e-8;
  return opts;
}

/// Localised bump one-form along the flow lines p2+ -> p1+ and p1+ -> p0+.
sphere::OneForm bump_pair_alpha(double amplitude) {
  const double h = std::numbers::sqrt2 / 2.0;
  return sphere::OneForm::bumps({{{0, h, h}, amplitude * sphere::Vec3{0, h, -h}, 0.2},
                                 {{h, h, 0}, amplitude * sphere::Vec3{h, -h, 0}, 0.2}},
                                "bump_alpha");
}

struct S2Config {
  std::string family = "s";
  double param = 0.5;
  bool param_set = false;
  std::string mode = "analytic";
  std::string grid = "256x512";
  double step = 1e-3;
  double stop_radius = 1e-3;
  std::string moduli_csv;
};

std::pair<std::size_t, std::size_t> parse_grid(const std::string& g) {
  const auto x = g.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(g);
    return {std::stoul(g.substr(0, x)), std::stoul(g.substr(x + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidArgument, "grid must look like 256x512");
  }
}

int cmd_s2_example(const S2Config& cfg, const Output& out) {
  using namespace sphere;
  const bool want_analytic = cfg.mode != "numeric";
  const bool want_numeric = cfg.mode != "analytic";

  SurfaceScene scene;
  TwoForm psi;
  double param = cfg.param;
  std::optional<OneForm> alpha;
  if (cfg.family == "s") {
    psi = TwoForm::family_s(param);
  } else if (cfg.family == "t") {
    psi = TwoForm::family_t(param);
  } else if (cfg.family == "metric-eps") {
    if (!cfg.param_set) param = 0.2;
    scene = SurfaceScene::perturbed(param);
    psi = TwoForm::volume();
    if (want_analytic) {
      throw Error(ErrorCode::kInvalidArgument, "metric-eps has no closed form; use --mode numeric");
    }
  } else if (cfg.family == "exact-alpha") {
    if (!cfg.param_set) param = 1.0;
    alpha = bump_pair_alpha(param);
    psi = alpha->d();
  } else if (cfg.family == "perfect") {
    scene.function = MorseFunctionKind::kHeight;
    psi = TwoForm::family_s(param);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown family '" + cfg.family + "'");
  }
  const auto [n_phi, n_theta] = parse_grid(cfg.grid);
  scene.n_phi = n_phi;
  scene.n_theta = n_theta;
  scene.ode.step = cfg.step;
  scene.ode.stop_radius = cfg.stop_radius;
  scene.validate();

  Json j;
  j["command"] = "s2-example";
  j["family"] = cfg.family;
  j["param"] = param;
  j["mode"] = cfg.mode;
  j["grid"] = {n_phi, n_theta};

  std::optional<RealMatrix> analytic;
  std::optional<ExactFormReport> factorization;
  if (want_analytic) {
    if (cfg.family == "s") analytic = analytic_cpsi(Family::kS, param);
    if (cfg.family == "t") analytic = analytic_cpsi(Family::kT, param);
    if (cfg.family == "perfect") analytic = RealMatrix::from_rows({{4.0 * std::numbers::pi * param}});
  }
  if (alpha) {
    factorization = exact_form_cpsi(*alpha, scene);
    if (want_analytic) analytic = factorization->c;
  }

  std::optional<ModuliDecomposition> decomp;
  std::optional<RealMatrix> numeric;
  double error_estimate = 0.0;
  if (want_numeric) {
    decomp = classify_moduli(scene);
    const auto integrals = integrate_over_moduli(*decomp, psi);
    numeric = moduli_matrix(integrals, decomp->points);
    error_estimate = max_error(integrals);
    if (!cfg.moduli_csv.empty()) {
      std::ofstream csv(cfg.moduli_csv);
      if (!csv) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + cfg.moduli_csv + "'");
      write_decomposition_csv(*decomp, csv);
    }
  } else {
    // Only the critical points and flow lines are needed.
    decomp.emplace();
    decomp->points = critical_points(scene);
  }

  Json c;
  c["analytic"] = analytic ? matrix_json(*analytic) : Json(nullptr);
  c["numeric"] = numeric ? matrix_json(*numeric) : Json(nullptr);
  c["error_estimate"] = numeric ? Json(error_estimate) : Json(nullptr);
  bool agree = true;
  if (analytic && numeric) {
    const double diff = linalg::max_abs_diff(*analytic, *numeric);
    const double scale = analytic->max_abs();
    c["max_abs_difference"] = diff;
    c["max_relative_difference"] = diff / std::max(scale, 1e-300);
    agree = diff <= 0.01 * scale + 1e-9;
    c["agree_within_1pct"] = agree;
  }
  j["c_psi"] = c;

  if (decomp) {
    Json regions = Json::array();
    if (numeric) {
      for (const auto& r : region_areas(*decomp)) {
        regions.push_back({{"from", r.from}, {"to", r.to}, {"area", r.area}});
      }
      j["separatrix_cells"] = decomp->separatrix_cells;
    }
    j["regions"] = regions;
  }
  if (factorization) {
    Json f;
    Json lines;
    for (const auto& [k, v] : factorization->line_integrals) lines[k] = v;
    f["line_integrals"] = lines;
    f["meridian"] = factorization->meridian;
    f["equator"] = factorization->equator;
    f["determinant"] = factorization->determinant;
    f["product"] = factorization->product;
    j["factorization"] = f;
  }

  MorseDataOptions mopts;
  if (!numeric) mopts.cpsi = analytic;
  const RealMatrix& used = numeric ? *numeric : *analytic;
  const auto data = scene_to_morse_data(scene, *decomp, psi, mopts);
  const auto report = morse::inequality_report(data, sphere_options(used, numeric.has_value()));
  j["morse_data"] = io::morse_data_to_json(data);
  j["report"] = io::report_to_json(report);

  out.write(out.format == "csv" ? io::report_to_csv(report) : j.dump(2) + "\n");
  if (!agree) {
    std::cerr << "error: analytic and numeric c(psi) disagree by more than 1%\n";
    return kExitNumerical;
  }
  morse::require_consistent(report);
  return 0;
}

int cmd_morse_report(const std::string& input, const Output& out) {
  const auto data = io::read_morse_data(input);
  morse::MorseOptions opts;
  const auto report = morse::inequality_report(data, opts);
  out.write(out.format == "csv" ? io::report_to_csv(report)
                                : io::report_to_json(report).dump(2) + "\n");
  morse::require_consistent(report);
  return 0;
}

struct RandConfig {
  int trials = 100;
  std::uint64_t seed = 0;
  int max_degrees = 6;
  int max_dim = 5;
  std::vector<int> ells{0, 1, 2, 3};
};

int cmd_randcheck(const RandConfig& cfg, const Output& out) {
  if (cfg.trials < 0) throw Error(ErrorCode::kInvalidArgument, "trials must be non-negative");
  if (cfg.max_degrees < 1 || cfg.max_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max-degrees and max-dim must be positive");
  }
  if (cfg.ells.empty()) throw Error(ErrorCode::kInvalidArgument, "ell list must be non-empty");
  for (int ell : cfg.ells) {
    if (ell < 0) throw Error(ErrorCode::kInvalidArgument, "ell must be non-negative");
  }
  struct Row {
    std::uint64_t seed = 0;
    int ell = 0;
    bool degenerate = false, splitting = false, cokernel = false, les = false;
    std::string error;
  };
  std::vector<Row> rows(static_cast<std::size_t>(cfg.trials));
  parallel_for(rows.size(), [&](std::size_t i) {
    Row& r = rows[i];
    r.seed = mix_seed(cfg.seed, i);
    r.ell = cfg.ells[i % cfg.ells.size()];
    try {
      const auto m = chain::random_commuting_map(r.seed, cfg.max_degrees, cfg.max_dim, r.ell);
      r.degenerate = m.degenerate;
      r.splitting = chain::splitting_check(m.map).holds;
      r.cokernel = chain::cokernel_cone_iso_check(m.map).holds;
      r.les = chain::les_exactness_check(m.map).holds;
    } catch (const Error& e) {
      r.error = e.what();
    }
  });

  Json j;
  j["command"] = "randcheck";
  j["seed"] = cfg.seed;
  j["trials"] = cfg.trials;
  j["max_degrees"] = cfg.max_degrees;
  j["max_dim"] = cfg.max_dim;
  j["ells"] = cfg.ells;
  Json list = Json::array();
  Json failing = Json::array();
  int passed = 0;
  std::string csv = "trial,seed,ell,degenerate,splitting,cokernel_cone_iso,les_exactness,pass\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    const bool pass = r.error.empty() && r.splitting && r.cokernel && r.les;
    passed += pass;
    if (!pass) failing.push_back(r.seed);
    Json row{{"trial", i},
             {"seed", r.seed},
             {"ell", r.ell},
             {"degenerate", r.degenerate},
             {"splitting", r.splitting},
             {"cokernel_cone_iso", r.cokernel},
             {"les_exactness", r.les},
             {"pass", pass}};
    if (!r.error.empty()) row["error"] = r.error;
    list.push_back(row);
    std::ostringstream line;
    line << i << ',' << r.seed << ',' << r.ell << ',' << r.degenerate << ',' << r.splitting << ','
         << r.cokernel << ',' << r.les << ',' << pass << '\n';
    csv += line.str();
  }
  j["passed"] = passed;
  j["failed"] = cfg.trials - passed;
  j["failing_seeds"] = failing;
  j["results"] = list;
  out.write(out.format == "csv" ? csv : j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cone Morse inequalities: sphere examples, Morse data reports, random checks"};
  app.require_subcommand(1);

  Output out;
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--format", out.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", out.path, "write to this file instead of stdout");
  };

  S2Config s2;
  auto* s2_cmd = app.add_subcommand("s2-example", "run a two-sphere example");
  s2_cmd->add_option("--family", s2.family, "s, t, metric-eps, exact-alpha or perfect")
      ->check(CLI::IsMember({"s", "t", "metric-eps", "exact-alpha", "perfect"}));
  auto* param_opt = s2_cmd->add_option("--param", s2.param, "family parameter");
  s2_cmd->add_option("--mode", s2.mode, "analytic, numeric or both")
      ->check(CLI::IsMember({"analytic", "numeric", "both"}));
  s2_cmd->add_option("--grid", s2.grid, "n_phi x n_theta, e.g. 256x512");
  s2_cmd->add_option("--step", s2.step, "RK4 step");
  s2_cmd->add_option("--stop-radius", s2.stop_radius, "distance at which a trajectory stops");
  s2_cmd->add_option("--moduli-csv", s2.moduli_csv, "dump the cell classification as CSV");
  add_output(s2_cmd);

  std::string input;
  auto* report_cmd = app.add_subcommand("morse-report", "report on a MorseData JSON file");
  report_cmd->add_option("input", input, "MorseData JSON")->required();
  add_output(report_cmd);

  RandConfig rc;
  auto* rand_cmd = app.add_subcommand("randcheck", "cone lemmas on random commuting maps");
  rand_cmd->add_option("--trials", rc.trials, "number of maps");
  rand_cmd->add_option("--seed", rc.seed, "base seed")->required();
  rand_cmd->add_option("--max-degrees", rc.max_degrees, "degrees per complex");
  rand_cmd->add_option("--max-dim", rc.max_dim, "dimension per degree");
  rand_cmd->add_option("--ell", rc.ells, "map degrees, e.g. --ell 0,1,2,3")->delimiter(',');
  add_output(rand_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    s2.param_set = param_opt->count() > 0;
    if (s2_cmd->parsed()) return cmd_s2_example(s2, out);
    if (report_cmd->parsed()) return cmd_morse_report(input, out);
    if (rand_cmd->parsed()) return cmd_randcheck(rc, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitValidation;
}
