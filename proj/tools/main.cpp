/// robinspec: spectra of the attractive Robin Laplacian on polygons and its
/// corner/side model operators, effective-operator eigenvalue predictions,
/// and the verification harness.  Tables go to stdout as CSV (header row,
/// comma separators, '.' decimal, 17 significant digits); verdicts go to
/// stdout as JSON; progress and findings go to stderr.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "robinspec/effective.hpp"
#include "robinspec/errors.hpp"
#include "robinspec/geometry.hpp"
#include "robinspec/harness.hpp"
#include "robinspec/sectors.hpp"

namespace {

using ordered_json = nlohmann::ordered_json;
using namespace robinspec;

/// Locale-independent %.17g.
std::string fmt17(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string hex16(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string load_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) fail(ErrorCode::IoFailure, "cannot open " + path);
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out.good()) fail(ErrorCode::IoFailure, "cannot write " + path.string());
}

/// Polygon from either a built-in name ("square:1", "triangle:2", ...) or a
/// description file; exactly one of the two must be given.
CurvilinearPolygon polygon_from(const std::string& name,
                                const std::string& file) {
  if (name.empty() == file.empty())
    fail(ErrorCode::BadInput,
         "give exactly one of --polygon NAME or --polygon-file FILE");
  return name.empty() ? CurvilinearPolygon::from_spec_text(load_text(file))
                      : CurvilinearPolygon::named(name);
}

/// "a:b:steps" -> `steps` equally spaced radii from a to b inclusive.
std::vector<double> parse_r_grid(const std::string& text) {
  double a = 0.0, b = 0.0;
  int steps = 0;
  char colon1 = 0, colon2 = 0;
  std::istringstream in(text);
  in >> a >> colon1 >> b >> colon2 >> steps;
  if (!in || colon1 != ':' || colon2 != ':' || !(in >> std::ws).eof())
    fail(ErrorCode::BadInput, "--r-grid wants a:b:steps, got '" + text + "'");
  if (steps < 2 || b <= a)
    fail(ErrorCode::BadInput, "--r-grid wants b > a and steps >= 2");
  std::vector<double> grid(steps);
  for (int i = 0; i < steps; ++i)
    grid[i] = a + (b - a) * i / double(steps - 1);
  return grid;
}

const char* piece_name(PieceKind kind) {
  switch (kind) {
    case PieceKind::ConvexVertex: return "vertex";
    case PieceKind::ConcaveVertex: return "concave-vertex";
    case PieceKind::Side: return "side";
    case PieceKind::Core: return "core";
  }
  return "?";
}

/// Options shared by every sector-model computation.
struct SectorFlags {
  int refine = 0;
  bool no_richardson = false;
  std::string mesh_cache;
  unsigned seed = 24601;

  void attach(CLI::App* cmd) {
    cmd->add_option("--refine", refine, "extra mesh refinement rounds")
        ->check(CLI::Range(0, 4));
    cmd->add_flag("--no-richardson", no_richardson,
                  "single-mesh run, no extrapolation");
    cmd->add_option("--mesh-cache", mesh_cache, "mesh cache directory");
    cmd->add_option("--seed", seed, "eigensolver start-vector seed");
  }
  SectorSettings settings() const {
    SectorSettings s;
    s.refine_rounds = refine;
    s.richardson = !no_richardson;
    s.cache_dir = mesh_cache;
    s.solve.seed = seed;
    return s;
  }
};

int run_sector(double theta, double alpha, double r, const std::string& ext,
               int n, const SectorFlags& flags) {
  SectorSpectrumRequest req;
  req.theta = theta;
  req.alpha = alpha;
  req.r = r;
  req.ext_bc = ext == "D"   ? ExteriorBC::Dirichlet
               : ext == "N" ? ExteriorBC::Neumann
                            : ExteriorBC::Robin;
  req.n = n;
  const SectorSpectrum spec = sector_eigs(req, flags.settings());

  std::string csv = "theta,r,k,E_k\n";
  for (std::size_t i = 0; i < spec.values.size(); ++i)
    csv += fmt17(theta) + "," + fmt17(r) + "," + std::to_string(i + 1) + "," +
           fmt17(spec.values[i]) + "\n";
  std::fputs(csv.c_str(), stdout);

  std::fprintf(stderr, "sector: %zu levels, max residual %.2e%s\n",
               spec.values.size(), spec.max_residual,
               spec.large_alpha_r ? "" : " (alpha * r < 10: far from the asymptotic regime)");
  return 0;
}

int run_kappa(double theta, double margin, const SectorFlags& flags) {
  const CornerData data = corner_data(theta, flags.settings(), margin);
  ordered_json rec;
  rec["theta"] = data.theta;
  rec["kappa"] = data.kappa;
  rec["energies"] = data.energies;
  rec["uncertainty"] = data.uncertainty;
  std::fputs((rec.dump(2) + "\n").c_str(), stdout);
  return 0;
}

int run_nonres(double theta, const std::string& grid_text, double margin,
               const SectorFlags& flags) {
  const std::vector<double> grid = parse_r_grid(grid_text);
  const NonresonanceReport rep =
      nonresonance(theta, grid, margin, flags.settings());

  ordered_json rec;
  rec["theta"] = rep.theta;
  rec["kappa"] = rep.kappa;
  rec["verdict"] = rep.verdict == NonresonanceReport::Verdict::Nonresonant
                       ? "nonresonant"
                   : rep.verdict == NonresonanceReport::Verdict::Resonant
                       ? "resonant"
                       : "inconclusive";
  rec["c_fit"] = rep.c_fit;
  rec["p_fit"] = rep.p_fit;
  rec["r_squared"] = rep.r_squared;
  ordered_json points = ordered_json::array();
  for (std::size_t i = 0; i < rep.r.size(); ++i)
    points.push_back({{"r", rep.r[i]},
                      {"gap", rep.gap[i]},
                      {"gap_error", rep.gap_error[i]},
                      {"in_fit", rep.in_fit[i] != 0}});
  rec["points"] = points;
  std::fputs((rec.dump(2) + "\n").c_str(), stdout);
  return rep.verdict == NonresonanceReport::Verdict::Inconclusive ? 2 : 0;
}

int run_predict(const CurvilinearPolygon& poly, double alpha,
                const std::string& formula_token, int n, bool verified,
                const SectorFlags& flags) {
  const Prediction pred =
      predict(poly, alpha, n, formula_from_token(formula_token),
              verified ? NonresonanceAttestation::Verified
                       : NonresonanceAttestation::Asserted,
              flags.settings());

  std::string csv = "n,predicted,formula,remainder\n";
  int k = 0;
  for (const CornerLevel& level : pred.corner_levels)
    csv += std::to_string(++k) + "," + fmt17(level.value) + "," +
           to_token(pred.formula) + "," + to_string(pred.remainder) + "\n";
  for (const SideLevel& level : pred.side_levels)
    csv += std::to_string(++k) + "," + fmt17(level.value) + "," +
           to_token(pred.formula) + "," + to_string(pred.remainder) + "\n";
  std::fputs(csv.c_str(), stdout);

  std::fprintf(stderr,
               "predict: %zu corner + %zu side levels, non-resonance %s\n",
               pred.corner_levels.size(), pred.side_levels.size(),
               pred.attestation == NonresonanceAttestation::Verified
                   ? "verified"
                   : "asserted");
  if (!pred.neumann_variant.empty())
    std::fprintf(stderr,
                 "predict: Dirichlet/Neumann variant gap %.6g (the formula's "
                 "own O(1) scale)\n",
                 pred.variant_gap);
  return 0;
}

int run_verify(const std::string& config_path, const std::string& out_dir,
               const std::string& mesh_cache) {
  ExperimentConfig cfg = parse_experiment_config(load_text(config_path));
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (!mesh_cache.empty()) {
    cfg.mesh_cache = mesh_cache;
    cfg.sectors.cache_dir = mesh_cache;
  }

  const ResultTable table = run_experiment(cfg);
  std::fputs(to_csv(table).c_str(), stdout);

  for (const std::string& flag : table.flags)
    std::fprintf(stderr, "finding: %s\n", flag.c_str());
  std::fprintf(stderr, "verify: %zu rows, %d corner levels, %zu fits%s\n",
               table.rows.size(), table.corner_count, table.fits.size(),
               table.complete ? "" : ", INCOMPLETE");
  if (!cfg.out_dir.empty())
    std::fprintf(stderr, "verify: wrote %s/{results.csv,fits.csv,manifest.json}\n",
                 cfg.out_dir.c_str());
  return table.complete ? 0 : 1;
}

int run_bracket(const CurvilinearPolygon& poly, double alpha, double delta,
                const BracketOptions& opts, const std::string& polygon_label,
                const std::string& out_dir) {
  const BracketReport rep = bracket_check(poly, alpha, delta, opts);

  std::string csv = "k,lower,lower_budget,fem,fem_budget,upper,upper_budget\n";
  for (int i = 0; i < rep.n; ++i)
    csv += std::to_string(i + 1) + "," + fmt17(rep.lower[i]) + "," +
           fmt17(rep.lower_budget[i]) + "," + fmt17(rep.fem[i]) + "," +
           fmt17(rep.fem_budget[i]) + "," + fmt17(rep.upper[i]) + "," +
           fmt17(rep.upper_budget[i]) + "\n";
  std::fputs(csv.c_str(), stdout);

  for (const std::string& v : rep.violations)
    std::fprintf(stderr, "violation: %s\n", v.c_str());
  std::fprintf(stderr,
               "bracket: %s, %d corner levels, cluster separation %.6g\n",
               rep.all_hold ? "all inequalities hold within budget"
                            : "VIOLATED beyond budget",
               rep.corner_count, rep.cluster_separation);

  if (!out_dir.empty()) {
    ordered_json manifest;
    manifest["library"] = std::string("robinspec ") + kVersion;
    manifest["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION);
    manifest["polygon"] = polygon_label;
    manifest["alpha"] = rep.alpha;
    manifest["delta"] = rep.delta;
    manifest["n"] = rep.n;
    manifest["seed"] = opts.solve.seed;
    manifest["domain_mesh"] = hex16(rep.domain_mesh_id);
    ordered_json pieces = ordered_json::array();
    for (const PieceSpectrum& ps : rep.pieces)
      pieces.push_back({{"kind", piece_name(ps.kind)},
                        {"index", ps.index},
                        {"mesh", hex16(ps.mesh_id)}});
    manifest["pieces"] = pieces;
    manifest["corner_count"] = rep.corner_count;
    manifest["all_hold"] = rep.all_hold;
    manifest["violations"] = rep.violations;

    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::IoFailure, "cannot create " + out_dir);
    write_file(dir / "bracket.csv", csv);
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    std::fprintf(stderr, "bracket: wrote %s/{bracket.csv,manifest.json}\n",
                 out_dir.c_str());
  }
  return rep.all_hold ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Spectra of the attractive Robin Laplacian on polygons: model "
      "operators, effective-operator predictions, and verification runs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("robinspec ") + kVersion);

  // ---- sector ----
  auto* sector = app.add_subcommand(
      "sector", "Eigenvalues of a truncated corner sector (CSV)");
  double s_theta = 0.0, s_alpha = 1.0, s_r = 20.0;
  std::string s_ext = "D";
  int s_n = 1;
  SectorFlags s_flags;
  sector->add_option("--theta", s_theta, "half-angle in (0, pi/2)")->required();
  sector->add_option("--alpha", s_alpha, "Robin coupling on the radii");
  sector->add_option("--r", s_r, "truncation radius");
  sector->add_option("--ext", s_ext, "far-boundary condition")
      ->check(CLI::IsMember({"D", "N", "R"}));
  sector->add_option("-n,--levels", s_n, "number of eigenvalues")
      ->check(CLI::PositiveNumber);
  s_flags.attach(sector);

  // ---- kappa ----
  auto* kappa = app.add_subcommand(
      "kappa", "Number and energies of the corner-induced states (JSON)");
  double k_theta = 0.0, k_margin = 0.05;
  SectorFlags k_flags;
  kappa->add_option("--theta", k_theta, "half-angle in (0, pi)")->required();
  kappa->add_option("--margin", k_margin, "threshold margin below -1");
  k_flags.attach(kappa);

  // ---- nonres ----
  auto* nonres = app.add_subcommand(
      "nonres", "Non-resonance verdict for a half-angle (JSON)");
  double nr_theta = 0.0, nr_margin = 0.05;
  std::string nr_grid;
  SectorFlags nr_flags;
  nonres->add_option("--theta", nr_theta, "half-angle in (0, pi/2)")->required();
  nonres->add_option("--r-grid", nr_grid, "truncation radii as a:b:steps")
      ->required();
  nonres->add_option("--margin", nr_margin, "negative-gap tolerance");
  nr_flags.attach(nonres);

  // ---- predict ----
  auto* predict_cmd = app.add_subcommand(
      "predict", "Effective-operator eigenvalue predictions (CSV)");
  std::string p_polygon, p_polygon_file, p_formula = "thm1";
  double p_alpha = 0.0;
  int p_n = 4;
  bool p_verified = false;
  SectorFlags p_flags;
  predict_cmd->add_option("--polygon", p_polygon, "built-in polygon name");
  predict_cmd->add_option("--polygon-file", p_polygon_file,
                          "polygon description file");
  predict_cmd->add_option("--alpha", p_alpha, "Robin coupling")->required();
  predict_cmd->add_option("--formula", p_formula, "side-level formula")
      ->check(CLI::IsMember({"thm1", "thm2", "thm3"}));
  predict_cmd->add_option("-n,--levels", p_n, "side levels to predict")
      ->check(CLI::NonNegativeNumber);
  predict_cmd->add_flag("--verified", p_verified,
                        "attest non-resonance as verified, not just asserted");
  p_flags.attach(predict_cmd);

  // ---- verify ----
  auto* verify = app.add_subcommand(
      "verify", "Run a verification experiment from a config file (CSV)");
  std::string v_config, v_out, v_cache;
  verify->add_option("--config", v_config, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("--out", v_out, "output directory (overrides config)");
  verify->add_option("--mesh-cache", v_cache,
                     "mesh cache directory (overrides config)");

  // ---- bracket ----
  auto* bracket = app.add_subcommand(
      "bracket", "Dirichlet--Neumann bracketing of the spectrum (CSV)");
  std::string b_polygon, b_polygon_file, b_out, b_cache;
  double b_alpha = 0.0, b_delta = 0.0;
  int b_n = 8, b_refine = 0;
  unsigned b_seed = 24601;
  bracket->add_option("--polygon", b_polygon, "built-in polygon name");
  bracket->add_option("--polygon-file", b_polygon_file,
                      "polygon description file");
  bracket->add_option("--alpha", b_alpha, "Robin coupling")->required();
  bracket->add_option("--delta", b_delta, "decomposition width")->required();
  bracket->add_option("-n,--levels", b_n, "levels to bracket")
      ->check(CLI::PositiveNumber);
  bracket->add_option("--refine", b_refine, "extra mesh refinement rounds")
      ->check(CLI::Range(0, 4));
  bracket->add_option("--mesh-cache", b_cache, "mesh cache directory");
  bracket->add_option("--seed", b_seed, "eigensolver start-vector seed");
  bracket->add_option("--out", b_out, "output directory for CSV + manifest");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sector->parsed())
      return run_sector(s_theta, s_alpha, s_r, s_ext, s_n, s_flags);
    if (kappa->parsed()) return run_kappa(k_theta, k_margin, k_flags);
    if (nonres->parsed())
      return run_nonres(nr_theta, nr_grid, nr_margin, nr_flags);
    if (predict_cmd->parsed())
      return run_predict(polygon_from(p_polygon, p_polygon_file), p_alpha,
                         p_formula, p_n, p_verified, p_flags);
    if (verify->parsed()) return run_verify(v_config, v_out, v_cache);
    if (bracket->parsed()) {
      BracketOptions opts;
      opts.n = b_n;
      opts.mesh.refine_rounds = b_refine;
      opts.solve.seed = b_seed;
      opts.mesh_cache = b_cache;
      opts.throw_on_violation = false;
      return run_bracket(polygon_from(b_polygon, b_polygon_file), b_alpha,
                         b_delta, opts,
                         b_polygon.empty() ? b_polygon_file : b_polygon, b_out);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
