#include "robinspec/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "robinspec/errors.hpp"

namespace robinspec {

namespace {

/// Locale-independent "%.17g" (the CSV/manifest number contract).
std::string fmt17(double x) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string fmt_hash(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x",
                        static_cast<unsigned>(static_cast<unsigned char>(c)));
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double_tok(const std::string& key, const std::string& tok) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size())
      fail(ErrorCode::BadInput, "config key '" + key + "': trailing characters in '" + tok + "'");
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::BadInput, "config key '" + key + "': cannot parse number '" + tok + "'");
  }
}

int parse_int_tok(const std::string& key, const std::string& tok) {
  const double v = parse_double_tok(key, tok);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    fail(ErrorCode::BadInput, "config key '" + key + "': expected an integer, got '" + tok + "'");
  return i;
}

bool parse_bool_tok(const std::string& key, const std::string& tok) {
  if (tok == "1" || tok == "true" || tok == "on") return true;
  if (tok == "0" || tok == "false" || tok == "off") return false;
  fail(ErrorCode::BadInput, "config key '" + key + "': expected a boolean, got '" + tok + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == ',') {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// Corner-vs-side cluster threshold -alpha^2 (1 + margin).
constexpr double kClusterMargin = 0.2;

/// Eigenvalues on a base mesh and its red refinement, Richardson
/// extrapolated; the coarse-fine difference (a conservative ~3x bound on
/// what the extrapolation leaves behind) is kept as the per-level budget.
struct TwoMeshEigs {
  std::vector<double> values;
  std::vector<double> budget;
  double residual = 0.0;
  std::uint64_t request = 0;
  std::uint64_t coarse_hash = 0;
  std::uint64_t fine_hash = 0;
  int nodes_coarse = 0;
  int nodes_fine = 0;
};

TwoMeshEigs two_mesh_eigs(const TaggedRegion& region, double alpha, int n,
                          MeshParams params, const AssemblyPolicy& policy,
                          const SolveOpts& opts, const std::string& cache_dir) {
  params.alpha = alpha;
  const Mesh coarse = cache_dir.empty()
                          ? mesh_region(region, params)
                          : mesh_region_cached(region, params, cache_dir);
  const Mesh fine = refine_red(coarse);

  TwoMeshEigs out;
  out.request = mesh_request_hash(region, params);
  out.coarse_hash = coarse.content_hash();
  out.fine_hash = fine.content_hash();
  out.nodes_coarse = static_cast<int>(coarse.nodes.size());
  out.nodes_fine = static_cast<int>(fine.nodes.size());

  const FemSystem sys_c = assemble(coarse, alpha, policy);
  const FemSystem sys_f = assemble(fine, alpha, policy);
  const int nc = std::min(n, sys_c.ndof);
  const int nf = std::min(n, sys_f.ndof);
  const EigResult res_c = lowest_eigs(sys_c, nc, opts);
  const EigResult res_f = lowest_eigs(sys_f, nf, opts);
  out.residual = res_f.max_residual;

  out.values.resize(nf);
  out.budget.resize(nf);
  for (int i = 0; i < nf; ++i) {
    const double f = res_f.values[i];
    if (i < nc) {
      const double c = res_c.values[i];
      out.values[i] = f + (f - c) / 3.0;
      out.budget[i] = std::abs(f - c) + 1e-10 * (1.0 + std::abs(f));
    } else {
      out.values[i] = f;  // coarse mesh too small to pair up: no extrapolation
      out.budget[i] = 0.25 * std::abs(f) + 1.0;
    }
  }
  return out;
}

double model_value(RemainderModel model, double alpha) {
  switch (model) {
    case RemainderModel::LogOverSqrtAlpha: return std::log(alpha) / std::sqrt(alpha);
    case RemainderModel::InverseAlpha: return 1.0 / alpha;
    case RemainderModel::Constant: return 1.0;
  }
  return 1.0;
}

/// Logarithmic decay rate -d log(model) / d log(alpha) at this alpha.
double model_slope(RemainderModel model, double alpha) {
  switch (model) {
    case RemainderModel::LogOverSqrtAlpha: return 0.5 - 1.0 / std::log(alpha);
    case RemainderModel::InverseAlpha: return 1.0;
    case RemainderModel::Constant: return 0.0;
  }
  return 0.0;
}

RemainderModel model_for(RemainderClass cls) {
  switch (cls) {
    case RemainderClass::LogOverSqrt: return RemainderModel::LogOverSqrtAlpha;
    case RemainderClass::OrderOne: return RemainderModel::Constant;
    case RemainderClass::Vanishing: return RemainderModel::InverseAlpha;
  }
  return RemainderModel::Constant;
}

}  // namespace

double delta_for(DeltaRule rule, double value, double alpha) {
  if (alpha <= 0.0) fail(ErrorCode::BadInput, "delta_for: alpha must be positive");
  switch (rule) {
    case DeltaRule::Fixed: return value;
    case DeltaRule::LogOverAlpha: return value * std::log(alpha) / alpha;
    case DeltaRule::PowerLaw: return std::pow(alpha, -value);
  }
  fail(ErrorCode::BadInput, "delta_for: unknown rule");
}

const char* to_token(DeltaRule rule) noexcept {
  switch (rule) {
    case DeltaRule::Fixed: return "fixed";
    case DeltaRule::LogOverAlpha: return "log";
    case DeltaRule::PowerLaw: return "power";
  }
  return "?";
}

DeltaRule delta_rule_from_token(const std::string& token) {
  if (token == "fixed") return DeltaRule::Fixed;
  if (token == "log") return DeltaRule::LogOverAlpha;
  if (token == "power") return DeltaRule::PowerLaw;
  fail(ErrorCode::BadInput, "unknown delta rule '" + token + "' (expected fixed | log | power)");
}

const char* to_token(RemainderModel model) noexcept {
  switch (model) {
    case RemainderModel::LogOverSqrtAlpha: return "logsqrt";
    case RemainderModel::InverseAlpha: return "inverse";
    case RemainderModel::Constant: return "const";
  }
  return "?";
}

RemainderModel remainder_model_from_token(const std::string& token) {
  if (token == "logsqrt") return RemainderModel::LogOverSqrtAlpha;
  if (token == "inverse") return RemainderModel::InverseAlpha;
  if (token == "const") return RemainderModel::Constant;
  fail(ErrorCode::BadInput,
       "unknown remainder model '" + token + "' (expected logsqrt | inverse | const)");
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::BadInput,
           "config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      fail(ErrorCode::BadInput,
           "config line " + std::to_string(lineno) + ": empty key or value");
    if (!seen.insert(key).second)
      fail(ErrorCode::BadInput, "config: duplicate key '" + key + "'");

    if (key == "polygon") {
      cfg.polygon = val;
    } else if (key == "alphas") {
      cfg.alphas.clear();
      for (const std::string& tok : split_list(val))
        cfg.alphas.push_back(parse_double_tok(key, tok));
    } else if (key == "delta_rule") {
      cfg.delta_rule = delta_rule_from_token(val);
    } else if (key == "delta_value") {
      cfg.delta_value = parse_double_tok(key, val);
    } else if (key == "n_max") {
      cfg.n_max = parse_int_tok(key, val);
    } else if (key == "formula") {
      cfg.formula = formula_from_token(val);
    } else if (key == "attestation") {
      if (val == "verified")
        cfg.attestation = NonresonanceAttestation::Verified;
      else if (val == "asserted")
        cfg.attestation = NonresonanceAttestation::Asserted;
      else
        fail(ErrorCode::BadInput,
             "config key 'attestation': expected verified | asserted, got '" + val + "'");
    } else if (key == "seed") {
      cfg.seed = parse_int_tok(key, val);
    } else if (key == "out") {
      cfg.out_dir = val;
    } else if (key == "mesh_cache") {
      cfg.mesh_cache = val;
      cfg.sectors.cache_dir = val;
    } else if (key == "h_interior") {
      cfg.mesh.h_interior = parse_double_tok(key, val);
    } else if (key == "h_wall_factor") {
      cfg.mesh.h_wall_factor = parse_double_tok(key, val);
    } else if (key == "min_angle_deg") {
      cfg.mesh.min_angle_deg = parse_double_tok(key, val);
    } else if (key == "max_nodes") {
      cfg.mesh.max_nodes = parse_int_tok(key, val);
    } else if (key == "refine_rounds") {
      cfg.mesh.refine_rounds = parse_int_tok(key, val);
    } else if (key == "solver_tol") {
      cfg.solve.tol = parse_double_tok(key, val);
    } else if (key == "solver_block") {
      cfg.solve.block = parse_int_tok(key, val);
    } else if (key == "solver_max_basis") {
      cfg.solve.max_basis = parse_int_tok(key, val);
    } else if (key == "corner_refine_rounds") {
      cfg.sectors.refine_rounds = parse_int_tok(key, val);
    } else if (key == "corner_richardson") {
      cfg.sectors.richardson = parse_bool_tok(key, val);
    } else if (key == "corner_tol") {
      cfg.sectors.solve.tol = parse_double_tok(key, val);
    } else {
      fail(ErrorCode::BadInput, "config: unknown key '" + key + "'");
    }
  }
  return cfg;
}

RemainderFit remainder_fit(const ResultTable& table, RemainderModel model, int k) {
  if (k < 1) fail(ErrorCode::BadInput, "remainder_fit: level index k must be >= 1");

  struct Point {
    double alpha, gap, budget;
  };
  std::vector<Point> pts;
  for (const ResultRow& row : table.rows)
    if (row.k == k) pts.push_back({row.alpha, std::abs(row.gap), row.budget});

  std::vector<Point> used;
  for (const Point& p : pts)
    if (p.gap > 10.0 * p.budget) used.push_back(p);
  if (used.size() < 3)
    fail(ErrorCode::InsufficientSignal,
         "remainder_fit at level " + std::to_string(k) + ": " +
             std::to_string(used.size()) + " of " + std::to_string(pts.size()) +
             " alpha points have |gap| above 10x the FEM budget (need 3)");

  RemainderFit fit;
  fit.model = model;
  fit.k = k;
  fit.points = static_cast<int>(used.size());

  // One-parameter coefficient: least squares of |gap| against model(alpha).
  double smm = 0.0, smg = 0.0, mean_g = 0.0;
  for (const Point& p : used) {
    const double m = model_value(model, p.alpha);
    if (!(m > 0.0))
      fail(ErrorCode::BadInput, "remainder_fit: model is not positive at alpha = " +
                                    fmt17(p.alpha));
    smm += m * m;
    smg += m * p.gap;
    mean_g += p.gap;
  }
  mean_g /= static_cast<double>(used.size());
  fit.coefficient = smg / smm;
  double ss_res = 0.0, ss_tot = 0.0;
  for (const Point& p : used) {
    const double m = model_value(model, p.alpha);
    ss_res += (p.gap - fit.coefficient * m) * (p.gap - fit.coefficient * m);
    ss_tot += (p.gap - mean_g) * (p.gap - mean_g);
  }
  fit.r_squared = ss_tot > 1e-300 ? 1.0 - ss_res / ss_tot
                                  : (ss_res <= 1e-300 ? 1.0 : 0.0);

  // Free power law |gap| ~ alpha^-p by log-log regression, with the standard
  // error of the slope as the confidence input to the consistency verdict.
  const int n = static_cast<int>(used.size());
  double xbar = 0.0, ybar = 0.0;
  std::vector<double> xs(n), ys(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = std::log(used[i].alpha);
    ys[i] = std::log(used[i].gap);
    xbar += xs[i];
    ybar += ys[i];
  }
  xbar /= n;
  ybar /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  if (sxx <= 0.0)
    fail(ErrorCode::BadInput, "remainder_fit: alpha grid is degenerate");
  const double slope = sxy / sxx;
  fit.exponent = -slope;
  double ssr = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = ys[i] - (ybar + slope * (xs[i] - xbar));
    ssr += r * r;
  }
  fit.sigma = n > 2 ? std::sqrt(ssr / static_cast<double>(n - 2) / sxx) : 0.0;

  double target = 0.0;
  for (const Point& p : used) target += model_slope(model, p.alpha);
  target /= static_cast<double>(used.size());
  fit.consistent = fit.exponent + 2.0 * fit.sigma >= target - 1e-9;
  return fit;
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
  if (cfg.alphas.empty()) fail(ErrorCode::BadInput, "experiment: empty alpha grid");
  for (std::size_t i = 0; i < cfg.alphas.size(); ++i) {
    if (cfg.alphas[i] <= 0.0)
      fail(ErrorCode::BadInput, "experiment: alpha values must be positive");
    if (i > 0 && cfg.alphas[i] <= cfg.alphas[i - 1])
      fail(ErrorCode::BadInput, "experiment: alpha grid must be strictly increasing");
  }
  if (cfg.n_max < 0) fail(ErrorCode::BadInput, "experiment: n_max must be >= 0");
  const double delta0 = delta_for(cfg.delta_rule, cfg.delta_value, cfg.alphas.front());
  if (cfg.alphas.front() * delta0 < 5.0 - 1e-12)
    fail(ErrorCode::BadInput,
         "experiment: delta rule gives alpha * delta = " +
             fmt17(cfg.alphas.front() * delta0) +
             " < 5 at the smallest alpha (outside the asymptotic regime)");

  const CurvilinearPolygon poly = CurvilinearPolygon::named(cfg.polygon);
  const TaggedRegion region = poly.as_region(cfg.polygon);

  ResultTable table;
  table.config = cfg;
  SolveOpts solve = cfg.solve;
  solve.seed = static_cast<unsigned>(cfg.seed);
  SectorSettings sectors = cfg.sectors;
  sectors.solve.seed = static_cast<unsigned>(cfg.seed);

  int corner_count = -1;
  RemainderClass remainder = RemainderClass::LogOverSqrt;
  for (const double alpha : cfg.alphas) {
    try {
      const Prediction pred =
          predict(poly, alpha, cfg.n_max, cfg.formula, cfg.attestation, sectors);
      const int K = static_cast<int>(pred.corner_levels.size());
      corner_count = K;
      remainder = pred.remainder;
      const int n = K + cfg.n_max;

      const TwoMeshEigs fem = two_mesh_eigs(region, alpha, n, cfg.mesh,
                                            AssemblyPolicy{}, solve, cfg.mesh_cache);
      if (static_cast<int>(fem.values.size()) < n)
        fail(ErrorCode::GridTooCoarse,
             "experiment: mesh too small for " + std::to_string(n) + " levels");

      for (int k = 1; k <= n; ++k) {
        ResultRow row;
        row.alpha = alpha;
        row.k = k;
        row.fem = fem.values[k - 1];
        row.predicted = k <= K ? pred.corner_levels[k - 1].value
                               : pred.side_levels[k - K - 1].value;
        row.gap = row.fem - row.predicted;
        row.mesh_id = fem.fine_hash;
        row.residual = fem.residual;
        row.budget = fem.budget[k - 1];
        row.corner_cluster = k <= K;
        table.rows.push_back(row);
      }
      table.meshes.push_back({alpha, fem.request, fem.coarse_hash, fem.fine_hash,
                              fem.nodes_coarse, fem.nodes_fine});
    } catch (const Error& e) {
      table.flags.push_back("alpha=" + fmt17(alpha) + " failed: " + e.what());
      table.complete = false;
    }
  }
  if (corner_count >= 0) table.corner_count = corner_count;

  std::sort(table.rows.begin(), table.rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              return a.alpha != b.alpha ? a.alpha < b.alpha : a.k < b.k;
            });

  // Audit 1: the FEM corner cluster (levels below -alpha^2 (1 + margin))
  // must have exactly K members at every alpha.
  for (const MeshRecord& m : table.meshes) {
    const double threshold = -(1.0 + kClusterMargin) * m.alpha * m.alpha;
    int observed = 0;
    for (const ResultRow& row : table.rows)
      if (row.alpha == m.alpha && row.fem < threshold) ++observed;
    if (observed != table.corner_count)
      table.flags.push_back("alpha=" + fmt17(m.alpha) + ": corner cluster has " +
                            std::to_string(observed) + " levels, expected " +
                            std::to_string(table.corner_count));
  }

  // Audit 2: each level must be non-increasing along the alpha grid
  // (the forms decrease in alpha), up to the summed budgets.
  std::map<int, std::vector<const ResultRow*>> by_level;
  for (const ResultRow& row : table.rows) by_level[row.k].push_back(&row);
  for (const auto& [k, rows] : by_level) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i]->fem > rows[i - 1]->fem + rows[i]->budget + rows[i - 1]->budget)
        table.flags.push_back("level " + std::to_string(k) + " increased from alpha=" +
                              fmt17(rows[i - 1]->alpha) + " to alpha=" +
                              fmt17(rows[i]->alpha));
    }
  }

  // Audit 3: with straight sides the side prediction is a one-sided upper
  // bound (Dirichlet side operators), so fem <= predicted + slack.
  if (cfg.formula == SideFormula::StraightSides) {
    for (const ResultRow& row : table.rows)
      if (!row.corner_cluster && row.fem > row.predicted + 3.0 * row.budget)
        table.flags.push_back("upper bound violated at alpha=" + fmt17(row.alpha) +
                              " k=" + std::to_string(row.k) + ": fem=" +
                              fmt17(row.fem) + " > predicted=" + fmt17(row.predicted));
  }

  // Remainder fits for each side level, when at least three alpha points
  // carry signal; a thin grid is flagged, not fatal.
  for (int m = 1; m <= cfg.n_max && corner_count >= 0; ++m) {
    const int k = table.corner_count + m;
    try {
      table.fits.push_back(remainder_fit(table, model_for(remainder), k));
    } catch (const Error& e) {
      table.flags.push_back(std::string("fit skipped: ") + e.what());
    }
  }

  if (!cfg.out_dir.empty()) write_outputs(table, cfg.out_dir);
  return table;
}

std::string to_csv(const ResultTable& table) {
  std::string out = "alpha,k,fem,predicted,gap,mesh_id,residual,budget,cluster\n";
  for (const ResultRow& row : table.rows) {
    out += fmt17(row.alpha);
    out += ',';
    out += std::to_string(row.k);
    out += ',';
    out += fmt17(row.fem);
    out += ',';
    out += fmt17(row.predicted);
    out += ',';
    out += fmt17(row.gap);
    out += ',';
    out += fmt_hash(row.mesh_id);
    out += ',';
    out += fmt17(row.residual);
    out += ',';
    out += fmt17(row.budget);
    out += ',';
    out += row.corner_cluster ? "corner" : "side";
    out += '\n';
  }
  return out;
}

std::string fits_csv(const ResultTable& table) {
  std::string out = "k,model,coefficient,r_squared,exponent,sigma,consistent,points\n";
  for (const RemainderFit& fit : table.fits) {
    out += std::to_string(fit.k);
    out += ',';
    out += to_token(fit.model);
    out += ',';
    out += fmt17(fit.coefficient);
    out += ',';
    out += fmt17(fit.r_squared);
    out += ',';
    out += fmt17(fit.exponent);
    out += ',';
    out += fmt17(fit.sigma);
    out += ',';
    out += fit.consistent ? "1" : "0";
    out += ',';
    out += std::to_string(fit.points);
    out += '\n';
  }
  return out;
}

std::string manifest_text(const ResultTable& table) {
  const ExperimentConfig& cfg = table.config;
  std::ostringstream out;
  out << "{\n";
  out << "  \"library\": \"robinspec " << kVersion << "\",\n";
  out << "  \"eigen\": \"" << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION
      << '.' << EIGEN_MINOR_VERSION << "\",\n";
  out << "  \"polygon\": \"" << json_escape(cfg.polygon) << "\",\n";
  out << "  \"formula\": \"" << to_token(cfg.formula) << "\",\n";
  out << "  \"attestation\": \""
      << (cfg.attestation == NonresonanceAttestation::Verified ? "verified" : "asserted")
      << "\",\n";
  out << "  \"delta_rule\": \"" << to_token(cfg.delta_rule) << "\",\n";
  out << "  \"delta_value\": " << fmt17(cfg.delta_value) << ",\n";
  out << "  \"n_max\": " << cfg.n_max << ",\n";
  out << "  \"seed\": " << cfg.seed << ",\n";
  out << "  \"alphas\": [";
  for (std::size_t i = 0; i < cfg.alphas.size(); ++i)
    out << (i ? ", " : "") << fmt17(cfg.alphas[i]);
  out << "],\n";
  out << "  \"mesh\": {\"h_interior\": " << fmt17(cfg.mesh.h_interior)
      << ", \"h_wall_factor\": " << fmt17(cfg.mesh.h_wall_factor)
      << ", \"min_angle_deg\": " << fmt17(cfg.mesh.min_angle_deg)
      << ", \"max_nodes\": " << cfg.mesh.max_nodes
      << ", \"refine_rounds\": " << cfg.mesh.refine_rounds << "},\n";
  out << "  \"solver\": {\"tol\": " << fmt17(cfg.solve.tol)
      << ", \"block\": " << cfg.solve.block
      << ", \"max_basis\": " << cfg.solve.max_basis << "},\n";
  out << "  \"corners\": {\"refine_rounds\": " << cfg.sectors.refine_rounds
      << ", \"richardson\": " << (cfg.sectors.richardson ? "true" : "false")
      << ", \"tol\": " << fmt17(cfg.sectors.solve.tol) << "},\n";
  out << "  \"corner_count\": " << table.corner_count << ",\n";
  out << "  \"complete\": " << (table.complete ? "true" : "false") << ",\n";
  out << "  \"meshes\": [";
  for (std::size_t i = 0; i < table.meshes.size(); ++i) {
    const MeshRecord& m = table.meshes[i];
    out << (i ? ",\n             " : "") << "{\"alpha\": " << fmt17(m.alpha)
        << ", \"request\": \"" << fmt_hash(m.request) << "\", \"coarse\": \""
        << fmt_hash(m.coarse) << "\", \"fine\": \"" << fmt_hash(m.fine)
        << "\", \"nodes_coarse\": " << m.nodes_coarse
        << ", \"nodes_fine\": " << m.nodes_fine << "}";
  }
  out << "],\n";
  out << "  \"fits\": [";
  for (std::size_t i = 0; i < table.fits.size(); ++i) {
    const RemainderFit& f = table.fits[i];
    out << (i ? ",\n           " : "") << "{\"k\": " << f.k << ", \"model\": \""
        << to_token(f.model) << "\", \"coefficient\": " << fmt17(f.coefficient)
        << ", \"r_squared\": " << fmt17(f.r_squared)
        << ", \"exponent\": " << fmt17(f.exponent)
        << ", \"sigma\": " << fmt17(f.sigma)
        << ", \"consistent\": " << (f.consistent ? "true" : "false")
        << ", \"points\": " << f.points << "}";
  }
  out << "],\n";
  out << "  \"flags\": [";
  for (std::size_t i = 0; i < table.flags.size(); ++i)
    out << (i ? ", " : "") << '"' << json_escape(table.flags[i]) << '"';
  out << "]\n";
  out << "}\n";
  return out.str();
}

void write_outputs(const ResultTable& table, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create output directory '" + dir + "'");
  const auto write_file = [&](const std::string& name, const std::string& body) {
    const std::string path = dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) fail(ErrorCode::IoFailure, "cannot write '" + path + "'");
  };
  write_file("results.csv", to_csv(table));
  write_file("fits.csv", fits_csv(table));
  write_file("manifest.json", manifest_text(table));
}

BracketReport bracket_check(const CurvilinearPolygon& poly, double alpha,
                            double delta, const BracketOptions& opts) {
  if (alpha <= 0.0) fail(ErrorCode::BadInput, "bracket_check: alpha must be positive");
  if (delta <= 0.0) fail(ErrorCode::BadInput, "bracket_check: delta must be positive");
  if (opts.n < 1) fail(ErrorCode::BadInput, "bracket_check: need n >= 1 levels");

  const std::vector<RegionPiece> pieces = decompose(poly, delta);

  BracketReport report;
  report.alpha = alpha;
  report.delta = delta;
  report.n = opts.n;

  const TwoMeshEigs full =
      two_mesh_eigs(poly.as_region(), alpha, opts.n, opts.mesh, AssemblyPolicy{},
                    opts.solve, opts.mesh_cache);
  if (static_cast<int>(full.values.size()) < opts.n)
    fail(ErrorCode::GridTooCoarse, "bracket_check: full-domain mesh too small");
  report.fem = full.values;
  report.fem_budget = full.budget;
  report.fem_residual = full.residual;
  report.domain_mesh_id = full.fine_hash;

  // value/budget pairs merged across pieces, per cut condition
  std::vector<std::pair<double, double>> lower_all, upper_all;
  for (const RegionPiece& piece : pieces) {
    PieceSpectrum ps;
    ps.kind = piece.kind;
    ps.index = piece.index;

    const TwoMeshEigs lo =
        two_mesh_eigs(piece.region, alpha, opts.n, opts.mesh,
                      AssemblyPolicy::neumann_cuts(), opts.solve, opts.mesh_cache);
    ps.lower = lo.values;
    ps.lower_budget = lo.budget;
    ps.mesh_id = lo.fine_hash;
    for (std::size_t i = 0; i < lo.values.size(); ++i)
      lower_all.emplace_back(lo.values[i], lo.budget[i]);

    if (piece.kind != PieceKind::Core) {
      const TwoMeshEigs up =
          two_mesh_eigs(piece.region, alpha, opts.n, opts.mesh,
                        AssemblyPolicy::dirichlet_cuts(), opts.solve, opts.mesh_cache);
      ps.upper = up.values;
      ps.upper_budget = up.budget;
      for (std::size_t i = 0; i < up.values.size(); ++i)
        upper_all.emplace_back(up.values[i], up.budget[i]);
    }
    report.pieces.push_back(std::move(ps));
  }

  std::sort(lower_all.begin(), lower_all.end());
  std::sort(upper_all.begin(), upper_all.end());
  const int n_lower = std::min<int>(opts.n, static_cast<int>(lower_all.size()));
  const int n_upper = std::min<int>(opts.n, static_cast<int>(upper_all.size()));
  for (int i = 0; i < n_lower; ++i) {
    report.lower.push_back(lower_all[i].first);
    report.lower_budget.push_back(lower_all[i].second);
  }
  for (int i = 0; i < n_upper; ++i) {
    report.upper.push_back(upper_all[i].first);
    report.upper_budget.push_back(upper_all[i].second);
  }

  for (int i = 0; i < opts.n; ++i) {
    if (i < n_lower) {
      const double slack = report.lower_budget[i] + report.fem_budget[i];
      if (report.lower[i] > report.fem[i] + slack)
        report.violations.push_back(
            "level " + std::to_string(i + 1) + ": lower " + fmt17(report.lower[i]) +
            " exceeds fem " + fmt17(report.fem[i]) + " beyond budget " + fmt17(slack));
    }
    if (i < n_upper) {
      const double slack = report.upper_budget[i] + report.fem_budget[i];
      if (report.fem[i] > report.upper[i] + slack)
        report.violations.push_back(
            "level " + std::to_string(i + 1) + ": fem " + fmt17(report.fem[i]) +
            " exceeds upper " + fmt17(report.upper[i]) + " beyond budget " + fmt17(slack));
    }
  }
  report.all_hold = report.violations.empty();

  const double threshold = -(1.0 + opts.cluster_margin) * alpha * alpha;
  int observed = 0;
  for (const double v : report.fem)
    if (v < threshold) ++observed;
  report.corner_count = observed;
  if (observed > 0 && observed < static_cast<int>(report.fem.size()))
    report.cluster_separation = report.fem[observed] - report.fem[observed - 1];

  if (!report.all_hold && opts.throw_on_violation) {
    std::string what = "bracketing violated on " + std::to_string(poly.num_sides()) +
                       "-gon at alpha=" + fmt17(alpha) + ", delta=" + fmt17(delta) + ":";
    for (const std::string& v : report.violations) what += "\n  " + v;
    fail(ErrorCode::BracketViolationBeyondBudget, what);
  }
  return report;
}

}  // namespace robinspec
