#include "unalse/metrics.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "unalse/errors.hpp"

namespace unalse {

double beta_hat(const HermitianMatrix& low_rank, const HermitianMatrix& sigma) {
  const double total = sigma.trace();
  if (total == 0.0) throw DegenerateInput("beta_hat: Sigma has zero trace");
  return low_rank.trace() / total;
}

namespace {

double upper_abs_sum(const HermitianMatrix& m) {
  double acc = 0.0;
  for (Index j = 1; j < m.dim(); ++j) {
    for (Index i = 0; i < j; ++i) acc += std::abs(m(i, j));
  }
  return acc;
}

int sign_of(Complex v, double tol) {
  if (std::abs(v) <= tol) return 0;
  if (v.real() > 0.0) return 1;
  if (v.real() < 0.0) return -1;
  return 0;
}

std::optional<double> ratio(std::size_t hits, std::size_t base) {
  if (base == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(base);
}

}  // namespace

double zeta_hat(const HermitianMatrix& sparse, const HermitianMatrix& sigma) {
  if (sparse.dim() != sigma.dim()) throw DimensionError("zeta_hat: dimension mismatch");
  const double denom = upper_abs_sum(sigma);
  if (denom == 0.0) throw DegenerateInput("zeta_hat: Sigma has no off-diagonal mass");
  return upper_abs_sum(sparse) / denom;
}

PredictiveValues sparsity_predictive(const HermitianMatrix& S_hat, const HermitianMatrix& S_true,
                                     double tol) {
  if (S_hat.dim() != S_true.dim()) throw DimensionError("sparsity_predictive: dimension mismatch");
  std::size_t pred_nz = 0, both_nz = 0, true_pos = 0, hit_pos = 0, true_neg = 0, hit_neg = 0;
  for (Index j = 1; j < S_hat.dim(); ++j) {
    for (Index i = 0; i < j; ++i) {
      const bool est_nz = std::abs(S_hat(i, j)) > tol;
      const bool ref_nz = std::abs(S_true(i, j)) > tol;
      const int est_sign = sign_of(S_hat(i, j), tol);
      const int ref_sign = sign_of(S_true(i, j), tol);
      pred_nz += est_nz;
      both_nz += est_nz && ref_nz;
      if (ref_sign > 0) {
        ++true_pos;
        hit_pos += est_sign > 0;
      } else if (ref_sign < 0) {
        ++true_neg;
        hit_neg += est_sign < 0;
      }
    }
  }
  return PredictiveValues{ratio(both_nz, pred_nz), ratio(hit_pos, true_pos), ratio(hit_neg, true_neg)};
}

std::vector<Index> mnz(const std::vector<HermitianMatrix>& estimates, double tol) {
  if (estimates.empty()) throw ArgumentError("mnz: empty replication list");
  const Index p = estimates.front().dim();
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> counts =
      Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic>::Zero(p, p);
  for (const HermitianMatrix& s : estimates) {
    if (s.dim() != p) throw DimensionError("mnz: replications disagree in dimension");
    counts += (s.matrix().cwiseAbs().array() > tol).cast<Index>().matrix();
  }
  std::vector<Index> out(static_cast<std::size_t>(p), 0);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      if (j != i) out[static_cast<std::size_t>(i)] = std::max(out[static_cast<std::size_t>(i)], counts(i, j));
    }
  }
  return out;
}

double err_frobenius(const HermitianMatrix& estimate, const HermitianMatrix& truth, Index p) {
  if (estimate.dim() != truth.dim()) throw DimensionError("err_frobenius: dimension mismatch");
  if (p < 1) throw ArgumentError("err_frobenius: p must be >= 1");
  return (estimate.matrix() - truth.matrix()).norm() / static_cast<double>(p);
}

double err_ratio(const HermitianMatrix& sigma_hat, const HermitianMatrix& sigma_tilde,
                 const HermitianMatrix& sigma_true) {
  const double denom = (sigma_tilde.matrix() - sigma_true.matrix()).norm();
  if (denom == 0.0) throw DegenerateInput("err_ratio: input loss is zero");
  return (sigma_hat.matrix() - sigma_true.matrix()).norm() / denom;
}

double g_gamma_loss(const HermitianMatrix& L_hat, const HermitianMatrix& L_true,
                    const HermitianMatrix& S_hat, const HermitianMatrix& S_true, double gamma) {
  if (!(gamma > 0.0)) throw ArgumentError("g_gamma_loss: gamma must be > 0");
  const double sparse = matrix_norm((S_hat - S_true).matrix(), NormKind::max) / gamma;
  const double low = matrix_norm(L_hat - L_true, NormKind::spectral);
  return std::max(sparse, low);
}

HermitianMatrix dyn_pca(const HermitianMatrix& sigma_tilde, Index r) {
  if (r < 1 || r > sigma_tilde.dim()) throw ArgumentError("dyn_pca: need 1 <= r <= p");
  const EigenDecomposition ed = eigh(sigma_tilde);
  RVector kept = RVector::Zero(ed.eigenvalues.size());
  kept.head(r) = ed.eigenvalues.head(r);
  return ed.rebuild(kept);
}

double rank_correct_count(const std::vector<std::vector<Index>>& rank_hats, Index r_true) {
  if (rank_hats.empty()) return 0.0;
  const std::size_t h = rank_hats.front().size();
  if (h == 0) return 0.0;
  std::size_t hits = 0;
  for (const auto& row : rank_hats) {
    if (row.size() != h) throw DimensionError("rank_correct_count: ragged table");
    for (Index v : row) hits += v == r_true;
  }
  return static_cast<double>(hits) / static_cast<double>(h);
}

Summary summarize(const std::vector<std::optional<double>>& values) {
  Summary out;
  double sum = 0.0;
  for (const auto& v : values) {
    if (!v) {
      ++out.excluded;
      continue;
    }
    sum += *v;
    ++out.count;
  }
  if (out.count == 0) return out;
  const double mean = sum / static_cast<double>(out.count);
  double ss = 0.0;
  for (const auto& v : values) {
    if (v) ss += (*v - mean) * (*v - mean);
  }
  out.mean = mean;
  out.sd = out.count > 1 ? std::sqrt(ss / static_cast<double>(out.count - 1)) : 0.0;
  return out;
}

CellMetrics evaluate_cell(const EstimateCell& estimate, const TruthCell& truth,
                          const MetricOptions& options) {
  const Index p = estimate.sigma.dim();
  const HermitianMatrix sigma_true = truth.L + truth.S;
  CellMetrics m;
  try {
    m.beta_hat = beta_hat(estimate.L, estimate.sigma);
  } catch (const DegenerateInput&) {
  }
  try {
    m.zeta_hat = zeta_hat(estimate.S, estimate.sigma);
  } catch (const DegenerateInput&) {
  }
  m.rank_hat = estimate.rank;
  m.predictive = sparsity_predictive(estimate.S, truth.S, options.zero_tol);
  m.err_L = err_frobenius(estimate.L, truth.L, p);
  if (options.dyn_rank > 0) m.err_L_dyn = err_frobenius(dyn_pca(estimate.sigma_tilde, options.dyn_rank), truth.L, p);
  try {
    m.err_ratio = err_ratio(estimate.sigma, estimate.sigma_tilde, sigma_true);
  } catch (const DegenerateInput&) {
  }
  m.g_gamma = g_gamma_loss(estimate.L, truth.L, estimate.S, truth.S, options.gamma);
  m.spectral_err_sigma = matrix_norm(estimate.sigma - sigma_true, NormKind::spectral) /
                         static_cast<double>(p);
  return m;
}

const std::vector<std::string>& EvaluationReport::metric_names() {
  static const std::vector<std::string> kNames = {
      "beta_hat", "zeta_hat", "rank_hat",  "nzpv",    "ppv",
      "npv",      "err_L",    "err_L_dyn", "err_ratio", "g_gamma", "spectral_err_sigma"};
  return kNames;
}

std::vector<Summary> EvaluationReport::per_frequency(const std::string& metric) const {
  using Getter = std::optional<double> (*)(const CellMetrics&);
  static const std::map<std::string, Getter> kGetters = {
      {"beta_hat", [](const CellMetrics& c) { return c.beta_hat; }},
      {"zeta_hat", [](const CellMetrics& c) { return c.zeta_hat; }},
      {"rank_hat",
       [](const CellMetrics& c) -> std::optional<double> { return static_cast<double>(c.rank_hat); }},
      {"nzpv", [](const CellMetrics& c) { return c.predictive.nzpv; }},
      {"ppv", [](const CellMetrics& c) { return c.predictive.ppv; }},
      {"npv", [](const CellMetrics& c) { return c.predictive.npv; }},
      {"err_L", [](const CellMetrics& c) -> std::optional<double> { return c.err_L; }},
      {"err_L_dyn", [](const CellMetrics& c) { return c.err_L_dyn; }},
      {"err_ratio", [](const CellMetrics& c) { return c.err_ratio; }},
      {"g_gamma", [](const CellMetrics& c) -> std::optional<double> { return c.g_gamma; }},
      {"spectral_err_sigma",
       [](const CellMetrics& c) -> std::optional<double> { return c.spectral_err_sigma; }},
  };
  const auto it = kGetters.find(metric);
  if (it == kGetters.end()) throw ArgumentError("unknown metric '" + metric + "'");

  std::vector<Summary> out;
  for (std::size_t h = 0; h < frequencies.size(); ++h) {
    std::vector<std::optional<double>> column;
    column.reserve(cells.size());
    for (const auto& row : cells) column.push_back(it->second(row[h]));
    out.push_back(summarize(column));
  }
  return out;
}

EvaluationReport evaluate(const std::vector<std::vector<EstimateCell>>& estimates,
                          const std::vector<std::vector<TruthCell>>& truths,
                          const std::vector<double>& frequencies, Index r_true,
                          const MetricOptions& options) {
  if (estimates.size() != truths.size() || estimates.empty()) {
    throw DimensionError("evaluate: estimate and truth replication counts differ");
  }
  EvaluationReport report;
  report.frequencies = frequencies;
  report.r_true = r_true;
  report.replications = estimates.size();
  const std::size_t h_count = frequencies.size();

  std::vector<std::vector<Index>> ranks;
  for (std::size_t b = 0; b < estimates.size(); ++b) {
    if (estimates[b].size() != h_count || truths[b].size() != h_count) {
      throw DimensionError("evaluate: replication " + std::to_string(b) +
                           " does not match the frequency grid");
    }
    std::vector<CellMetrics> row;
    std::vector<Index> rank_row;
    for (std::size_t h = 0; h < h_count; ++h) {
      row.push_back(evaluate_cell(estimates[b][h], truths[b][h], options));
      rank_row.push_back(estimates[b][h].rank);
    }
    report.cells.push_back(std::move(row));
    ranks.push_back(std::move(rank_row));
  }
  report.p = estimates.front().front().sigma.dim();
  report.rank_correct = rank_correct_count(ranks, r_true);

  for (std::size_t h = 0; h < h_count; ++h) {
    std::vector<HermitianMatrix> stack;
    for (const auto& rep : estimates) stack.push_back(rep[h].S);
    report.mnz.push_back(mnz(stack, options.zero_tol));
  }
  return report;
}

std::string report_to_json(const EvaluationReport& report) {
  using nlohmann::ordered_json;
  const auto opt = [](const std::optional<double>& v) -> ordered_json {
    return v ? ordered_json(*v) : ordered_json(nullptr);
  };

  ordered_json doc;
  doc["p"] = report.p;
  doc["r_true"] = report.r_true;
  doc["replications"] = report.replications;
  doc["frequencies"] = report.frequencies;
  ordered_json f = ordered_json::array();
  for (double theta : report.frequencies) f.push_back(theta / std::numbers::pi);
  doc["f"] = f;
  doc["rank_correct"] = report.rank_correct;

  ordered_json metrics = ordered_json::object();
  for (const std::string& name : EvaluationReport::metric_names()) {
    ordered_json rows = ordered_json::array();
    for (const Summary& s : report.per_frequency(name)) {
      rows.push_back({{"mean", opt(s.mean)}, {"sd", opt(s.sd)}, {"count", s.count},
                      {"excluded", s.excluded}});
    }
    metrics[name] = rows;
  }
  doc["metrics"] = metrics;
  doc["mnz"] = report.mnz;
  return doc.dump(2);
}

void write_metric_csv(std::ostream& os, const EvaluationReport& report, const std::string& metric) {
  const auto rows = report.per_frequency(metric);
  const auto old_precision = os.precision(17);
  os << "theta,f,mean,sd,count,excluded\n";
  for (std::size_t h = 0; h < rows.size(); ++h) {
    const double theta = report.frequencies[h];
    os << theta << ',' << theta / std::numbers::pi << ',';
    if (rows[h].mean) os << *rows[h].mean;
    os << ',';
    if (rows[h].sd) os << *rows[h].sd;
    os << ',' << rows[h].count << ',' << rows[h].excluded << '\n';
  }
  os.precision(old_precision);
}

}  // namespace unalse
