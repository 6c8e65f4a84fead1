#include "unalse/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "unalse/errors.hpp"

namespace unalse {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw BundleError("cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw BundleError("cannot write '" + path.string() + "'");
  return out;
}

std::string pair_name(const std::string& name, std::size_t h, const char* part) {
  return name + "_h" + std::to_string(h) + "_" + part + ".csv";
}

std::string read_text(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text << '\n';
}

ordered_json opt_json(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<double> opt_value(const ordered_json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

HermitianMatrix read_hermitian(const fs::path& dir, const std::string& name, std::size_t h) {
  try {
    return HermitianMatrix(read_complex_pair(dir, name, h));
  } catch (const std::invalid_argument& e) {
    throw BundleError(pair_name(name, h, "re") + ": " + e.what());
  }
}

}  // namespace

RMatrix read_table(std::istream& in, const PanelReadOptions& options) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = options.header;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto cells = split(line, options.delimiter);
    if (!rows.empty() && cells.size() != rows.front().size()) {
      throw ParseError("row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                           " columns, expected " + std::to_string(rows.front().size()),
                       line_no, std::min(cells.size(), rows.front().size()) + 1);
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string_view cell = trim(cells[c]);
      double v = 0.0;
      const char* begin = cell.data();
      const char* end = begin + cell.size();
      if (!cell.empty() && *begin == '+') ++begin;
      const auto [ptr, ec] = std::from_chars(begin, end, v);
      if (cell.empty() || ec != std::errc() || ptr != end) {
        throw ParseError("non-numeric cell '" + std::string(cell) + "' at row " +
                             std::to_string(line_no) + ", column " + std::to_string(c + 1),
                         line_no, c + 1);
      }
      if (!std::isfinite(v)) {
        throw ParseError("non-finite cell at row " + std::to_string(line_no) + ", column " +
                             std::to_string(c + 1),
                         line_no, c + 1);
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty table");

  RMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

TimeSeriesPanel read_panel(const fs::path& path, const PanelReadOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  RMatrix m = read_table(in, options);
  if (options.transpose) m.transposeInPlace();
  try {
    return TimeSeriesPanel(std::move(m));
  } catch (const ArgumentError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  if (ec != std::errc()) throw NumericError("format_double: conversion failed");
  return std::string(buf, ptr);
}

void write_real_csv(const fs::path& path, const RMatrix& m) {
  std::string text;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) text += ',';
      text += format_double(m(i, j));
    }
    text += '\n';
  }
  std::ofstream out = open_out(path);
  out << text;
}

RMatrix read_real_csv(const fs::path& path) {
  std::ifstream in = open_in(path);
  try {
    return read_table(in);
  } catch (const ParseError& e) {
    throw BundleError(path.string() + ": " + e.what());
  }
}

void write_complex_pair(const fs::path& dir, const std::string& name, std::size_t h, const CMatrix& m) {
  write_real_csv(dir / pair_name(name, h, "re"), m.real());
  write_real_csv(dir / pair_name(name, h, "im"), m.imag());
}

CMatrix read_complex_pair(const fs::path& dir, const std::string& name, std::size_t h) {
  const fs::path re_path = dir / pair_name(name, h, "re");
  const fs::path im_path = dir / pair_name(name, h, "im");
  if (!fs::exists(re_path) || !fs::exists(im_path)) {
    throw BundleError("missing matrix file for '" + name + "' at h = " + std::to_string(h) + " in " +
                      dir.string());
  }
  const RMatrix re = read_real_csv(re_path);
  const RMatrix im = read_real_csv(im_path);
  if (re.rows() != im.rows() || re.cols() != im.cols()) {
    throw BundleError("real and imaginary parts of '" + name + "' disagree in shape");
  }
  CMatrix out(re.rows(), re.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

std::string manifest_to_json(const EstimateManifest& m) {
  ordered_json doc;
  doc["tool_version"] = m.tool_version;
  doc["p"] = m.p;
  doc["T"] = m.T;
  doc["bandwidth"] = m.bandwidth;
  doc["kernel"] = m.kernel;
  doc["demean"] = m.demean;
  doc["selection"] = m.selection;
  doc["diagonal_rule"] = m.diagonal_rule;
  doc["seed"] = m.seed ? ordered_json(*m.seed) : ordered_json(nullptr);
  doc["source"] = m.source;
  doc["has_sigma_tilde"] = m.has_sigma_tilde;
  doc["with_inverse"] = m.with_inverse;
  doc["frequency_count"] = m.frequencies.size();
  ordered_json freqs = ordered_json::array();
  for (const FrequencyRecord& f : m.frequencies) {
    freqs.push_back({
        {"theta", f.theta},
        {"rank", f.rank},
        {"psi", f.psi},
        {"rho", f.rho},
        {"psi_effective", f.psi_effective},
        {"beta_hat", opt_json(f.beta_hat)},
        {"zeta_hat", opt_json(f.zeta_hat)},
        {"nonzeros", f.nonzeros},
        {"converged", f.converged},
        {"iterations", f.iterations},
        {"mc", opt_json(f.mc)},
        {"boundary", f.boundary},
        {"S_positive_definite", f.S_positive_definite},
        {"sigma_positive_definite", f.sigma_positive_definite},
        {"has_S_inverse", f.has_S_inverse},
        {"has_sigma_inverse", f.has_sigma_inverse},
    });
  }
  doc["frequencies"] = freqs;
  return doc.dump(2);
}

EstimateManifest manifest_from_json(const std::string& text) {
  try {
    const ordered_json doc = ordered_json::parse(text);
    EstimateManifest m;
    m.tool_version = doc.at("tool_version").get<std::string>();
    m.p = doc.at("p").get<Index>();
    m.T = doc.at("T").get<Index>();
    m.bandwidth = doc.at("bandwidth").get<Index>();
    m.kernel = doc.at("kernel").get<std::string>();
    m.demean = doc.at("demean").get<bool>();
    m.selection = doc.at("selection").get<std::string>();
    m.diagonal_rule = doc.at("diagonal_rule").get<std::string>();
    if (!doc.at("seed").is_null()) m.seed = doc.at("seed").get<std::uint64_t>();
    m.source = doc.at("source").get<std::string>();
    m.has_sigma_tilde = doc.at("has_sigma_tilde").get<bool>();
    m.with_inverse = doc.at("with_inverse").get<bool>();
    for (const auto& f : doc.at("frequencies")) {
      FrequencyRecord r;
      r.theta = f.at("theta").get<double>();
      r.rank = f.at("rank").get<Index>();
      r.psi = f.at("psi").get<double>();
      r.rho = f.at("rho").get<double>();
      r.psi_effective = f.at("psi_effective").get<double>();
      r.beta_hat = opt_value(f.at("beta_hat"));
      r.zeta_hat = opt_value(f.at("zeta_hat"));
      r.nonzeros = f.at("nonzeros").get<Index>();
      r.converged = f.at("converged").get<bool>();
      r.iterations = f.at("iterations").get<int>();
      r.mc = opt_value(f.at("mc"));
      r.boundary = f.at("boundary").get<bool>();
      r.S_positive_definite = f.at("S_positive_definite").get<bool>();
      r.sigma_positive_definite = f.at("sigma_positive_definite").get<bool>();
      r.has_S_inverse = f.at("has_S_inverse").get<bool>();
      r.has_sigma_inverse = f.at("has_sigma_inverse").get<bool>();
      m.frequencies.push_back(r);
    }
    if (doc.at("frequency_count").get<std::size_t>() != m.frequencies.size()) {
      throw BundleError("manifest frequency_count does not match its frequency list");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw BundleError(std::string("malformed manifest: ") + e.what());
  }
}

void write_estimate(const EstimateBundle& bundle, const fs::path& dir) {
  const std::size_t n = bundle.manifest.frequencies.size();
  const auto sized = [n](std::size_t k) { return k == n; };
  if (!sized(bundle.L.size()) || !sized(bundle.S.size()) || !sized(bundle.sigma.size()) ||
      (bundle.manifest.has_sigma_tilde && !sized(bundle.sigma_tilde.size()))) {
    throw BundleError("estimate bundle matrices do not match the manifest frequency count");
  }
  if (bundle.manifest.with_inverse &&
      (!sized(bundle.S_inverse.size()) || !sized(bundle.sigma_inverse.size()))) {
    throw BundleError("estimate bundle inverses do not match the manifest frequency count");
  }
  fs::create_directories(dir);
  for (std::size_t h = 0; h < n; ++h) {
    write_complex_pair(dir, "L", h, bundle.L[h].matrix());
    write_complex_pair(dir, "S", h, bundle.S[h].matrix());
    write_complex_pair(dir, "Sigma", h, bundle.sigma[h].matrix());
    if (bundle.manifest.has_sigma_tilde) write_complex_pair(dir, "SigmaTilde", h, bundle.sigma_tilde[h].matrix());
    if (bundle.manifest.with_inverse) {
      const FrequencyRecord& f = bundle.manifest.frequencies[h];
      if (f.has_S_inverse != bundle.S_inverse[h].has_value() ||
          f.has_sigma_inverse != bundle.sigma_inverse[h].has_value()) {
        throw BundleError("inverse flags disagree with the stored inverses at h = " + std::to_string(h));
      }
      if (bundle.S_inverse[h]) write_complex_pair(dir, "S_inv", h, bundle.S_inverse[h]->matrix());
      if (bundle.sigma_inverse[h]) write_complex_pair(dir, "Sigma_inv", h, bundle.sigma_inverse[h]->matrix());
    }
  }
  write_text(dir / "manifest.json", manifest_to_json(bundle.manifest));
}

EstimateBundle read_estimate(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw BundleError("no manifest.json in " + dir.string());
  EstimateBundle b;
  b.manifest = manifest_from_json(read_text(manifest_path));
  const std::size_t n = b.manifest.frequencies.size();

  std::size_t sigma_files = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string fname = entry.path().filename().string();
    if (fname.rfind("Sigma_h", 0) == 0 && fname.size() > 7 &&
        fname.compare(fname.size() - 7, 7, "_re.csv") == 0) {
      ++sigma_files;
    }
  }
  if (sigma_files != n) {
    throw BundleError("manifest lists " + std::to_string(n) + " frequencies but " + dir.string() +
                      " holds " + std::to_string(sigma_files) + " Sigma matrices");
  }

  for (std::size_t h = 0; h < n; ++h) {
    b.L.push_back(read_hermitian(dir, "L", h));
    b.S.push_back(read_hermitian(dir, "S", h));
    b.sigma.push_back(read_hermitian(dir, "Sigma", h));
    if (b.manifest.has_sigma_tilde) b.sigma_tilde.push_back(read_hermitian(dir, "SigmaTilde", h));
    if (b.manifest.with_inverse) {
      const FrequencyRecord& f = b.manifest.frequencies[h];
      b.S_inverse.push_back(f.has_S_inverse ? std::optional(read_hermitian(dir, "S_inv", h)) : std::nullopt);
      b.sigma_inverse.push_back(f.has_sigma_inverse ? std::optional(read_hermitian(dir, "Sigma_inv", h))
                                                    : std::nullopt);
    }
    if (b.sigma.back().dim() != b.manifest.p) {
      throw BundleError("matrix dimension at h = " + std::to_string(h) + " differs from manifest p");
    }
  }
  return b;
}

void write_truth(const SimulationTruth& truth, const fs::path& dir) {
  const SimulationConfig& cfg = truth.config;
  fs::create_directories(dir);
  write_real_csv(dir / "panel.csv", truth.panel.values());
  write_real_csv(dir / "L_star.csv", truth.L_star);
  write_real_csv(dir / "S_star.csv", truth.S_star);
  for (std::size_t h = 0; h < truth.L_true.size(); ++h) {
    write_complex_pair(dir, "L_true", h, truth.L_true[h].matrix());
    write_complex_pair(dir, "S_true", h, truth.S_true[h].matrix());
  }

  ordered_json doc;
  doc["p"] = cfg.p;
  doc["T"] = cfg.T;
  doc["r"] = cfg.r;
  doc["c"] = cfg.c;
  doc["beta"] = cfg.beta;
  doc["tau"] = cfg.tau;
  doc["delta"] = cfg.delta;
  doc["delta_bis"] = cfg.delta_bis;
  doc["lambda"] = cfg.lambda_coeffs;
  doc["normalize_lambda"] = cfg.normalize_lambda;
  doc["signed_offdiagonals"] = cfg.signed_offdiagonals;
  doc["scenario"] = cfg.scenario == FilterScenario::basic ? "basic" : "general";
  doc["kappa_pert"] = cfg.kappa_pert;
  doc["seed"] = cfg.seed;
  doc["burn_in"] = cfg.burn_in;
  doc["frequencies"] = cfg.grid.frequencies;
  doc["frequency_count"] = truth.L_true.size();
  write_text(dir / "manifest.json", doc.dump(2));
}

TruthBundle read_truth(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw BundleError("no manifest.json in " + dir.string());
  TruthBundle t;
  try {
    const ordered_json doc = ordered_json::parse(read_text(manifest_path));
    t.p = doc.at("p").get<Index>();
    t.T = doc.at("T").get<Index>();
    t.r = doc.at("r").get<Index>();
    t.seed = doc.at("seed").get<std::uint64_t>();
    t.frequencies = doc.at("frequencies").get<std::vector<double>>();
    if (doc.at("frequency_count").get<std::size_t>() != t.frequencies.size()) {
      throw BundleError("truth manifest frequency_count does not match its frequency list");
    }
  } catch (const nlohmann::json::exception& e) {
    throw BundleError(std::string("malformed truth manifest: ") + e.what());
  }
  t.L_star = read_real_csv(dir / "L_star.csv");
  t.S_star = read_real_csv(dir / "S_star.csv");
  for (std::size_t h = 0; h < t.frequencies.size(); ++h) {
    t.L_true.push_back(read_hermitian(dir, "L_true", h));
    t.S_true.push_back(read_hermitian(dir, "S_true", h));
  }
  return t;
}

TimeSeriesPanel read_truth_panel(const fs::path& dir) {
  return read_panel(dir / "panel.csv");
}

}  // namespace unalse
