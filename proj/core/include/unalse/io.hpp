#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "unalse/hermitian.hpp"
#include "unalse/periodogram.hpp"
#include "unalse/simulate.hpp"

namespace unalse {

struct PanelReadOptions {
  char delimiter = ',';
  bool header = false;
  /// Input has one row per time point instead of one row per series.
  bool transpose = false;
};

/// Reads a rectangular numeric table. Throws ParseError naming the 1-based
/// row and column of the first ragged row, non-numeric or non-finite cell.
RMatrix read_table(std::istream& in, const PanelReadOptions& options = {});

/// Rows are series and columns are time points unless options.transpose.
TimeSeriesPanel read_panel(const std::filesystem::path& path, const PanelReadOptions& options = {});

/// Shortest text of a double with 17 significant digits; parses back to the
/// same bit pattern.
std::string format_double(double value);

void write_real_csv(const std::filesystem::path& path, const RMatrix& m);
RMatrix read_real_csv(const std::filesystem::path& path);

/// `<name>_h<h>_re.csv` and `<name>_h<h>_im.csv` inside dir.
void write_complex_pair(const std::filesystem::path& dir, const std::string& name, std::size_t h,
                        const CMatrix& m);
/// Throws BundleError when either file is missing or the parts disagree in shape.
CMatrix read_complex_pair(const std::filesystem::path& dir, const std::string& name, std::size_t h);

/// Per-frequency entries of an estimate manifest.
struct FrequencyRecord {
  double theta = 0.0;
  Index rank = 0;
  double psi = 0.0;
  double rho = 0.0;
  double psi_effective = 0.0;
  /// Unset when Sigma_hat has zero trace.
  std::optional<double> beta_hat;
  std::optional<double> zeta_hat;
  Index nonzeros = 0;
  bool converged = false;
  int iterations = 0;
  std::optional<double> mc;
  bool boundary = false;
  bool S_positive_definite = false;
  bool sigma_positive_definite = false;
  /// Set when inverses were requested and the matrix is positive definite.
  bool has_S_inverse = false;
  bool has_sigma_inverse = false;

  bool operator==(const FrequencyRecord&) const = default;
};

struct EstimateManifest {
  std::string tool_version;
  Index p = 0;
  Index T = 0;
  Index bandwidth = 0;
  std::string kernel;
  bool demean = true;
  std::string selection;
  std::string diagonal_rule;
  std::optional<std::uint64_t> seed;
  std::string source;
  bool has_sigma_tilde = false;
  bool with_inverse = false;
  std::vector<FrequencyRecord> frequencies;

  bool operator==(const EstimateManifest&) const = default;
};

struct EstimateBundle {
  EstimateManifest manifest;
  std::vector<HermitianMatrix> L;
  std::vector<HermitianMatrix> S;
  std::vector<HermitianMatrix> sigma;
  std::vector<HermitianMatrix> sigma_tilde;  ///< empty unless manifest.has_sigma_tilde
  std::vector<std::optional<HermitianMatrix>> S_inverse;
  std::vector<std::optional<HermitianMatrix>> sigma_inverse;
};

std::string manifest_to_json(const EstimateManifest& manifest);
/// Throws BundleError on malformed JSON or missing keys.
EstimateManifest manifest_from_json(const std::string& text);

/// Creates dir if needed. Throws BundleError when the matrix lists do not
/// match the manifest frequency count.
void write_estimate(const EstimateBundle& bundle, const std::filesystem::path& dir);
/// Throws BundleError for a missing manifest or matrix file, or when the
/// number of matrix files differs from the manifest frequency count.
EstimateBundle read_estimate(const std::filesystem::path& dir);

/// On-disk ground truth of one simulated replication: panel.csv (series x
/// time), L_star.csv, S_star.csv, per-frequency L_true / S_true pairs and
/// manifest.json with the generating configuration.
void write_truth(const SimulationTruth& truth, const std::filesystem::path& dir);

struct TruthBundle {
  Index p = 0;
  Index T = 0;
  Index r = 0;
  std::uint64_t seed = 0;
  std::vector<double> frequencies;
  RMatrix L_star;
  RMatrix S_star;
  std::vector<HermitianMatrix> L_true;
  std::vector<HermitianMatrix> S_true;
};

TruthBundle read_truth(const std::filesystem::path& dir);

/// Panel of a truth directory without loading the spectra.
TimeSeriesPanel read_truth_panel(const std::filesystem::path& dir);

}  // namespace unalse
