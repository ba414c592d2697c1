#pragma once

// Data loading, MAP labelling, permutation-minimized scoring and the
// end-to-end run used by the command-line tool.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "skewmix/mixture.hpp"

namespace skewmix {

struct Dataset {
  Matrix rows;
  std::vector<std::string> column_names;  // feature columns only
  std::optional<std::vector<int>> true_labels;
  /// true marks rows left out of the misclassification rate.
  std::optional<std::vector<bool>> excluded;
};

/// Comma-separated, header row, decimal point. Label values must be the
/// integers 0..g′−1 with every class present; exclude cells are 0/1 or
/// true/false.
Dataset load_csv(const std::filesystem::path& path, const std::optional<std::string>& label_column = std::nullopt,
                 const std::optional<std::string>& exclude_column = std::nullopt);
Dataset parse_csv(std::istream& in, const std::optional<std::string>& label_column = std::nullopt,
                  const std::optional<std::string>& exclude_column = std::nullopt);

/// MAP rule on a responsibility matrix; ties go to the lowest index.
std::vector<int> map_labels(const Matrix& z);
std::vector<int> assign_labels(const Matrix& data, const MixtureModel& model, const CdfOptions& cdf = {});

inline constexpr int kMaxScoredClasses = 10;

/// min over label permutations σ of mean(σ(pred) ≠ truth) over rows not
/// excluded. The number of classes is the larger label count of the two
/// vectors.
double misclassification_rate(const std::vector<int>& pred, const std::vector<int>& truth,
                              const std::vector<bool>* exclude = nullptr);

struct RunConfig {
  std::filesystem::path data_path;
  Family family = Family::rmst;
  int g = 3;
  int max_iter = 500;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  InitStrategy init = InitStrategy::kmeans;
  DofUpdate dof_update = DofUpdate::ecme;
  int mc_draws = 10000;
  std::optional<std::string> label_column;
  std::optional<std::string> exclude_column;
  std::filesystem::path output_dir = ".";
};

/// Exit codes of run().
inline constexpr int kExitConverged = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitMaxIter = 2;

/// Fits and writes model.json, labels.csv, trace.csv and report.json into
/// output_dir. Errors are written to report.json and mapped to kExitError.
int run(const RunConfig& config);

}  // namespace skewmix
