#include "skewmix/cluster.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>

#include "skewmix/error.hpp"
#include "skewmix/model_io.hpp"

namespace skewmix {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) return out;
    start = comma + 1;
  }
}

std::string where(int row, int col) {
  return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

bool is_missing_token(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower.empty() || lower == "nan" || lower == "na" || lower == "null" || lower == "-nan";
}

double parse_cell(std::string_view s, int row, int col) {
  if (is_missing_token(s)) throw Error(ErrorCode::MissingValue, "missing value at " + where(row, col));
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::ParseError, "cannot parse '" + std::string(s) + "' at " + where(row, col));
  }
  if (!std::isfinite(v)) throw Error(ErrorCode::MissingValue, "non-finite value at " + where(row, col));
  return v;
}

int parse_label(std::string_view s, int row, int col) {
  if (is_missing_token(s)) throw Error(ErrorCode::MissingValue, "missing label at " + where(row, col));
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) {
    throw Error(ErrorCode::LabelNotInteger, "label '" + std::string(s) + "' at " + where(row, col) +
                                                " is not a nonnegative integer");
  }
  return v;
}

bool parse_flag(std::string_view s, int row, int col) {
  if (s == "1" || s == "true" || s == "TRUE" || s == "True") return true;
  if (s == "0" || s == "false" || s == "FALSE" || s == "False") return false;
  throw Error(ErrorCode::ParseError, "exclude flag '" + std::string(s) + "' at " + where(row, col) + " is not 0/1");
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorCode::ParseError, "column '" + name + "' not found in header");
  return static_cast<int>(it - header.begin());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace

Dataset parse_csv(std::istream& in, const std::optional<std::string>& label_column,
                  const std::optional<std::string>& exclude_column) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "missing header row");
  std::vector<std::string> header;
  for (std::string_view f : split(line)) header.emplace_back(f);
  const int label_col = label_column ? find_column(header, *label_column) : -1;
  const int exclude_col = exclude_column ? find_column(header, *exclude_column) : -1;
  Dataset ds;
  std::vector<int> feature_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (c == label_col || c == exclude_col) continue;
    feature_cols.push_back(c);
    ds.column_names.push_back(header[c]);
  }
  if (feature_cols.empty()) throw Error(ErrorCode::ParseError, "no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::vector<bool> excluded;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                                             " cells, header has " + std::to_string(header.size()));
    }
    for (int c : feature_cols) values.push_back(parse_cell(cells[c], row, c));
    if (label_col >= 0) labels.push_back(parse_label(cells[label_col], row, label_col));
    if (exclude_col >= 0) excluded.push_back(parse_flag(cells[exclude_col], row, exclude_col));
  }
  const int n = static_cast<int>(values.size() / feature_cols.size());
  if (n == 0) throw Error(ErrorCode::EmptyInput, "no data rows");
  ds.rows = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, static_cast<Eigen::Index>(feature_cols.size()));
  if (label_col >= 0) {
    const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<bool> seen(static_cast<std::size_t>(classes), false);
    for (int l : labels) seen[l] = true;
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw Error(ErrorCode::LabelNotInteger, "labels must be the contiguous integers 0.." + std::to_string(classes - 1));
    }
    ds.true_labels = std::move(labels);
  }
  if (exclude_col >= 0) ds.excluded = std::move(excluded);
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const std::optional<std::string>& label_column,
                 const std::optional<std::string>& exclude_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return parse_csv(in, label_column, exclude_column);
}

std::vector<int> map_labels(const Matrix& z) {
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index j = 0; j < z.rows(); ++j) {
    int best = 0;
    for (int h = 1; h < z.cols(); ++h) {
      if (z(j, h) > z(j, best)) best = h;  // strict: ties keep the lower index
    }
    out[static_cast<std::size_t>(j)] = best;
  }
  return out;
}

std::vector<int> assign_labels(const Matrix& data, const MixtureModel& model, const CdfOptions& cdf) {
  return map_labels(responsibilities(data, model, Exec::parallel, cdf));
}

double misclassification_rate(const std::vector<int>& pred, const std::vector<int>& truth,
                              const std::vector<bool>* exclude) {
  if (pred.size() != truth.size()) throw Error(ErrorCode::LengthMismatch, "pred and truth lengths differ");
  if (exclude && exclude->size() != pred.size()) throw Error(ErrorCode::LengthMismatch, "exclude mask length differs");
  int classes = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || truth[i] < 0) throw Error(ErrorCode::InvalidArgument, "labels must be nonnegative");
    classes = std::max({classes, pred[i] + 1, truth[i] + 1});
  }
  if (classes > kMaxScoredClasses) {
    throw Error(ErrorCode::TooManyClasses, std::to_string(classes) + " classes exceed the exhaustive bound of 10");
  }
  std::vector<long long> confusion(static_cast<std::size_t>(classes * classes), 0);
  long long scored = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (exclude && (*exclude)[i]) continue;
    ++confusion[static_cast<std::size_t>(pred[i] * classes + truth[i])];
    ++scored;
  }
  if (scored == 0) throw Error(ErrorCode::EmptyInput, "no rows left to score");
  std::vector<int> perm(static_cast<std::size_t>(classes));
  std::iota(perm.begin(), perm.end(), 0);
  long long best = 0;
  do {
    long long agree = 0;
    for (int a = 0; a < classes; ++a) agree += confusion[static_cast<std::size_t>(a * classes + perm[a])];
    best = std::max(best, agree);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(scored - best) / static_cast<double>(scored);
}

int run(const RunConfig& config) {
  using nlohmann::json;
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  json report{{"seed", config.seed}};
  int code = kExitError;
  try {
    std::filesystem::create_directories(config.output_dir);
    if (config.g < 1) throw Error(ErrorCode::InvalidArgument, "g must be >= 1");
    if (!(config.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be > 0");
    const Dataset ds = load_csv(config.data_path, config.label_column, config.exclude_column);
    FitOptions opts;
    opts.max_iter = config.max_iter;
    opts.tol = config.tol;
    opts.seed = config.seed;
    opts.init = config.init;
    opts.dof_update = config.dof_update;
    opts.mc_draws = config.mc_draws;
    const FitReport fit = fit_em(ds.rows, config.g, config.family, opts);
    const std::vector<int> labels = map_labels(fit.responsibilities);

    write_text(config.output_dir / "model.json", model_to_json(fit.model).dump(2) + "\n");
    std::ostringstream lab;
    lab << "row,label\n";
    for (std::size_t j = 0; j < labels.size(); ++j) lab << j << ',' << labels[j] << '\n';
    write_text(config.output_dir / "labels.csv", lab.str());
    std::ostringstream tr;
    tr.precision(17);
    tr << "iteration,loglik\n";
    for (std::size_t k = 0; k < fit.loglik_trace.size(); ++k) tr << k << ',' << fit.loglik_trace[k] << '\n';
    write_text(config.output_dir / "trace.csv", tr.str());

    report["status"] = "ok";
    report["family"] = std::string(to_string(config.family));
    report["dof_update"] = std::string(to_string(config.dof_update));
    report["g"] = config.g;
    report["n"] = static_cast<int>(ds.rows.rows());
    report["p"] = static_cast<int>(ds.rows.cols());
    report["loglik"] = fit.loglik_trace.back();
    report["iterations"] = fit.iterations;
    report["converged"] = fit.converged;
    report["warnings"] = fit.warnings;
    if (ds.true_labels) {
      const std::vector<bool>* mask = ds.excluded ? &*ds.excluded : nullptr;
      report["misclassification_rate"] = misclassification_rate(labels, *ds.true_labels, mask);
      if (mask) report["excluded_rows"] = std::count(mask->begin(), mask->end(), true);
    }
    code = fit.converged ? kExitConverged : kExitMaxIter;
  } catch (const Error& e) {
    report["status"] = "error";
    report["error"] = json{{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
  } catch (const std::exception& e) {
    report["status"] = "error";
    report["error"] = json{{"code", "Internal"}, {"message", e.what()}};
  }
  report["wall_time_s"] = elapsed();
  validate_report(report);
  try {
    write_text(config.output_dir / "report.json", report.dump(2) + "\n");
  } catch (const Error&) {
    return kExitError;
  }
  return code;
}

}  // namespace skewmix
