#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "skewmix/cluster.hpp"
#include "skewmix/error.hpp"
#include "skewmix/model_io.hpp"
#include "support.hpp"
#include "synthetic_model.hpp"

using namespace skewmix;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

template <class F>
void check_error(F&& f, ErrorCode code) {
  try {
    f();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

Dataset parse(const std::string& text, std::optional<std::string> label = std::nullopt,
              std::optional<std::string> exclude = std::nullopt) {
  std::istringstream in(text);
  return parse_csv(in, label, exclude);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("skewmix_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_synthetic_csv(const fs::path& dir, int n, std::uint64_t seed) {
  const MixtureSample s = sample_mixture(synthetic::cytometry_model(), n, seed);
  const fs::path path = dir / "data.csv";
  std::ofstream f(path);
  f << "a,b,c,label\n";
  f.precision(17);
  for (int j = 0; j < n; ++j) f << s.rows(j, 0) << ',' << s.rows(j, 1) << ',' << s.rows(j, 2) << ',' << s.labels[j] << '\n';
  return path;
}

}  // namespace

TEST_SUITE("cluster") {

TEST_CASE("csv parsing") {
  const Dataset d = parse("x,label,y,flag\n1.5,1,2,0\n-3e-1,0,4.25,true\n", "label", "flag");
  CHECK(d.rows.rows() == 2);
  CHECK(d.rows.cols() == 2);
  CHECK(d.column_names == std::vector<std::string>{"x", "y"});
  CHECK(d.rows(1, 0) == -0.3);
  CHECK(d.rows(1, 1) == 4.25);
  CHECK(*d.true_labels == std::vector<int>{1, 0});
  CHECK(*d.excluded == std::vector<bool>{false, true});
  CHECK(!parse("x,y\n1,2\n").true_labels);
  check_error([] { parse("x,y\n1,\n"); }, ErrorCode::MissingValue);
  check_error([] { parse("x,y\n1,abc\n"); }, ErrorCode::ParseError);
  check_error([] { parse("x,label\n1,0.5\n2,0\n", "label"); }, ErrorCode::LabelNotInteger);
  check_error([] { parse("x,y\n1,NaN\n"); }, ErrorCode::MissingValue);
  check_error([] { parse("x,label\n1,0\n2,2\n", "label"); }, ErrorCode::LabelNotInteger);
  check_error([] { parse("x,y\n1,2\n", "label"); }, ErrorCode::ParseError);
  check_error([] { load_csv("/nonexistent/file.csv"); }, ErrorCode::IoError);
}

TEST_CASE("map labels") {
  Matrix z(3, 3);
  z << 0.2, 0.5, 0.3, 0.4, 0.4, 0.2, 0.1, 0.1, 0.8;
  CHECK(map_labels(z) == std::vector<int>{1, 0, 2});
  CHECK(map_labels(Matrix::Ones(4, 1)) == std::vector<int>(4, 0));
  std::vector<RestrictedParams> comps;
  comps.emplace_back(Vector::Zero(2), SpdMatrix::identity(2), (Vector(2) << 0.6, 0.3).finished(), 6.0);
  comps.emplace_back((Vector(2) << 12.0, 3.0).finished(), SpdMatrix::identity(2), (Vector(2) << -0.5, 0.5).finished(), 9.0);
  const MixtureModel m(Family::rmst, (Vector(2) << 0.5, 0.5).finished(), std::move(comps));
  const MixtureSample s = sample_mixture(m, 3000, 1);
  Matrix tie(1, 2);
  tie << 0.0, 0.0;
  const MixtureModel twins(Family::rmst, (Vector(2) << 0.5, 0.5).finished(),
                           std::vector<RestrictedParams>{m.restricted()[0], m.restricted()[0]});
  CHECK(assign_labels(tie, twins) == std::vector<int>{0});
  const std::vector<int> labels = assign_labels(s.rows, m);
  CHECK(misclassification_rate(labels, s.labels) <= 0.01);
}

TEST_CASE("misclassification rate") {
  const std::vector<int> t{0, 0, 1, 1};
  CHECK(misclassification_rate(t, t) == 0.0);
  CHECK(misclassification_rate({1, 1, 0, 0}, t) == 0.0);
  CHECK(misclassification_rate({1, 1, 1, 0}, t) == 0.25);
  const std::vector<bool> mask{false, false, false, true};
  CHECK(misclassification_rate({1, 1, 0, 1}, t, &mask) == 0.0);
  CHECK(misclassification_rate({1, 1, 0, 1}, t) == 0.25);
  check_error([] { misclassification_rate({0, 1}, {0}); }, ErrorCode::LengthMismatch);
  std::vector<int> eleven(11);
  std::iota(eleven.begin(), eleven.end(), 0);
  check_error([&] { misclassification_rate(eleven, eleven); }, ErrorCode::TooManyClasses);
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + trial % 5;
    std::vector<int> a(40), b(40), perm(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = static_cast<int>(rng() % k);
      b[i] = static_cast<int>(rng() % k);
    }
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> relabeled(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) relabeled[i] = perm[a[i]];
    const double r = misclassification_rate(a, b);
    CHECK(misclassification_rate(relabeled, b) == r);
    CHECK(misclassification_rate(b, a) == r);
    CHECK(r == brute_force_rate(a, b));
  }
}

TEST_CASE("model json round trip") {
  const MixtureModel m = synthetic::cytometry_model();
  const MixtureModel back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
  CHECK(back.family() == m.family());
  CHECK(back.weights() == m.weights());
  for (int h = 0; h < m.g(); ++h) {
    CHECK(back.restricted()[h].mu() == m.restricted()[h].mu());
    CHECK(back.restricted()[h].sigma().matrix() == m.restricted()[h].sigma().matrix());
    CHECK(back.restricted()[h].delta() == m.restricted()[h].delta());
    CHECK(back.nu(h) == m.nu(h));
  }
  check_error([] { model_from_json(nlohmann::json::parse(R"({"family":"rmst"})")); }, ErrorCode::ParseError);
}

TEST_CASE("report validation") {
  check_error([] { validate_report(nlohmann::json::object()); }, ErrorCode::InvalidArgument);
  const nlohmann::json err = {{"status", "error"}, {"seed", 1}, {"wall_time_s", 0.1},
                              {"error", {{"code", "IoError"}, {"message", "x"}}}};
  CHECK_NOTHROW(validate_report(err));
  nlohmann::json bad = err;
  bad["error"].erase("code");
  check_error([&] { validate_report(bad); }, ErrorCode::InvalidArgument);
}

TEST_CASE("end-to-end run") {
  const fs::path dir = scratch("run");
  RunConfig cfg;
  cfg.data_path = write_synthetic_csv(dir, 900, 2);
  cfg.label_column = "label";
  cfg.max_iter = 60;
  cfg.seed = 4;
  cfg.output_dir = dir / "a";
  const int code = run(cfg);
  CHECK((code == kExitConverged || code == kExitMaxIter));
  for (const char* f : {"model.json", "labels.csv", "trace.csv", "report.json"}) CHECK(fs::exists(cfg.output_dir / f));
  const nlohmann::json report = nlohmann::json::parse(slurp(cfg.output_dir / "report.json"));
  CHECK_NOTHROW(validate_report(report));
  CHECK(report.at("misclassification_rate").get<double>() <= 0.05);

  RunConfig again = cfg;
  again.output_dir = dir / "b";
  CHECK(run(again) == code);
  CHECK(slurp(cfg.output_dir / "model.json") == slurp(again.output_dir / "model.json"));
  CHECK(slurp(cfg.output_dir / "labels.csv") == slurp(again.output_dir / "labels.csv"));

  RunConfig capped = cfg;
  capped.max_iter = 2;
  capped.output_dir = dir / "c";
  CHECK(run(capped) == kExitMaxIter);

  RunConfig missing = cfg;
  missing.data_path = dir / "absent.csv";
  missing.output_dir = dir / "d";
  CHECK(run(missing) == kExitError);
  const nlohmann::json err = nlohmann::json::parse(slurp(missing.output_dir / "report.json"));
  CHECK(err.at("status") == "error");
  CHECK(err.at("error").at("code") == "IoError");
  fs::remove_all(dir);
}

TEST_CASE("bundled synthetic data set is recovered") {
  const fs::path dir = scratch("bundled");
  RunConfig cfg;
  cfg.data_path = SKEWMIX_DATA_DIR "/synthetic_dlbcl.csv";
  cfg.label_column = "label";
  cfg.exclude_column = "dead";
  cfg.output_dir = dir;
  CHECK(run(cfg) != kExitError);
  const nlohmann::json report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report.at("misclassification_rate").get<double>() <= 0.05);
  fs::remove_all(dir);
}

}
