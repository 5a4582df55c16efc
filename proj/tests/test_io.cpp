#include <doctest.h>

#include <filesystem>
#include <random>

#include "mepath/error.hpp"
#include "mepath/io.hpp"
#include "mepath/lbi.hpp"
#include "mepath/simulation.hpp"
#include "oracles.hpp"

using namespace mepath;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kIoError;
}

std::string message_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

bool same_records(const ComparisonDataset& a, const ComparisonDataset& b) {
  const auto ra = a.records();
  const auto rb = b.records();
  if (ra.size() != rb.size()) return false;
  for (std::size_t k = 0; k < ra.size(); ++k) {
    if (ra[k].user != rb[k].user || ra[k].left != rb[k].left || ra[k].right != rb[k].right ||
        ra[k].outcome != rb[k].outcome || ra[k].weight != rb[k].weight) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("three-line comparisons with identity features") {
  const ComparisonDataset ds = io::parse_dataset(
      "user,left,right,y\nann,apple,pear,1\nbob,pear,fig,-1\n", std::nullopt);
  CHECK(ds.size() == 2);
  CHECK(ds.n_items() == 3);
  CHECK(ds.item_ids() == std::vector<std::string>{"apple", "fig", "pear"});
  CHECK(ds.features().mode() == FeatureMode::kIdentity);
  CHECK(ds.records()[1].left == 2);
}

TEST_CASE("comment lines and CRLF endings") {
  const ComparisonDataset ds = io::parse_dataset(
      "# exported\r\nuser,left,right,y,weight\r\n# skip\r\nu,a,b,1,2.5\r\n", std::nullopt);
  CHECK(ds.size() == 1);
  CHECK(ds.weight()[0] == 2.5);
}

TEST_CASE("parse errors") {
  const std::string feats = "item,f0,f1\na,1,0\nb,0,1\n";
  const auto missing = [&] {
    io::parse_dataset("user,left,right,y\nu,a,c,1\n", std::string_view(feats));
  };
  CHECK(code_of(missing) == ErrorCode::kParseError);
  CHECK(message_of(missing).find("'c'") != std::string::npos);

  CHECK(code_of([] { io::parse_dataset("user,lhs,right,y\nu,a,b,1\n", std::nullopt); }) ==
        ErrorCode::kHeaderMismatch);
  CHECK(code_of([] {
          io::parse_dataset("user,left,right,y\nu,a,b,1\n",
                            std::string_view("item,f1\na,1\nb,2\n"));
        }) == ErrorCode::kHeaderMismatch);
  CHECK(code_of([] {
          io::parse_dataset("user,left,right,y\nu,a,b,1\n",
                            std::string_view("item,f0\na,1\nb,2\na,3\n"));
        }) == ErrorCode::kDuplicateFeatureRow);
  CHECK(code_of([] { io::parse_dataset("user,left,right,y\nu,a,b,yes\n", std::nullopt); }) ==
        ErrorCode::kParseError);
  CHECK(code_of([] { io::parse_dataset("user,left,right,y\nu,a,b\n", std::nullopt); }) ==
        ErrorCode::kParseError);
  CHECK(code_of([] { io::parse_dataset("user,left,right,y\n", std::nullopt); }) ==
        ErrorCode::kEmptyDataset);
  CHECK(code_of([] { io::load_dataset("/nonexistent/file.csv", std::nullopt); }) ==
        ErrorCode::kParseError);
}

TEST_CASE("format_real round-trips") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = normal(rng) * std::pow(10.0, i % 20 - 10);
    CHECK(std::stod(io::format_real(v)) == v);
  }
  CHECK(io::format_real(1.0) == "1");
  CHECK(io::format_real(-0.5) == "-0.5");
}

TEST_CASE("simulated dataset round-trips through text") {
  SimConfig c;
  c.n_users = 8;
  const Simulation sim = generate(c);
  const std::string comps = io::comparisons_csv(sim.dataset);
  const auto feats = io::features_csv(sim.dataset);
  REQUIRE(feats.has_value());
  const ComparisonDataset back = io::parse_dataset(comps, std::string_view(*feats));
  CHECK(same_records(back, sim.dataset));
  CHECK(back.features() == sim.dataset.features());
  CHECK(back.user_ids() == sim.dataset.user_ids());
  CHECK(io::dataset_hash(back) == io::dataset_hash(sim.dataset));
  CHECK(io::comparisons_csv(back) == comps);

  const auto dir = std::filesystem::temp_directory_path() / "mepath_io_test";
  std::filesystem::create_directories(dir);
  io::save_dataset(sim.dataset, dir / "c.csv", dir / "f.csv");
  const ComparisonDataset loaded = io::load_dataset(dir / "c.csv", dir / "f.csv");
  CHECK(same_records(loaded, sim.dataset));
  std::filesystem::remove_all(dir);
}

TEST_CASE("hash depends on content") {
  const ComparisonDataset a =
      io::parse_dataset("user,left,right,y\nu,a,b,1\n", std::nullopt);
  const ComparisonDataset b =
      io::parse_dataset("user,left,right,y\nu,a,b,-1\n", std::nullopt);
  CHECK(io::dataset_hash(a).size() == 64);
  CHECK(io::dataset_hash(a) != io::dataset_hash(b));
  CHECK(io::dataset_hash(a) ==
        io::dataset_hash(io::parse_dataset("# c\nuser,left,right,y\nu,a,b,1.0\n", std::nullopt)));
}

TEST_CASE("paths round-trip bit-exactly") {
  std::mt19937_64 rng(4);
  oracle::SmallSpec spec;
  spec.dim = 3;
  spec.records = 60;
  const ComparisonDataset ds = oracle::random_dataset(spec, rng);

  SolverConfig empty;
  empty.max_iters = 0;
  const RegularizationPath zero = fit_path(ds, empty);
  const RegularizationPath zero_back = io::parse_path(io::serialize_path(zero, ds), ds);
  CHECK(zero_back.points == zero.points);

  SolverConfig c;
  c.family = LossFamily::kThurstoneMosteller;
  c.kappa = 4.0;
  c.max_iters = 500;
  c.record_every = 9;
  c.seed = 12;
  const RegularizationPath path = fit_path(ds, c);
  const std::string text = io::serialize_path(path, ds);
  const RegularizationPath back = io::parse_path(text, ds);
  CHECK(back.points == path.points);
  CHECK(back.events == path.events);
  CHECK(back.alpha == path.alpha);
  CHECK(back.spectral_norm == path.spectral_norm);
  CHECK(back.iterations == path.iterations);
  CHECK(back.mode == path.mode);
  CHECK(back.config.kappa == c.kappa);
  CHECK(back.config.family == c.family);
  CHECK(back.config.seed == c.seed);
  CHECK(io::serialize_path(back, ds) == text);
  CHECK(io::serialize_path(fit_path(ds, c), ds) == text);

  const ModelState s = path.points.back().state;
  CHECK(io::parse_state(io::serialize_state(s, ds), ds) == s);
}

TEST_CASE("a path refuses a different dataset") {
  std::mt19937_64 rng(5);
  const ComparisonDataset ds = oracle::random_dataset({}, rng);
  SolverConfig c;
  c.max_iters = 20;
  const std::string text = io::serialize_path(fit_path(ds, c), ds);
  auto recs = ds.records();
  recs[0].outcome = -recs[0].outcome;
  const ComparisonDataset other = build_dataset(recs, ds.features());
  CHECK(code_of([&] { io::parse_path(text, other); }) == ErrorCode::kHashMismatch);

  std::string corrupted = text;
  const auto at = corrupted.find("\"dataset_hash\":\"") + 16;
  corrupted[at] = corrupted[at] == '0' ? '1' : '0';
  CHECK(code_of([&] { io::parse_path(corrupted, ds); }) == ErrorCode::kHashMismatch);

  CHECK(code_of([&] { io::parse_path(text.substr(0, text.size() / 2), ds); }) ==
        ErrorCode::kParseError);
  CHECK(code_of([&] { io::parse_path("", ds); }) == ErrorCode::kParseError);
}

TEST_CASE("cv report lists folds and the mean") {
  CvReport r;
  r.t_grid = {0.0, 1.5};
  r.errors = {{0.5, 0.25}, {0.5, 0.5}};
  r.mean_errors = {0.5, 0.375};
  r.t_cv_index = 1;
  r.t_cv = 1.5;
  const std::string text = io::cv_report_csv(r);
  CHECK(text.find("0.375") != std::string::npos);
  CHECK(text.find("1.5") != std::string::npos);
}
