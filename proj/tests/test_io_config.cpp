#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <limits>

#include "sncm/config.hpp"
#include "sncm/io.hpp"

using namespace sncm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sncm_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("number formatting round-trips") {
  Rng rng(51);
  for (int k = 0; k < 2000; ++k) {
    const double x = std::ldexp(rng.normal(), static_cast<int>(rng.index(80)) - 40);
    bool ok = false;
    CHECK(parse_double(format_double(x), ok) == x);
    CHECK(ok);
    CHECK(parse_double(format_shortest(x), ok) == x);
  }
  CHECK(format_shortest(0.05) == "0.05");
  CHECK(format_shortest(100.0) == "100");
  bool ok = true;
  parse_double("1.5abc", ok);
  CHECK_FALSE(ok);
  CHECK(std::isnan(parse_double(format_double(std::nan("")), ok)));
}

TEST_CASE("CSV parsing") {
  const CsvTable t = parse_csv("a, b ,\"c,d\"\n1,2,3\n\"4\",5, 6\n");
  CHECK(t.header == std::vector<std::string>{"a", "b", "c,d"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][0] == "4");
  CHECK(t.rows[1][2] == "6");
  CHECK(t.column("c,d") == 2);
  CHECK_THROWS(t.column("zz"));
  CHECK(parse_csv(t.to_string()).rows == t.rows);

  try {
    parse_csv("a,b\n1,2\n3\n", "f.csv");
    FAIL("ragged row accepted");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(std::string(e.what()).find("f.csv") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_csv("a,a\n1,2\n"), ParseError);
  CHECK_THROWS_AS(parse_csv(""), ParseError);
  CHECK_THROWS_AS(parse_csv("a\n\"1\n"), ParseError);
}

TEST_CASE("dataset ingestion") {
  const CsvTable t = parse_csv("y,x1,x2,age\n1.5,0.1,0.2,30\nNA,0.3,0.4,40\n,0.5,0.6,50\n2.5,0.7,0.8,60\n");
  IngestOptions o;
  o.confounders = {"age"};
  const CensoredDataset d = dataset_from_table(t, o);
  CHECK(d.n() == 4);
  CHECK(d.p() == 2);
  CHECK(d.s() == 1);
  CHECK_FALSE(d.y[1].has_value());
  CHECK_FALSE(d.y[2].has_value());
  CHECK(d.psi == 1.5);
  CHECK(d.predictor_names == std::vector<std::string>{"x1", "x2"});
  CHECK(d.C(3, 0) == 60.0);

  o.psi = 1.0;
  CHECK(dataset_from_table(t, o).psi == 1.0);
  o.psi = 2.0;  // above an observed value
  CHECK_THROWS(dataset_from_table(t, o));
  o.psi.reset();
  o.response = "x1";
  o.predictors = {"x1"};
  CHECK_THROWS(dataset_from_table(t, o));

  try {
    dataset_from_table(parse_csv("y,x\n1,2\n3,oops\n"), {}, "d.csv");
    FAIL("non-numeric accepted");
  } catch (const ParseError& e) {
    CHECK(e.row() == 3);
    CHECK(e.col() == 2);
  }
  CHECK_THROWS(dataset_from_table(parse_csv("y,x\nNA,2\n"), {}));

  IngestOptions multi;
  CHECK(response_columns(parse_csv("m1,m2,x\n1,2,3\n"), "m1,m2", multi) == std::vector<std::string>{"m1", "m2"});
}

TEST_CASE("dataset CSV round-trip is bit-exact") {
  Rng rng(52);
  CensoredDataset d;
  d.X = Eigen::MatrixXd::NullaryExpr(30, 4, [&]() { return rng.normal() / 3.0; });
  d.C = Eigen::MatrixXd::NullaryExpr(30, 1, [&]() { return rng.uniform(); });
  for (int i = 0; i < 30; ++i) d.y.push_back(i % 4 ? std::optional<double>(1.0 + std::abs(rng.normal()) / 7) : std::nullopt);
  d.predictor_names = {"a", "b", "c", "d"};
  d.confounder_names = {"sex"};
  d.psi = d.min_observed();
  const fs::path dir = scratch("csv");
  write_file_atomic(dir / "d.csv", dataset_to_csv(d));
  IngestOptions o;
  o.confounders = {"sex"};
  const CensoredDataset back = ingest_csv(dir / "d.csv", o);
  CHECK(back.y == d.y);
  CHECK(back.X == d.X);
  CHECK(back.C == d.C);
  CHECK(back.psi == d.psi);
  CHECK(back.predictor_names == d.predictor_names);
  CHECK_FALSE(fs::exists(dir / "d.csv.tmp"));
}

TEST_CASE("hierarchy JSON and relationship CSV") {
  const std::string text = R"({"predictors": ["a", "b", "c", "d"],
    "groups": [{"name": "G", "members": ["a", 1], "children": [{"name": "H", "members": ["c"]}]},
               {"name": "K", "members": ["d"]}]})";
  const Hierarchy h = parse_hierarchy_json(text);
  CHECK(h.predictor_names.size() == 4);
  CHECK(hierarchy_predictor_count(h.root) == 4);
  const Hierarchy again = parse_hierarchy_json(hierarchy_to_json(h));
  const RelationshipMatrix R = build_relationship_matrix(h.root);
  CHECK(build_relationship_matrix(again.root).entries() == R.entries());
  CHECK(R(0, 1) > 0.0);
  CHECK(R(0, 3) == 0.0);
  CHECK(R(0, 2) > 0.0);

  CHECK_THROWS(parse_hierarchy_json(R"({"predictors": ["a"], "groups": [{"name": "G", "members": ["zz"]}]})"));
  CHECK_THROWS(parse_hierarchy_json(R"({"predictors": ["a", "a"], "groups": []})"));
  CHECK_THROWS(parse_hierarchy_json("{not json"));

  const fs::path dir = scratch("rel");
  const RelationshipMatrix named(R.entries(), h.predictor_names);
  write_file_atomic(dir / "R.csv", relationship_to_csv(named));
  const RelationshipMatrix back = read_relationship_csv(dir / "R.csv");
  CHECK(back.entries() == R.entries());
  CHECK(back.names() == h.predictor_names);
}

TEST_CASE("git blob ids") {
  // Known ids: empty blob and "hello\n".
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("chain bundles round-trip and detect tampering") {
  CensoredDataset d;
  Rng rng(53);
  d.X = Eigen::MatrixXd::NullaryExpr(12, 3, [&]() { return rng.normal(); });
  d.C = Eigen::MatrixXd::NullaryExpr(12, 1, [&]() { return rng.normal(); });
  for (int i = 0; i < 12; ++i) d.y.push_back(i % 3 ? std::optional<double>(2.0 + std::abs(rng.normal())) : std::nullopt);
  d.psi = d.min_observed();
  Hyperparams hp = Hyperparams::simulation_defaults(3);
  hp.lambda_sq = {25.0};
  McmcConfig c;
  c.iterations = 60;
  c.burn_in = 10;
  c.thin = 5;
  const PosteriorChain chain = run_chain(d, hp, c, {}, Rng(99), 2);
  const fs::path dir = scratch("bundle");
  write_chain_bundle(dir, chain, {"a", "b", "c"}, {"age"});
  const PosteriorChain back = read_chain_bundle(dir);
  REQUIRE(back.draws.size() == chain.draws.size());
  CHECK(back.chain_index == 2);
  CHECK(back.seed == chain.seed);
  CHECK(back.config.thin == 5);
  CHECK(back.loglik == chain.loglik);
  for (std::size_t k = 0; k < chain.draws.size(); ++k) {
    CHECK(back.draws[k].beta0 == chain.draws[k].beta0);
    CHECK(back.draws[k].beta_star == chain.draws[k].beta_star);
    CHECK(back.draws[k].gamma == chain.draws[k].gamma);
    CHECK(back.draws[k].alpha == chain.draws[k].alpha);
    CHECK(back.draws[k].rho == chain.draws[k].rho);
  }
  std::string scalars = read_file(dir / "scalars.csv");
  scalars.back() = scalars.back() == '1' ? '2' : '1';
  write_file_atomic(dir / "scalars.csv", scalars + "\n");
  CHECK_THROWS(read_chain_bundle(dir));
  CHECK_THROWS(read_chain_bundle(scratch("empty")));
}

TEST_CASE("run configuration") {
  const RunConfig defaults = RunConfig::from_ini("");
  CHECK(defaults.seed == 1);
  CHECK(defaults.prior == "independent");
  CHECK(defaults.mcmc.chains == 3);
  const RunConfig c = RunConfig::from_ini(
      "[run]\nseed = 42\n[model]\nerror_model = normal\nnu_sq = 2.5\n[mcmc]\niterations = 2000\nburn_in = 500\n"
      "[selection]\nfdr_target = 0.1\n");
  CHECK(c.seed == 42);
  CHECK(c.mcmc.seed == 42);
  CHECK(c.error_model == ErrorModel::normal);
  CHECK(*c.nu_sq == 2.5);
  CHECK(c.mcmc.iterations == 2000);
  CHECK(c.fdr_target == 0.1);
  // The INI text round-trips.
  const RunConfig again = RunConfig::from_ini(c.to_ini());
  CHECK(again.to_ini() == c.to_ini());
  CHECK(c.to_ini(false).find("threads") == std::string::npos);

  CHECK_THROWS(RunConfig::from_ini("[bogus]\nx = 1\n"));
  CHECK_THROWS(RunConfig::from_ini("[run]\nsede = 3\n"));
  CHECK_THROWS(RunConfig::from_ini("[run]\nseed = abc\n"));
  CHECK_THROWS(RunConfig::from_ini("[prior]\nkind = mrf\n"));
  CHECK_THROWS(RunConfig::from_ini("[data]\npaths = /definitely/not/here.csv\n"));
  CHECK_THROWS(RunConfig::from_ini("[model]\nrho0 = 2\n"));
  CHECK_THROWS(RunConfig::from_ini("[mcmc]\niterations = 10\nburn_in = 10\n"));

  CensoredDataset d;
  d.y = {1.0, 2.0, std::nullopt, 3.0};
  d.X = Eigen::MatrixXd::Identity(4, 3);
  d.X(3, 0) = 1.0;
  d.C = Eigen::MatrixXd::Zero(4, 0);
  d.psi = 1.0;
  const Hyperparams h = c.hyperparams(d, MrfPrior::independent(c.omega, 3));
  CHECK(h.nu_sq == 2.5);
  CHECK(h.rho0 == doctest::Approx(5 * std::sqrt(0.75)));
}
