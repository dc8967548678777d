#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "msynth/accountant.hpp"
#include "msynth/errors.hpp"
#include "msynth/mechanisms.hpp"
#include "oracle_utils.hpp"

using namespace msynth;

TEST_CASE("zero-noise measurement stores exact weighted counts") {
  Domain d = fixtures::survey_domain();
  Dataset data = fixtures::survey_dataset();
  MeasureOptions opts;
  opts.sigma = 50.0;
  opts.zero_noise = true;
  RngStream rng(1);
  RdpLedger ledger;
  auto log = measure_marginals(data, d, {Clique({0, 1}), Clique({1, 2})}, {},
                               opts, rng, ledger);
  REQUIRE(log.size() == 2);
  const double w = 1.0 / std::sqrt(2.0);
  CHECK(log.items()[0].weight == doctest::Approx(w).epsilon(1e-15));
  CHECK(log.items()[1].weight == doctest::Approx(w).epsilon(1e-15));
  for (int i = 0; i < 6; ++i) {
    CHECK(log.items()[0].noisy_values[i] ==
          doctest::Approx(w * fixtures::kTrueSexLab[i]).epsilon(1e-12));
    CHECK(log.items()[1].noisy_values[i] ==
          doctest::Approx(w * fixtures::kTrueLabSchool[i]).epsilon(1e-12));
  }
  CHECK(log.items()[0].kind == TransformKind::identity);
  CHECK(log.items()[0].sigma == 50.0);
}

TEST_CASE("weights are normalized to unit joint L2 norm") {
  Domain d = fixtures::survey_domain();
  Dataset data = fixtures::survey_dataset();
  MeasureOptions opts;
  opts.zero_noise = true;
  RngStream rng(1);
  RdpLedger ledger;
  auto log = measure_marginals(data, d,
                               {Clique({0}), Clique({1}), Clique({2})},
                               {2.0, 1.0, 1.0}, opts, rng, ledger);
  double norm = 0.0;
  for (const auto& m : log.items()) norm += m.weight * m.weight;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(log.items()[0].weight ==
        doctest::Approx(2.0 * log.items()[1].weight).epsilon(1e-12));
}

TEST_CASE("one release charges exactly one unit-sensitivity gaussian entry") {
  Domain d = fixtures::survey_domain();
  Dataset data = fixtures::survey_dataset();
  MeasureOptions opts;
  opts.sigma = 7.5;
  RngStream rng(2);
  RdpLedger ledger;
  measure_marginals(data, d, {Clique({0}), Clique({1, 2})}, {}, opts, rng,
                    ledger);
  REQUIRE(ledger.entries().size() == 1);
  CHECK(ledger.entries()[0].rho ==
        doctest::Approx(gaussian_rho(7.5, 1.0)).epsilon(1e-15));
}

TEST_CASE("measurement is deterministic in the stream seed") {
  Domain d = fixtures::survey_domain();
  Dataset data = fixtures::survey_dataset();
  MeasureOptions opts;
  opts.sigma = 10.0;
  auto once = [&](std::uint64_t seed) {
    RngStream rng(seed);
    RdpLedger ledger;
    return measure_marginals(data, d, {Clique({0, 1})}, {}, opts, rng, ledger);
  };
  auto a = once(5), b = once(5), c = once(6);
  CHECK(a.items()[0].noisy_values == b.items()[0].noisy_values);
  CHECK(a.items()[0].noisy_values != c.items()[0].noisy_values);
}

TEST_CASE("noise residuals match the declared scale") {
  Domain d;
  d.add("A", 4);
  Dataset data(1, 400);
  for (std::size_t r = 0; r < 400; ++r)
    data.set_value(r, 0, static_cast<int>(r % 4));
  MeasureOptions opts;
  opts.sigma = 15.0;
  double sum = 0.0, sumsq = 0.0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 2500; ++seed) {
    RngStream rng(seed);
    RdpLedger ledger;
    auto log = measure_marginals(data, d, {Clique({0})}, {}, opts, rng,
                                 ledger);
    for (double y : log.items()[0].noisy_values) {
      double resid = y - log.items()[0].weight * 100.0;
      sum += resid;
      sumsq += resid * resid;
      ++n;
    }
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.5);
  CHECK(var == doctest::Approx(15.0 * 15.0).epsilon(0.05));
}

TEST_CASE("measurement validation errors") {
  Domain d = fixtures::survey_domain();
  Dataset data = fixtures::survey_dataset();
  Dataset empty(3, 0);
  MeasureOptions opts;
  RngStream rng(1);
  RdpLedger ledger;
  CHECK_THROWS_AS(measure_marginals(data, d, {}, {}, opts, rng, ledger),
                  EmptyCandidates);
  CHECK_THROWS_AS(
      measure_marginals(empty, d, {Clique({0})}, {}, opts, rng, ledger),
      EmptyDataset);
  CHECK_THROWS_AS(measure_marginals(data, d, {Clique({0})}, {1.0, 2.0}, opts,
                                    rng, ledger),
                  LengthMismatch);
  CHECK_THROWS_AS(measure_marginals(data, d, {Clique({0})}, {-1.0}, opts, rng,
                                    ledger),
                  NonPositiveParameter);
  MeasureOptions bad;
  bad.sigma = 0.0;
  CHECK_THROWS_AS(
      measure_marginals(data, d, {Clique({0})}, {}, bad, rng, ledger),
      NonPositiveParameter);
  MeasureOptions capped;
  capped.cell_cap = 4;
  CHECK_THROWS_AS(
      measure_marginals(data, d, {Clique({0, 1})}, {}, capped, rng, ledger),
      CliqueTooLarge);
}

TEST_CASE("log serialization roundtrips both transform kinds") {
  Domain d = fixtures::survey_domain();
  MeasurementLog log = fixtures::survey_log();
  Measurement agg;
  agg.clique = Clique({2});
  agg.kind = TransformKind::aggregate;
  agg.weight = 0.5;
  agg.sigma = 3.25;
  agg.noisy_values = {12.5, -3.75};
  agg.rows = {{0, 1}, {1, 3}};
  log.append(agg);
  log.set_seed_record(99, "measure-1");

  auto back = MeasurementLog::from_ndjson(log.to_ndjson(d), d);
  REQUIRE(back.size() == 3);
  CHECK(back.seed() == 99);
  CHECK(back.stream() == "measure-1");
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.items()[i].clique == log.items()[i].clique);
    CHECK(back.items()[i].kind == log.items()[i].kind);
    CHECK(back.items()[i].weight == log.items()[i].weight);
    CHECK(back.items()[i].sigma == log.items()[i].sigma);
    CHECK(back.items()[i].noisy_values == log.items()[i].noisy_values);
  }
  CHECK(back.items()[2].rows.size() == 2);
  CHECK(back.items()[2].rows[1].cell == 1);
  CHECK(back.items()[2].rows[1].source_count == 3);
  CHECK_THROWS_AS(MeasurementLog::from_ndjson("{broken", d), ParseError);
}

TEST_CASE("exponential mechanism matches the softmax law") {
  // Scores [0, ln 3] at eps_step 1 give probabilities [1/4, 3/4].
  std::vector<double> scores = {0.0, std::log(3.0)};
  RngStream rng(77);
  RdpLedger ledger;
  int hits = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i)
    hits += exponential_mechanism(scores, 1.0, 1.0, rng, ledger) == 1 ? 1 : 0;
  // 5 sigma band around 0.75.
  double sd = std::sqrt(0.75 * 0.25 / draws);
  CHECK(std::fabs(hits / static_cast<double>(draws) - 0.75) < 5.0 * sd);
  CHECK(ledger.entries().size() == static_cast<std::size_t>(draws));
  CHECK(ledger.entries()[0].rho ==
        doctest::Approx(exponential_rho(1.0, 1.0)).epsilon(1e-15));
}

TEST_CASE("exponential mechanism is shift invariant and deterministic") {
  std::vector<double> a = {1.0, 5.0, 3.0};
  std::vector<double> b = {101.0, 105.0, 103.0};
  RngStream r1(9), r2(9);
  RdpLedger l1, l2;
  for (int i = 0; i < 2000; ++i)
    CHECK(exponential_mechanism(a, 0.7, 1.0, r1, l1) ==
          exponential_mechanism(b, 0.7, 1.0, r2, l2));
}

TEST_CASE("extreme scores select the best candidate") {
  std::vector<double> scores = {10.0, 4.0, 9.99};
  RngStream rng(13);
  RdpLedger ledger;
  for (int i = 0; i < 200; ++i)
    CHECK(exponential_mechanism(scores, 5000.0, 1.0, rng, ledger) == 0);
}

TEST_CASE("exponential mechanism validation") {
  RngStream rng(1);
  RdpLedger ledger;
  CHECK_THROWS_AS(exponential_mechanism({}, 1.0, 1.0, rng, ledger),
                  EmptyCandidates);
  CHECK_THROWS_AS(exponential_mechanism({1.0}, 0.0, 1.0, rng, ledger),
                  NonPositiveParameter);
  CHECK_THROWS_AS(exponential_mechanism({1.0}, 1.0, 0.0, rng, ledger),
                  NonPositiveParameter);
}
