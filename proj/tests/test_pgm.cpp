#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "msynth/errors.hpp"
#include "msynth/graphical_model.hpp"
#include "msynth/junction_tree.hpp"
#include "oracle_utils.hpp"

using namespace msynth;

namespace {

// Random tree-structured model over a domain whose full joint has at most
// max_cells cells; returns the model with random potentials.
GraphicalModel random_tree_model(std::mt19937_64& gen, int max_attrs,
                                 std::size_t max_cells, double total) {
  std::uniform_int_distribution<int> nd(2, max_attrs);
  int d = nd(gen);
  // All sizes start at 2 (product 2^d <= max_cells for d <= 6), then random
  // positions grow while the joint stays within budget.
  std::vector<std::size_t> sizes(d, 2);
  std::size_t cells = std::size_t{1} << d;
  for (int tries = 0; tries < 4 * d; ++tries) {
    int a = static_cast<int>(gen() % d);
    if (sizes[a] < 4 && cells / sizes[a] * (sizes[a] + 1) <= max_cells) {
      cells = cells / sizes[a] * (sizes[a] + 1);
      ++sizes[a];
    }
  }
  Domain domain;
  for (int a = 0; a < d; ++a) domain.add("V" + std::to_string(a), sizes[a]);
  std::vector<Clique> cliques;
  for (int a = 1; a < d; ++a) {
    std::uniform_int_distribution<int> pd(0, a - 1);
    cliques.push_back(Clique({pd(gen), a}));
  }
  if (cliques.empty()) cliques.push_back(Clique({0}));
  auto jt = build_junction_tree(domain, cliques);
  GraphicalModel model(domain, jt, total);
  std::normal_distribution<double> theta(0.0, 1.0);
  for (auto& tk : model.theta())
    for (auto& v : tk) v = theta(gen);
  model.invalidate();
  return model;
}

void compare_marginal(const GraphicalModel& model,
                      const std::vector<double>& joint, const Clique& target,
                      double tol) {
  auto got = model.marginal(target);
  auto want = oracle::project_joint(joint, model.domain(), target);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(std::fabs(got[i] - want[i]) <= tol);
}

}  // namespace

TEST_CASE("belief propagation equals full enumeration on tree models") {
  std::mt19937_64 gen(606);
  for (int rep = 0; rep < 120; ++rep) {
    double total = 1.0 + 999.0 * std::generate_canonical<double, 53>(gen);
    GraphicalModel model = random_tree_model(gen, 6, 64, total);
    auto joint = oracle::enumerate_joint(model.domain(), model.tree().cliques,
                                         model.theta(), total);
    double tol = 1e-10 * total;
    // Every tree clique, every attribute, and a random cross pair.
    for (const auto& c : model.tree().cliques)
      compare_marginal(model, joint, c, tol);
    int d = static_cast<int>(model.domain().attr_count());
    for (int a = 0; a < d; ++a) compare_marginal(model, joint, Clique({a}), tol);
    if (d >= 2) {
      int i = static_cast<int>(gen() % d), j = static_cast<int>(gen() % d);
      if (i != j) compare_marginal(model, joint, Clique({i, j}), tol);
    }
    compare_marginal(model, joint, model.domain().all_attrs(), tol);
  }
}

TEST_CASE("forest components combine independently") {
  Domain domain;
  domain.add("A", 2);
  domain.add("B", 3);
  domain.add("C", 2);
  auto jt = build_junction_tree(domain, {Clique({0, 1}), Clique({2})});
  GraphicalModel model(domain, jt, 200.0);
  std::mt19937_64 gen(707);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (auto& tk : model.theta())
    for (auto& v : tk) v = nd(gen);
  model.invalidate();
  auto ab = model.marginal(Clique({0, 1}));
  auto c = model.marginal(Clique({2}));
  auto abc = model.marginal(Clique({0, 1, 2}));
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 2; ++k)
      CHECK(abc[i * 2 + k] ==
            doctest::Approx(ab[i] * c[k] / 200.0).epsilon(1e-10));
}

TEST_CASE("fit reproduces the published survey model tables") {
  SolverOptions opts;
  opts.iters = 4000;
  SolverDiagnostics diag;
  GraphicalModel model =
      estimate(fixtures::survey_domain(), fixtures::survey_log(), opts, &diag);

  CHECK(diag.estimated_total == doctest::Approx(fixtures::kOptTotal).epsilon(1e-9));
  CHECK(model.total() == diag.estimated_total);

  auto sl = model.marginal(Clique({0, 1}));
  auto ls = model.marginal(Clique({1, 2}));
  for (int i = 0; i < 6; ++i) {
    CHECK(std::fabs(sl[i] - fixtures::kFitSexLab[i]) < 1.0);
    CHECK(std::fabs(ls[i] - fixtures::kFitLabSchool[i]) < 1.0);
    // Against the closed-form optimum for this total the bar is much tighter.
    CHECK(std::fabs(sl[i] - fixtures::kOptSexLab[i]) < 2e-3);
    CHECK(std::fabs(ls[i] - fixtures::kOptLabSchool[i]) < 2e-3);
  }
  // The zero cells: (F,Y) in the first table, (Y,Y) in the second.
  CHECK(sl[5] < 1e-3);
  CHECK(ls[5] < 1e-3);
  // Both cliques agree on the shared LABFORCE masses: consistency is exact up
  // to inference roundoff, not merely approximate.
  double n_from_sl = sl[1] + sl[4];
  double n_from_ls = ls[2] + ls[3];
  CHECK(std::fabs(n_from_sl - n_from_ls) < 1e-6);
  auto lab = model.marginal(Clique({1}));
  for (int i = 0; i < 3; ++i)
    CHECK(std::fabs(lab[i] - fixtures::kOptLab[i]) < 2e-3);

  // The solved loss reaches the closed-form minimum.  The iterate stays
  // feasible, so it can only approach the optimum from above.
  CHECK(diag.final_loss >= fixtures::kOptLoss * (1.0 - 1e-9));
  CHECK(diag.final_loss <= fixtures::kOptLoss * (1.0 + 1e-5));

  // Unmeasured cliques from the same model.
  auto ss = model.marginal(Clique({0, 2}));
  for (int i = 0; i < 4; ++i)
    CHECK(std::fabs(ss[i] - fixtures::kFitSexSchool[i]) < 1.0);
  auto joint = model.marginal(Clique({0, 1, 2}));
  for (int i = 0; i < 12; ++i)
    CHECK(std::fabs(joint[i] - fixtures::kFitJoint[i]) < 1.0);
  for (int i = 0; i < 3; ++i)
    CHECK(std::fabs(lab[i] - fixtures::kFitLab[i]) < 1.0);
}

TEST_CASE("noiseless measurements are fit exactly") {
  Domain d = fixtures::survey_domain();
  Dataset data = fixtures::survey_dataset();
  MeasureOptions mopts;
  mopts.sigma = 50.0;
  mopts.zero_noise = true;
  RngStream rng(1);
  RdpLedger ledger;
  auto log = measure_marginals(data, d, {Clique({0, 1}), Clique({1, 2})}, {},
                               mopts, rng, ledger);
  SolverOptions opts;
  opts.iters = 4000;
  opts.loss_stop = 1e-10;
  SolverDiagnostics diag;
  GraphicalModel model = estimate(d, log, opts, &diag);
  CHECK(diag.final_loss < 1e-8);
  auto sl = model.marginal(Clique({0, 1}));
  auto ls = model.marginal(Clique({1, 2}));
  for (int i = 0; i < 6; ++i) {
    CHECK(sl[i] == doctest::Approx(fixtures::kTrueSexLab[i]).epsilon(1e-4));
    CHECK(ls[i] == doctest::Approx(fixtures::kTrueLabSchool[i]).epsilon(1e-4));
  }
}

TEST_CASE("one-way measurements produce an independence model") {
  std::mt19937_64 gen(808);
  Domain d = fixtures::random_domain(3, 4, gen);
  Dataset data = fixtures::random_dataset(d, 150, gen);
  MeasureOptions mopts;
  mopts.zero_noise = true;
  RngStream rng(2);
  RdpLedger ledger;
  auto log = measure_marginals(data, d, {Clique({0}), Clique({1}), Clique({2})},
                               {}, mopts, rng, ledger);
  SolverOptions opts;
  opts.loss_stop = 1e-12;
  GraphicalModel model = estimate(d, log, opts);
  auto m0 = model.marginal(Clique({0}));
  auto m1 = model.marginal(Clique({1}));
  auto pair = model.marginal(Clique({0, 1}));
  double total = model.total();
  for (std::size_t i = 0; i < m0.size(); ++i)
    for (std::size_t j = 0; j < m1.size(); ++j)
      CHECK(pair[i * m1.size() + j] ==
            doctest::Approx(m0[i] * m1[j] / total).epsilon(1e-6));
}

TEST_CASE("loss gradient matches central finite differences") {
  std::mt19937_64 gen(909);
  int cases = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::size_t cells = 2 + gen() % 10;
    Measurement m;
    m.clique = Clique({0});
    m.weight = 0.25 + std::generate_canonical<double, 53>(gen);
    m.sigma = 1.0;
    bool aggregate = rep % 2 == 1;
    std::normal_distribution<double> nd(0.0, 20.0);
    std::vector<double> mu(cells);
    for (auto& v : mu) v = 50.0 + nd(gen);
    if (!aggregate) {
      m.kind = TransformKind::identity;
      m.noisy_values.resize(cells);
      for (auto& v : m.noisy_values) v = m.weight * (50.0 + nd(gen));
    } else {
      m.kind = TransformKind::aggregate;
      std::size_t rows = 1 + gen() % cells;
      for (std::size_t r = 0; r < rows; ++r) {
        AggregateRow row;
        row.cell = gen() % cells;
        row.source_count = 1 + gen() % 4;
        m.rows.push_back(row);
        m.noisy_values.push_back(m.weight * (30.0 + nd(gen)) /
                                 std::sqrt(double(row.source_count)));
      }
    }
    std::vector<double> grad(cells, 0.0);
    add_measurement_gradient(m, mu, grad);
    for (std::size_t c = 0; c < cells; ++c) {
      double h = 1e-4 * (1.0 + std::fabs(mu[c]));
      double fd = oracle::fd_derivative(
          [&](double x) {
            auto probe = mu;
            probe[c] = x;
            return measurement_loss(m, probe);
          },
          mu[c], h);
      double scale = std::max({std::fabs(fd), std::fabs(grad[c]), 1.0});
      CHECK(std::fabs(grad[c] - fd) <= 1e-5 * scale);
      ++cases;
    }
  }
  CHECK(cases > 1000);
}

TEST_CASE("iterating longer never increases the loss") {
  auto loss_after = [&](int iters) {
    SolverOptions opts;
    opts.iters = iters;
    SolverDiagnostics diag;
    estimate(fixtures::survey_domain(), fixtures::survey_log(), opts, &diag);
    return diag.final_loss;
  };
  double l0 = loss_after(0);
  double l5 = loss_after(5);
  double l50 = loss_after(50);
  double l500 = loss_after(500);
  CHECK(l5 <= l0);
  CHECK(l50 <= l5);
  CHECK(l500 <= l50);
  CHECK(l500 < l0);  // it must actually make progress
}

TEST_CASE("total estimation is a precision-weighted mean of identity sums") {
  MeasurementLog log;
  Measurement a;
  a.clique = Clique({0});
  a.kind = TransformKind::identity;
  a.weight = 0.5;
  a.sigma = 2.0;
  a.noisy_values = {10.0, 15.0};  // sum 25, scaled total 50
  log.append(a);
  Measurement b;
  b.clique = Clique({1});
  b.kind = TransformKind::identity;
  b.weight = 1.0;
  b.sigma = 1.0;
  b.noisy_values = {30.0, 26.0, 4.0};  // total 60
  log.append(b);
  // Variances: n sigma^2 / w^2 -> a: 2*4/0.25=32, b: 3*1/1=3.
  double expect = (50.0 / 32.0 + 60.0 / 3.0) / (1.0 / 32.0 + 1.0 / 3.0);
  CHECK(estimate_total(log) == doctest::Approx(expect).epsilon(1e-12));

  // Negative estimates clamp to zero.
  MeasurementLog neg;
  Measurement c = a;
  c.noisy_values = {-40.0, 10.0};
  neg.append(c);
  CHECK(estimate_total(neg) == 0.0);

  // Aggregate-only logs fall back to one record.
  MeasurementLog aggonly;
  Measurement d = b;
  d.kind = TransformKind::aggregate;
  d.rows = {{0, 1}, {1, 1}, {2, 1}};
  aggonly.append(d);
  CHECK(estimate_total(aggonly) == 1.0);
}

TEST_CASE("model serialization roundtrips exactly") {
  std::mt19937_64 gen(1010);
  GraphicalModel model = random_tree_model(gen, 5, 64, 321.5);
  auto text = model.to_json_text();
  GraphicalModel back = GraphicalModel::from_json_text(text);
  CHECK(back.domain() == model.domain());
  CHECK(back.total() == model.total());
  REQUIRE(back.theta().size() == model.theta().size());
  for (std::size_t k = 0; k < back.theta().size(); ++k)
    CHECK(back.theta()[k] == model.theta()[k]);
  auto want = model.marginal(model.domain().all_attrs());
  auto got = back.marginal(back.domain().all_attrs());
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14));
  CHECK_THROWS_AS(GraphicalModel::from_json_text("]["), ParseError);
}

TEST_CASE("estimate validation") {
  MeasurementLog empty;
  CHECK_THROWS_AS(estimate(fixtures::survey_domain(), empty), EmptyLog);
  SolverOptions bad;
  bad.step = 0.0;
  CHECK_THROWS_AS(
      estimate(fixtures::survey_domain(), fixtures::survey_log(), bad),
      NonPositiveParameter);
  SolverOptions capped;
  capped.cell_cap = 4;
  CHECK_THROWS_AS(
      estimate(fixtures::survey_domain(), fixtures::survey_log(), capped),
      SolverError);
  GraphicalModel model(fixtures::survey_domain(),
                       build_junction_tree(fixtures::survey_domain(),
                                           {Clique({0, 1})}),
                       100.0);
  CHECK_THROWS_AS(model.marginal(Clique(std::vector<AttrId>{})),
                  TooFewAttributes);
  CHECK_THROWS_AS(model.marginal(Clique({0, 1, 2}), 5), CliqueTooLarge);
  CHECK_THROWS_AS(model.set_total(-1.0), NonPositiveParameter);
}
