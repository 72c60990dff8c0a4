#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "quarks/als.hpp"
#include "quarks/datagen.hpp"
#include "quarks/errors.hpp"
#include "quarks/kron.hpp"

using namespace quarks;
using testutil::dense_kron;
using testutil::random_grid_of;
using testutil::random_matrix;
using testutil::vec_of;

namespace {

QuarksModel make_model(Eigen::Index rows, Eigen::Index cols, int p, int r,
                       std::mt19937_64& rng, double scale) {
  QuarksModel m = QuarksModel::zero(rows, cols, p, r);
  for (int l = 0; l < p; ++l)
    for (int j = 0; j < r; ++j) {
      m.left[l][j] = scale * random_matrix(rows, rows, rng);
      m.right[l][j] = scale * random_matrix(cols, cols, rng);
    }
  return m;
}

SensorBatch driven_batch(const QuarksModel& model, Eigen::Index count,
                         double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::MatrixXd> init;
  for (int i = 0; i < model.order; ++i)
    init.push_back(random_matrix(model.frame_rows, model.frame_cols, rng));
  SimulationResult sim = simulate(model, init, count - model.order, noise, seed);
  REQUIRE(!sim.truncated);
  return sim.batch;
}

}  // namespace

TEST_SUITE_BEGIN("als");

TEST_CASE("predict_one") {
  std::mt19937_64 rng(3);
  SUBCASE("identity factors reproduce the last frame") {
    QuarksModel m = QuarksModel::zero(3, 3, 1, 1);
    m.left[0][0].setIdentity();
    m.right[0][0].setIdentity();
    Eigen::MatrixXd s = random_matrix(3, 3, rng);
    CHECK((m.predict_one({s}) - s).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("matches the lifted coefficient form") {
    QuarksModel m = make_model(3, 4, 2, 2, rng, 0.7);
    std::vector<Eigen::MatrixXd> history = {random_matrix(3, 4, rng),
                                            random_matrix(3, 4, rng)};
    Eigen::VectorXd lifted = Eigen::VectorXd::Zero(12);
    for (int i = 1; i <= 2; ++i)
      lifted += m.coefficient_dense(i) * vec_of(history[2 - i]);
    Eigen::MatrixXd pred = m.predict_one(history);
    CHECK((vec_of(pred) - lifted).norm() < 1e-10 * lifted.norm());
  }
  SUBCASE("zero factors predict zero") {
    QuarksModel m = QuarksModel::zero(3, 3, 2, 1);
    CHECK(m.predict_one({random_matrix(3, 3, rng), random_matrix(3, 3, rng)})
              .isZero(0.0));
  }
  SUBCASE("wrong history length rejected") {
    QuarksModel m = QuarksModel::zero(3, 3, 2, 1);
    CHECK_THROWS_AS(m.predict_one({random_matrix(3, 3, rng)}), ConfigError);
  }
}

TEST_CASE("model_cost") {
  std::mt19937_64 rng(5);
  SUBCASE("the generating model has zero cost on noiseless data") {
    QuarksModel m = make_model(4, 4, 1, 1, rng, 0.3);
    SensorBatch b = driven_batch(m, 50, 0.0, 1);
    double scale = b.lifted_all().squaredNorm();
    CHECK(model_cost(m, b) <= 1e-18 * scale);
  }
  SUBCASE("the zero model pays the full signal energy") {
    QuarksModel m = QuarksModel::zero(4, 4, 1, 1);
    SensorBatch b = driven_batch(make_model(4, 4, 1, 1, rng, 0.3), 30, 0.1, 2);
    double expected = 0.0;
    for (Eigen::Index k = 1; k < b.size(); ++k)
      expected += b.frame(k).squaredNorm();
    CHECK(model_cost(m, b) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("agrees with a brute-force dense evaluation") {
    QuarksModel m = make_model(3, 3, 2, 2, rng, 0.4);
    SensorBatch b = driven_batch(make_model(3, 3, 2, 2, rng, 0.3), 20, 0.2, 3);
    RegularizationConfig reg;
    reg.temporal_weight = 0.7;
    reg.xi = 0.6;
    reg.eta = -0.2;
    reg.spatial_weight = 0.4;
    reg.zeta = 0.2;

    double data = 0.0;
    for (Eigen::Index k = 2; k < b.size(); ++k) {
      Eigen::VectorXd pred = Eigen::VectorXd::Zero(9);
      for (int i = 1; i <= 2; ++i)
        pred += m.coefficient_dense(i) * b.lifted(k - i);
      data += (b.lifted(k) - pred).squaredNorm();
    }
    double expected =
        data +
        testutil::temporal_oracle(m.left, m.right,
                                  {2, reg.xi, reg.eta, reg.temporal_weight}) +
        testutil::spatial_oracle(m.left, m.right, reg.zeta, reg.spatial_weight);
    CHECK(model_cost(m, b, reg) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("build_data_blocks layouts") {
  SUBCASE("hand-built 2x2, one lag, three samples") {
    Eigen::MatrixXd s0(2, 2), s1(2, 2), s2(2, 2);
    s0 << 1, 2, 3, 4;
    s1 << 5, 6, 7, 8;
    s2 << 9, 10, 11, 12;
    SensorBatch b({s0, s1, s2});
    DataBlocks d = build_data_blocks(b, 1);

    // targets: block row per sensor row, time within, sensor column across
    REQUIRE(d.stacked_targets.rows() == 4);
    REQUIRE(d.stacked_targets.cols() == 2);
    CHECK(d.stacked_targets(0, 0) == 5);   // row 1 of s1
    CHECK(d.stacked_targets(0, 1) == 6);
    CHECK(d.stacked_targets(1, 0) == 9);   // row 1 of s2
    CHECK(d.stacked_targets(2, 0) == 7);   // row 2 of s1
    CHECK(d.stacked_targets(3, 1) == 12);  // row 2 of s2

    // regressors: one row per time sample, frames flattened row-major
    REQUIRE(d.lag_regressors.size() == 1);
    const Eigen::MatrixXd& u = d.lag_regressors[0];
    REQUIRE(u.rows() == 2);
    REQUIRE(u.cols() == 4);
    CHECK(u(0, 0) == 1);
    CHECK(u(0, 1) == 2);
    CHECK(u(0, 2) == 3);
    CHECK(u(0, 3) == 4);
    CHECK(u(1, 0) == 5);
  }
  SUBCASE("constant frames have unit excitation rank") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(3, 3, 2.5);
    SensorBatch b(std::vector<Eigen::MatrixXd>(10, c));
    auto ranks = excitation_ranks(b, 1);
    CHECK(ranks[0] == 1);
  }
  SUBCASE("white noise excites the full column space") {
    std::mt19937_64 rng(7);
    std::vector<Eigen::MatrixXd> frames;
    for (int k = 0; k < 60; ++k) frames.push_back(random_matrix(3, 3, rng));
    auto ranks = excitation_ranks(SensorBatch(frames), 2);
    CHECK(ranks[0] == 9);
    CHECK(ranks[1] == 9);
  }
}

TEST_CASE("als_fit recovers a noiseless structured model from white inputs") {
  const Eigen::Index n = 6;
  QuarksModel truth = random_quarks_model(n, 2, 1, 42);
  SensorBatch inputs = white_noise_batch(n, n, 100 * 2 * n, 4);
  SensorBatch outputs = lagged_response(truth, inputs, 0.0, 0);

  AlsOptions opt;
  opt.seed = 1;
  AlsFit fit = als_fit(outputs, inputs, 2, 1, opt);

  double signal = 0.0;
  for (Eigen::Index k = 2; k < outputs.size(); ++k)
    signal += outputs.frame(k).squaredNorm();
  double resid = std::sqrt(fit.report.cost_trace.back() / signal);
  CHECK(resid < 1e-8);
  CHECK(fit.report.iterations <= 20);

  for (int i = 1; i <= 2; ++i) {
    Eigen::MatrixXd a_true = truth.coefficient_dense(i);
    Eigen::MatrixXd a_fit = fit.model.coefficient_dense(i);
    CHECK((a_fit - a_true).norm() < 1e-6 * a_true.norm());
  }
}

TEST_CASE("output-only fit tracks a noise-driven recursion") {
  // the process noise both drives and limits the fit: the minimized
  // cost must land at the innovation energy, not above it
  const Eigen::Index n = 5;
  QuarksModel truth = random_quarks_model(n, 1, 1, 43);
  SensorBatch data = driven_batch(truth, 3000, 0.5, 44);
  AlsFit fit = als_fit(data, 1, 1, {});
  double innovation = 0.5 * 0.5 * double((data.size() - 1) * n * n);
  CHECK(fit.report.cost_trace.back() < 1.1 * innovation);
  Eigen::MatrixXd a_true = truth.coefficient_dense(1);
  CHECK((fit.model.coefficient_dense(1) - a_true).norm() <
        0.15 * a_true.norm());
}

TEST_CASE("als_fit cost trace equals the regularized model cost") {
  std::mt19937_64 rng(13);
  QuarksModel gen = make_model(4, 4, 2, 1, rng, 0.25);
  SensorBatch data = driven_batch(gen, 80, 0.05, 5);
  RegularizationConfig reg;
  reg.temporal_weight = 0.5;
  reg.xi = 0.7;
  reg.eta = 0.2;
  reg.spatial_weight = 0.3;
  reg.zeta = 0.15;

  AlsOptions opt;
  opt.max_iterations = 3;
  opt.patience = 100;  // run the full budget
  AlsFit fit = als_fit(data, 2, 1, opt, reg);
  REQUIRE(fit.report.cost_trace.size() == 3);
  double reported = fit.report.cost_trace.back();
  CHECK(model_cost(fit.model, data, reg) ==
        doctest::Approx(reported).epsilon(1e-9));
}

TEST_CASE("als_fit on frames with distinct row and column dimensions") {
  std::mt19937_64 rng(17);
  QuarksModel truth = make_model(3, 6, 1, 1, rng, 0.2);
  SensorBatch inputs = white_noise_batch(3, 6, 400, 6);
  SensorBatch outputs = lagged_response(truth, inputs, 0.0, 0);
  AlsFit fit = als_fit(outputs, inputs, 1, 1, {});
  Eigen::MatrixXd a_true = truth.coefficient_dense(1);
  Eigen::MatrixXd a_fit = fit.model.coefficient_dense(1);
  CHECK((a_fit - a_true).norm() < 1e-7 * a_true.norm());
}

TEST_CASE("normalized fit with sign fixing recovers the factors themselves") {
  const Eigen::Index n = 5;
  QuarksModel truth = random_quarks_model(n, 1, 1, 77);
  // keep the sign anchor well away from zero
  REQUIRE(std::abs(truth.right[0][0](0, 0)) > 1e-3);
  SensorBatch inputs = white_noise_batch(n, n, 6000, 7);
  SensorBatch data = lagged_response(truth, inputs, 1e-3, 8);

  AlsOptions opt;
  opt.seed = 3;
  opt.max_iterations = 200;
  opt.column_norm_targets = truth.right[0][0].colwise().norm().transpose();
  AlsFit fit = als_fit(data, inputs, 1, 1, opt);

  double sign = truth.right[0][0](0, 0) > 0 ? 1.0 : -1.0;
  Eigen::MatrixXd b_ref = sign * truth.right[0][0];
  Eigen::MatrixXd a_ref = sign * truth.left[0][0];
  CHECK((fit.model.right[0][0] - b_ref).norm() < 1e-2 * b_ref.norm());
  CHECK((fit.model.left[0][0] - a_ref).norm() < 1e-2 * a_ref.norm());
}

TEST_CASE("sign rule is idempotent and anchors are nonnegative after fitting") {
  QuarksModel truth = random_quarks_model(4, 2, 2, 5);
  SensorBatch data = driven_batch(truth, 500, 0.05, 8);
  AlsFit fit = als_fit(data, 2, 2, {});
  for (int l = 0; l < 2; ++l) {
    CHECK(fit.model.right[l][0](0, 0) >= 0.0);
    // applying the rule again changes nothing
    double s = fit.model.right[l][0](0, 0) < 0.0 ? -1.0 : 1.0;
    CHECK(s == 1.0);
  }
}

TEST_CASE("monotone cost descent without normalization") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    QuarksModel truth = random_quarks_model(4, 2, 2, 100 + seed);
    SensorBatch data = driven_batch(truth, 300, 0.3, 200 + seed);
    AlsOptions opt;
    opt.seed = seed;
    opt.max_iterations = 30;
    AlsFit fit = als_fit(data, 2, 2, opt);
    CHECK(fit.report.cost_monotone);
    for (std::size_t i = 1; i < fit.report.cost_trace.size(); ++i)
      CHECK(fit.report.cost_trace[i] <=
            fit.report.cost_trace[i - 1] * (1.0 + 1e-12) + 1e-12);
  }
}

TEST_CASE("factor transformations that cancel leave predictions unchanged") {
  std::mt19937_64 rng(23);
  QuarksModel m = make_model(4, 4, 1, 2, rng, 0.5);
  Eigen::MatrixXd t(2, 2);
  t << 1.3, -0.4, 0.2, 0.9;  // invertible
  Eigen::MatrixXd tinv = t.inverse();

  QuarksModel m2 = m;
  for (int k = 0; k < 2; ++k) {
    m2.left[0][k] = t(0, k) * m.left[0][0] + t(1, k) * m.left[0][1];
    m2.right[0][k] = tinv(k, 0) * m.right[0][0] + tinv(k, 1) * m.right[0][1];
  }
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd s = random_matrix(4, 4, rng);
    Eigen::MatrixXd p1 = m.predict_one({s});
    Eigen::MatrixXd p2 = m2.predict_one({s});
    CHECK((p1 - p2).norm() < 1e-10 * p1.norm());
  }
}

TEST_CASE("the regressor rank check reports the failing block") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Constant(3, 3, 1.0);
  SensorBatch constant_batch(std::vector<Eigen::MatrixXd>(40, c));
  CHECK_THROWS_WITH_AS(als_fit(constant_batch, 1, 1, {}),
                       doctest::Contains("rank deficient"), NumericalError);
}

TEST_CASE("a rank-deficient explicit initializer settles on the lower-rank fit") {
  const Eigen::Index n = 4;
  QuarksModel truth = random_quarks_model(n, 1, 1, 9);  // true rank 1
  SensorBatch data = driven_batch(truth, 600, 0.1, 10);

  // rank-2 fit whose two initial blocks coincide: spans only a rank-1 start
  std::mt19937_64 rng(31);
  Eigen::MatrixXd seed_block = random_matrix(n, n, rng);
  AlsOptions degenerate;
  degenerate.initial_left = {{seed_block, seed_block}};
  degenerate.max_iterations = 25;
  degenerate.patience = 1000;  // run the full budget in both fits
  AlsFit deg = als_fit(data, 1, 2, degenerate);
  CHECK(deg.report.rank_deficient_fallback);

  // the same start given rank 1 explicitly walks the identical trajectory
  AlsOptions explicit1;
  explicit1.initial_left = {{seed_block}};
  explicit1.max_iterations = 25;
  explicit1.patience = 1000;
  AlsFit rank1 = als_fit(data, 1, 1, explicit1);
  REQUIRE(deg.report.cost_trace.size() == rank1.report.cost_trace.size());
  for (std::size_t i = 0; i < rank1.report.cost_trace.size(); ++i)
    CHECK(deg.report.cost_trace[i] ==
          doctest::Approx(rank1.report.cost_trace[i]).epsilon(1e-9));
}

TEST_CASE("theorem-style uniqueness margin: regressor stays full rank") {
  QuarksModel truth = random_quarks_model(5, 1, 1, 15);
  SensorBatch data = driven_batch(truth, 800, 0.1, 11);
  AlsFit fit = als_fit(data, 1, 1, {});
  CHECK(fit.report.min_singular_value > 1e-6);
}

TEST_CASE("gram fast path agrees with the orthogonal path") {
  QuarksModel truth = random_quarks_model(4, 2, 1, 21);
  SensorBatch data = driven_batch(truth, 300, 0.1, 12);
  RegularizationConfig reg;
  reg.temporal_weight = 0.2;
  reg.spatial_weight = 0.1;

  AlsOptions qr_opt;
  qr_opt.seed = 5;
  qr_opt.max_iterations = 10;
  AlsOptions gram_opt = qr_opt;
  gram_opt.fast_gram = true;

  AlsFit via_qr = als_fit(data, 2, 1, qr_opt, reg);
  AlsFit via_gram = als_fit(data, 2, 1, gram_opt, reg);
  for (int l = 0; l < 2; ++l) {
    CHECK((via_qr.model.left[l][0] - via_gram.model.left[l][0]).norm() <
          1e-8 * via_qr.model.left[l][0].norm());
    CHECK((via_qr.model.right[l][0] - via_gram.model.right[l][0]).norm() <
          1e-8 * via_qr.model.right[l][0].norm());
  }
}

TEST_CASE("per-column solves are schedule independent") {
  QuarksModel truth = random_quarks_model(4, 1, 1, 33);
  SensorBatch data = driven_batch(truth, 200, 0.1, 13);
  AlsOptions serial;
  serial.threads = 1;
  serial.max_iterations = 5;
  AlsOptions parallel = serial;
  parallel.threads = 4;
  AlsFit a = als_fit(data, 1, 1, serial);
  AlsFit b = als_fit(data, 1, 1, parallel);
  CHECK((a.model.left[0][0] - b.model.left[0][0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.model.right[0][0] - b.model.right[0][0]).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("simulate") {
  std::mt19937_64 rng(41);
  SUBCASE("zero model with zero noise stays at zero") {
    QuarksModel m = QuarksModel::zero(3, 3, 1, 1);
    SimulationResult r = simulate(m, {random_matrix(3, 3, rng)}, 10, 0.0, 1);
    CHECK(r.batch.size() == 11);
    for (Eigen::Index k = 1; k < r.batch.size(); ++k)
      CHECK(r.batch.frame(k).isZero(0.0));
  }
  SUBCASE("half-identity factors decay by a quarter per step") {
    QuarksModel m = QuarksModel::zero(3, 3, 1, 1);
    m.left[0][0] = 0.5 * Eigen::MatrixXd::Identity(3, 3);
    m.right[0][0] = 0.5 * Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd s0 = random_matrix(3, 3, rng);
    SimulationResult r = simulate(m, {s0}, 5, 0.0, 2);
    for (Eigen::Index k = 1; k <= 5; ++k)
      CHECK(r.batch.frame(k).norm() ==
            doctest::Approx(std::pow(0.25, double(k)) * s0.norm())
                .epsilon(1e-12));
  }
  SUBCASE("unstable models truncate with a diagnostic flag") {
    QuarksModel m = QuarksModel::zero(3, 3, 1, 1);
    m.left[0][0] = 1e200 * Eigen::MatrixXd::Identity(3, 3);
    m.right[0][0] = 1e200 * Eigen::MatrixXd::Identity(3, 3);
    SimulationResult r =
        simulate(m, {Eigen::MatrixXd::Constant(3, 3, 1e3)}, 10, 0.0, 3);
    CHECK(r.truncated);
    CHECK(r.steps_completed < 10);
  }
}

TEST_SUITE_END();
