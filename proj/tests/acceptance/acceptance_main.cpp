// Acceptance suite: end-to-end checks of the identification toolkit at the
// tolerances the library commits to. Run with no arguments for all criteria
// or with a list of criterion numbers. One line per criterion; the exit code
// is the number of failures.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "../unit/helpers.hpp"
#include "quarks/als.hpp"
#include "quarks/baselines.hpp"
#include "quarks/datagen.hpp"
#include "quarks/errors.hpp"
#include "quarks/kron.hpp"
#include "quarks/metrics.hpp"
#include "quarks/missing_data.hpp"
#include "quarks/regularizers.hpp"

using namespace quarks;
using testutil::dense_kron;
using testutil::random_grid_of;
using testutil::random_matrix;
using testutil::vec_of;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Check {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

SensorBatch driven(const QuarksModel& model, Eigen::Index count, double noise,
                   std::uint64_t seed, Eigen::Index burn = 200) {
  std::vector<Eigen::MatrixXd> init(
      model.order,
      Eigen::MatrixXd::Zero(model.frame_rows, model.frame_cols));
  SimulationResult sim =
      simulate(model, init, count + burn + model.order, noise, seed);
  if (sim.truncated) throw NumericalError("acceptance: simulation diverged");
  return sim.batch.slice(burn + model.order, count);
}

// ---------------------------------------------------------------- criterion 1
Outcome c1_reshuffle_algebra() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Index m1 = 1 + Eigen::Index(rng() % 8);
    Eigen::Index n1 = 1 + Eigen::Index(rng() % 8);
    Eigen::Index m2 = 1 + Eigen::Index(rng() % 8);
    Eigen::Index n2 = 1 + Eigen::Index(rng() % 8);
    BlockPartition part(m1, n1, m2, n2);

    Eigen::MatrixXd f = random_matrix(m1, n1, rng);
    Eigen::MatrixXd g = random_matrix(m2, n2, rng);
    Eigen::MatrixXd lhs = reshuffle(dense_kron(f, g), part);
    Eigen::MatrixXd rhs = vec_of(f) * vec_of(g).transpose();
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());

    Eigen::MatrixXd x = random_matrix(part.rows(), part.cols(), rng);
    if ((inverse_reshuffle(reshuffle(x, part), part) - x).cwiseAbs().maxCoeff() !=
        0.0)
      return {false, "round trip not exact"};
  }
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  bool pass = worst < 1e-13 && secs < 1.0;
  return {pass, fmt("rank-one identity max err %.2e, %.3f s", worst, secs)};
}

// ---------------------------------------------------------------- criterion 2
Outcome c2_rank_laws() {
  std::mt19937_64 rng(202);
  const Eigen::Index n = 5;
  BlockPartition part(n, n, n, n);
  auto random_sum = [&](int terms) {
    std::vector<KronSum::Term> ts;
    for (int j = 0; j < terms; ++j)
      ts.push_back({random_matrix(n, n, rng), random_matrix(n, n, rng)});
    return KronSum(ts, part);
  };

  for (int trial = 0; trial < 50; ++trial) {
    KronSum a = random_sum(2), b = random_sum(3);
    if (kron_rank(a.dense() + b.dense(), part) > 5)
      return {false, "sum rank law violated"};
    if (kron_rank(a.dense() * b.dense(), part) > 6)
      return {false, "product rank law violated"};
    Eigen::MatrixXd apow = a.dense();
    for (int e = 2; e <= 3; ++e) {
      apow = apow * a.dense();
      if (kron_rank(apow, part) > Eigen::Index(std::pow(2.0, e)))
        return {false, fmt("power rank law violated at exponent %d", e)};
    }
  }

  for (int trial = 0; trial < 50; ++trial) {
    // blocks depend on |i-j| only; symmetry of the whole matrix then needs
    // symmetric blocks
    std::vector<Eigen::MatrixXd> blocks;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::MatrixXd blk = random_matrix(n, n, rng);
      blocks.push_back(0.5 * (blk + blk.transpose()));
    }
    Eigen::MatrixXd x(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        x.block(i * n, j * n, n, n) = blocks[std::abs(i - j)];
    if (kron_rank(x, part) > n)
      return {false, "symmetric block-Toeplitz rank bound violated"};
  }

  // the counterexample pair: structured rank one, no Toeplitz structure
  Eigen::MatrixXd xm(2, 2), ym(2, 2);
  xm << 0, 1, 2, 3;
  ym << 4, 5, 6, 7;
  Eigen::MatrixXd m = dense_kron(xm, ym);
  BlockPartition p2(2, 2, 2, 2);
  bool rank1 = kron_rank(m, p2) == 1;
  bool block_toeplitz =
      (m.block(0, 0, 2, 2) - m.block(2, 2, 2, 2)).cwiseAbs().maxCoeff() < 1e-15;
  // the (1,2) block is 1*[4 5;6 7], whose diagonal is not constant
  bool toeplitz_blocks = std::abs(m(0, 2) - m(1, 3)) < 1e-15;
  if (!(rank1 && !block_toeplitz && !toeplitz_blocks))
    return {false, "counterexample structure check failed"};
  return {true, "sum/product/power laws, Toeplitz bound, counterexample ok"};
}

// ---------------------------------------------------------------- criterion 3
Outcome c3_fast_ops() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Index m1 = 2 + Eigen::Index(rng() % 4);
    Eigen::Index m2 = 2 + Eigen::Index(rng() % 4);
    BlockPartition part(m1, m1, m2, m2);
    int terms = 1 + int(rng() % 3);
    std::vector<KronSum::Term> ta, tb;
    for (int j = 0; j < terms; ++j) {
      ta.push_back({random_matrix(m1, m1, rng), random_matrix(m2, m2, rng)});
      tb.push_back({random_matrix(m1, m1, rng), random_matrix(m2, m2, rng)});
    }
    KronSum a(ta, part), b(tb, part);

    Eigen::VectorXd x = random_matrix(part.cols(), 1, rng);
    Eigen::VectorXd mv_ref = a.dense() * x;
    worst = std::max(worst, (kron_matvec(a, x) - mv_ref).norm() / mv_ref.norm());

    Eigen::MatrixXd mm_ref = a.dense() * b.dense();
    worst = std::max(
        worst, (kron_matmat(a, b).dense() - mm_ref).norm() / mm_ref.norm());

    Eigen::MatrixXd u =
        random_matrix(m1, m1, rng) + 3.0 * Eigen::MatrixXd::Identity(m1, m1);
    Eigen::MatrixXd v =
        random_matrix(m2, m2, rng) + 3.0 * Eigen::MatrixXd::Identity(m2, m2);
    KronSum single(u, v);
    Eigen::MatrixXd inv_ref = single.dense().inverse();
    worst = std::max(worst, (kron_inverse_rank1(single).dense() - inv_ref).norm() /
                                inv_ref.norm());
  }
  return {worst < 1e-10, fmt("max relative error %.2e", worst)};
}

// ---------------------------------------------------------------- criterion 4
Outcome c4_noiseless_recovery() {
  auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index n = 10;
  const int p = 2, r = 1;
  QuarksModel truth = random_quarks_model(n, p, r, 404);
  SensorBatch data = driven(truth, 100 * p * r * n, 0.0, 405);

  AlsOptions opt;
  opt.max_iterations = 20;
  opt.seed = 2;
  AlsFit fit = als_fit(data, p, r, opt);

  double signal = 0.0;
  for (Eigen::Index k = p; k < data.size(); ++k)
    signal += data.frame(k).squaredNorm();
  double resid = std::sqrt(fit.report.cost_trace.back() / signal);

  double worst_a = 0.0;
  for (int i = 1; i <= p; ++i) {
    Eigen::MatrixXd at = truth.coefficient_dense(i);
    worst_a = std::max(
        worst_a, (fit.model.coefficient_dense(i) - at).norm() / at.norm());
  }
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  bool pass = resid < 1e-8 && fit.report.iterations <= 20 && worst_a < 1e-6 &&
              secs < 30.0;
  return {pass, fmt("residual %.2e, coeff err %.2e, %d iters, %.2f s", resid,
                    worst_a, fit.report.iterations, secs)};
}

// ---------------------------------------------------------------- criterion 5
Outcome c5_fixed_point() {
  auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index n = 8;
  QuarksModel truth = random_quarks_model(n, 1, 1, 505);
  if (std::abs(truth.right[0][0](0, 0)) < 1e-3)
    truth = random_quarks_model(n, 1, 1, 506);

  SensorBatch clean = driven(truth, 10000, 1.0, 507);
  // measurement noise 45 dB below the signal
  double power = clean.lifted_all().squaredNorm() / double(clean.size() * n * n);
  double noise_std = std::sqrt(power * std::pow(10.0, -4.5));
  std::mt19937_64 rng(508);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SensorBatch observed = clean;
  double noise_power = 0.0;
  for (Eigen::Index k = 0; k < observed.size(); ++k)
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index rr = 0; rr < n; ++rr) {
        double v = noise_std * gauss(rng);
        observed.frame(k)(rr, c) += v;
        noise_power += v * v;
      }
  double snr_db = 10.0 * std::log10(clean.lifted_all().squaredNorm() /
                                    noise_power);

  AlsOptions opt;
  opt.seed = 9;
  opt.max_iterations = 300;
  Eigen::VectorXd targets = truth.right[0][0].colwise().norm().transpose();
  opt.column_norm_targets = targets;
  AlsFit fit = als_fit(observed, 1, 1, opt);

  double sign = truth.right[0][0](0, 0) > 0 ? 1.0 : -1.0;
  double err_b = (fit.model.right[0][0] - sign * truth.right[0][0]).norm() /
                 truth.right[0][0].norm();
  double err_a = (fit.model.left[0][0] - sign * truth.left[0][0]).norm() /
                 truth.left[0][0].norm();
  bool converged = fit.report.termination == Termination::converged;
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  bool pass = snr_db >= 40.0 && err_b < 1e-2 && err_a < 1e-2 && converged &&
              secs < 60.0;
  return {pass, fmt("SNR %.1f dB, factor err (a,b)=(%.2e,%.2e), %s, %.1f s",
                    snr_db, err_a, err_b,
                    converged ? "converged" : "max-iters", secs)};
}

// ---------------------------------------------------------------- criterion 6
Outcome c6_monotone_descent() {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    QuarksModel truth = random_quarks_model(6, 2, 2, 600 + seed);
    SensorBatch data = driven(truth, 500, 0.3, 700 + seed);
    AlsOptions opt;
    opt.seed = seed;
    opt.max_iterations = 40;
    AlsFit fit = als_fit(data, 2, 2, opt);
    const auto& trace = fit.report.cost_trace;
    for (std::size_t i = 1; i < trace.size(); ++i)
      if (trace[i] > trace[i - 1] + 1e-12 * std::max(1.0, trace[i - 1]))
        return {false, fmt("cost increased at seed %llu step %zu",
                           (unsigned long long)seed, i)};
  }
  return {true, "20 seeded runs nonincreasing"};
}

// ---------------------------------------------------------------- criterion 7
Outcome c7_prediction_parity() {
  auto t0 = std::chrono::steady_clock::now();
  double worst_gap = 0.0, mean_q = 0.0, mean_d = 0.0;
  const int realizations = 10;
  for (int i = 0; i < realizations; ++i) {
    TurbulenceConfig cfg;  // Table-style defaults
    cfg.seed = 7000 + 10 * i;
    AoData train = generate_ao_batch(cfg, 5000);
    cfg.seed = 7000 + 10 * i + 5;
    AoData val = generate_ao_batch(cfg, 5000);

    AlsOptions opt;
    opt.seed = i;
    opt.max_iterations = 25;  // the short iteration budget is enough here
    AlsFit qfit = als_fit(train.noisy, 2, 2, opt);
    auto [qa, qp] = one_step_predictions(qfit.model, val.noisy);
    double vaf_q = vaf(qa, qp);

    DenseVarModel dfit = fit_dense_var(train.noisy, 2);
    auto [da, dp] = one_step_predictions(dfit, val.noisy);
    double vaf_d = vaf(da, dp);

    worst_gap = std::max(worst_gap, std::abs(vaf_q - vaf_d));
    mean_q += vaf_q / realizations;
    mean_d += vaf_d / realizations;
  }
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  bool pass = worst_gap <= 5.0 && secs < 300.0;
  return {pass, fmt("mean VAF quarks %.2f%% dense %.2f%%, worst gap %.2f pts, "
                    "%.0f s",
                    mean_q, mean_d, worst_gap, secs)};
}

// ---------------------------------------------------------------- criterion 8
Outcome c8_regularization_benefit() {
  const int p = 4, r = 2;
  const Eigen::Index nt = 500;

  auto make_data = [&](std::uint64_t seed, Eigen::Index count) {
    TurbulenceConfig cfg;
    cfg.snr_db = 10.0;
    cfg.seed = seed;
    return generate_ao_batch(cfg, count);
  };

  AlsOptions opt;
  opt.max_iterations = 60;
  opt.seed = 1;

  auto fit_vaf = [&](const SensorBatch& train, const SensorBatch& val,
                     const RegularizationConfig& reg) {
    AlsFit fit = als_fit(train, p, r, opt, reg);
    auto [a, pr] = one_step_predictions(fit.model, val);
    return vaf(a, pr);
  };

  // hyperparameter search on one tuning realization
  AoData tune_train = make_data(8000, nt);
  AoData tune_val = make_data(8005, 1000);
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  RegularizationConfig best;
  double best_vaf = -1.0;
  for (int draw = 0; draw < 20; ++draw) {
    RegularizationConfig reg;
    for (int tries = 0; tries < 50; ++tries) {
      reg.temporal_weight = 5.0 * u01(rng);
      reg.spatial_weight = 5.0 * u01(rng);
      reg.xi = 0.05 + 0.90 * u01(rng);
      reg.eta = -0.95 + 1.90 * u01(rng);
      reg.zeta = 0.01 + 0.99 * u01(rng);
      try {
        dc_kernel({p, reg.xi, reg.eta, 1.0});
        break;
      } catch (const NumericalError&) {
      }
    }
    double v = fit_vaf(tune_train.noisy, tune_val.noisy, reg);
    if (v > best_vaf) {
      best_vaf = v;
      best = reg;
    }
  }

  std::vector<double> vaf_reg, vaf_plain;
  for (int i = 0; i < 10; ++i) {
    AoData train = make_data(8100 + 10 * i, nt);
    AoData val = make_data(8100 + 10 * i + 5, 1000);
    vaf_plain.push_back(fit_vaf(train.noisy, val.noisy, {}));
    vaf_reg.push_back(fit_vaf(train.noisy, val.noisy, best));
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[4] + v[5]);
  };
  auto spread = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x / v.size();
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1));
  };
  double med_r = median(vaf_reg), med_p = median(vaf_plain);
  double sp_r = spread(vaf_reg), sp_p = spread(vaf_plain);
  bool pass = med_r >= med_p && sp_r < sp_p;
  return {pass,
          fmt("median VAF reg %.2f%% vs plain %.2f%%, spread %.2f vs %.2f "
              "(lambda=%.2f mu=%.2f xi=%.2f eta=%.2f zeta=%.2f)",
              med_r, med_p, sp_r, sp_p, best.spatial_weight,
              best.temporal_weight, best.xi, best.eta, best.zeta)};
}

// ---------------------------------------------------------------- criterion 9
Outcome c9_scaling_slopes() {
  auto t0 = std::chrono::steady_clock::now();
  ScalingOptions opt;
  opt.repetitions = 3;
  opt.order = 4;
  opt.rank = 2;
  opt.threads = 1;
  opt.max_iterations = 10;

  opt.sizes = {6, 8, 10, 12, 14, 16, 18, 20};
  ScalingResult quarks_res = scaling_bench({"quarks"}, opt);
  double quarks_slope = quarks_res.slopes.at("quarks").slope;

  opt.sizes = {6, 8, 10, 12, 14, 16};
  ScalingResult dense_res = scaling_bench({"dense"}, opt);
  double dense_slope = dense_res.slopes.at("dense").slope;

  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  bool pass = quarks_slope <= 3.8 && dense_slope >= 4.0 && secs < 1200.0;
  return {pass, fmt("structured slope %.2f (<=3.8), dense slope %.2f (>=4.0), "
                    "%.0f s",
                    quarks_slope, dense_slope, secs)};
}

// --------------------------------------------------------------- criterion 10
Outcome c10_missing_data() {
  const int p = 2, r = 1;
  TurbulenceConfig cfg;
  cfg.lenslets = 6;
  cfg.seed = 1001;
  AoData train = generate_ao_batch(cfg, 600);
  cfg.seed = 1006;
  AoData val = generate_ao_batch(cfg, 1000);
  const Eigen::Index channels = train.noisy.channels();

  AlsOptions opt;
  opt.seed = 4;
  opt.max_iterations = 30;

  auto holed = [&](const MissingMask& mask) {
    SensorBatch out = train.noisy;
    for (Eigen::Index k = 0; k < out.size(); ++k)
      for (Eigen::Index c : mask.missing())
        out.frame(k)(c % out.frame_rows(), c / out.frame_rows()) = 0.0;
    return out;
  };
  auto fit_vaf = [&](const MissingMask& mask, double beta) {
    RegularizationConfig reg;
    reg.ridge = beta;
    try {
      MissingFit fit = fit_with_missing(holed(mask), mask, p, r, opt, reg);
      auto [a, pr] = one_step_predictions(fit.model, val.noisy);
      return vaf(a, pr);
    } catch (const NumericalError&) {
      return 0.0;  // unusable fit counts as zero skill
    }
  };
  auto draw_mask = [&](double ratio, std::uint64_t seed) {
    std::mt19937_64 mask_rng(seed);
    std::vector<Eigen::Index> all(channels);
    for (Eigen::Index i = 0; i < channels; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), mask_rng);
    all.resize(Eigen::Index(std::round(ratio * channels)));
    return MissingMask(channels, all);
  };

  const std::vector<double> betas = {0.0, 0.01, 0.1, 1.0, 10.0, 100.0};
  int improved = 0;
  for (int dr = 0; dr < 10; ++dr) {
    MissingMask mask = draw_mask(0.10, 2000 + dr);
    double vaf0 = fit_vaf(mask, 0.0);
    double best = vaf0;
    for (std::size_t b = 1; b < betas.size(); ++b)
      best = std::max(best, fit_vaf(mask, betas[b]));
    if (best > vaf0) ++improved;
  }

  MissingMask half = draw_mask(0.50, 3000);
  double collapse = fit_vaf(half, 0.0);

  // the untouched path reduces to the plain fit bit for bit
  AlsFit plain = als_fit(train.noisy, p, r, opt);
  MissingFit joint =
      fit_with_missing(train.noisy, MissingMask(channels, {}), p, r, opt);
  bool bitwise = true;
  for (int l = 0; l < p && bitwise; ++l)
    for (int j = 0; j < r && bitwise; ++j)
      bitwise = (plain.model.left[l][j] - joint.model.left[l][j])
                        .cwiseAbs()
                        .maxCoeff() == 0.0 &&
                (plain.model.right[l][j] - joint.model.right[l][j])
                        .cwiseAbs()
                        .maxCoeff() == 0.0;

  bool pass = improved >= 9 && collapse < 10.0 && bitwise;
  return {pass, fmt("ridge improved %d/10 draws, VAF at half missing %.2f%%, "
                    "empty-mask path %s",
                    improved, collapse, bitwise ? "bitwise equal" : "DIFFERS")};
}

// --------------------------------------------------------------- criterion 11
Outcome c11_regularizer_identities() {
  std::mt19937_64 rng(1100);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    int p = 1 + int(rng() % 4), r = 1 + int(rng() % 2);
    Eigen::Index n = 3 + Eigen::Index(rng() % 4);
    auto left = random_grid_of(n, p, r, rng);
    auto right = random_grid_of(n, p, r, rng);

    TemporalKernelConfig tk{p, 0.85, 0.4, 1.2};
    double lib_t = temporal_penalty_value(left, right, tk);
    double ora_t = testutil::temporal_oracle(left, right, tk);
    worst = std::max(worst, std::abs(lib_t - ora_t) / std::max(1.0, ora_t));

    // the per-column stacked rows must realize the same value
    TemporalPenalty pen(left, tk);
    Eigen::MatrixXd rows = pen.stacked_rows(n);
    double via_rows = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
      Eigen::VectorXd x(Eigen::Index(p) * r * n);
      for (int l = 0; l < p; ++l)
        for (int j = 0; j < r; ++j)
          x.segment((Eigen::Index(l) * r + j) * n, n) = right[l][j].col(c);
      via_rows += (rows * x).squaredNorm();
    }
    worst = std::max(worst, std::abs(via_rows - ora_t) / std::max(1.0, ora_t));

    SpatialWeightConfig sc{n, 0.3, 0.7};
    double lib_s = spatial_penalty_value(left, right, sc, sc);
    double ora_s = testutil::spatial_oracle(left, right, 0.3, 0.7);
    worst = std::max(worst, std::abs(lib_s - ora_s) / std::max(1.0, ora_s));
  }
  return {worst < 1e-10, fmt("max relative deviation %.2e", worst)};
}

// --------------------------------------------------------------- criterion 12
Outcome c12_separability() {
  auto gauss_kernel = [](double x, double y, double a, double b) {
    double d2 = (x - a) * (x - a) + (y - b) * (y - b);
    return std::exp(-d2 / 0.25);
  };
  const Eigen::Index n = 8;
  Eigen::MatrixXd rect = rect_grid(n);
  Eigen::VectorXd sv = separability_spectrum(gauss_kernel, rect, rect);
  double rect_ratio = sv(4) / sv(0);
  if (rect_ratio >= 1e-3)
    return {false, fmt("regular-grid ratio %.2e too large", rect_ratio)};

  double min_random = 1e300;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Eigen::VectorXd rnd_sv = separability_spectrum(
        gauss_kernel, random_grid(n, seed), random_grid(n, seed + 100));
    min_random = std::min(min_random, rnd_sv(4) / rnd_sv(0));
  }
  bool pass = min_random >= 10.0 * rect_ratio;
  return {pass, fmt("rect sigma5/sigma1 %.2e, random min %.2e (%.1fx)",
                    rect_ratio, min_random, min_random / rect_ratio)};
}

// --------------------------------------------------------------- criterion 13
Outcome c13_generator_physics() {
  // structure function against the 5/3 law, far below the outer scale
  const double dx = 0.025, r0 = 0.2, l0 = 1e6;
  const Eigen::Index g = 512;
  const int reps = 50;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(5);
  for (int rep = 0; rep < reps; ++rep) {
    Eigen::MatrixXd s = von_karman_screen(g, g, dx, r0, l0, 1300 + rep, 5);
    for (int d = 2; d <= 6; ++d) {
      double sum = (s.rightCols(g - d) - s.leftCols(g - d)).squaredNorm() +
                   (s.bottomRows(g - d) - s.topRows(g - d)).squaredNorm();
      acc(d - 2) += sum / double(2 * g * (g - d));
    }
  }
  double worst_ratio_lo = 1e300, worst_ratio_hi = 0.0;
  for (int d = 2; d <= 6; ++d) {
    double expected = 6.8839 * std::pow(d * dx / r0, 5.0 / 3.0);
    double ratio = acc(d - 2) / reps / expected;
    worst_ratio_lo = std::min(worst_ratio_lo, ratio);
    worst_ratio_hi = std::max(worst_ratio_hi, ratio);
  }
  bool sf_ok = worst_ratio_lo > 0.85 && worst_ratio_hi < 1.15;

  // planar wavefronts give exactly proportional slopes
  const Eigen::Index lenslets = 10;
  const int np = 3;
  const Eigen::Index nphi = lenslets * (np + 1) + 1;
  double a = 0.7, b = -0.3;
  Eigen::MatrixXd phase(nphi, nphi);
  for (Eigen::Index u = 0; u < nphi; ++u)
    for (Eigen::Index v = 0; v < nphi; ++v)
      phase(u, v) = a * double(u) + b * double(v);
  Eigen::MatrixXd frame = shack_hartmann_frame(phase, lenslets, np);
  double sx = double(np) * a * double(np - 1);
  double sy = double(np) * b * double(np - 1);
  double slope_err =
      std::max((frame.leftCols(lenslets).array() - sx).abs().maxCoeff(),
               (frame.rightCols(lenslets).array() - sy).abs().maxCoeff());
  bool pass = sf_ok && slope_err < 1e-12;
  return {pass, fmt("structure fn ratio in [%.3f, %.3f], slope err %.1e",
                    worst_ratio_lo, worst_ratio_hi, slope_err)};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<Check> checks = {
      {1, "reshuffle-algebra", c1_reshuffle_algebra},
      {2, "kronecker-rank-laws", c2_rank_laws},
      {3, "fast-op-equivalence", c3_fast_ops},
      {4, "noiseless-als-recovery", c4_noiseless_recovery},
      {5, "normalized-fixed-point", c5_fixed_point},
      {6, "monotone-descent", c6_monotone_descent},
      {7, "prediction-parity", c7_prediction_parity},
      {8, "regularization-benefit", c8_regularization_benefit},
      {9, "scaling-slopes", c9_scaling_slopes},
      {10, "missing-data", c10_missing_data},
      {11, "regularizer-identities", c11_regularizer_identities},
      {12, "separability-spectrum", c12_separability},
      {13, "generator-physics", c13_generator_physics},
  };

  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& check : checks) {
    if (!wanted.empty() && !wanted.count(check.id)) continue;
    Outcome out;
    try {
      out = check.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] c%02d %-24s %s\n", out.pass ? "PASS" : "FAIL", check.id,
                check.name, out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures;
}
