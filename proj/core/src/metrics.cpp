#include "quarks/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "quarks/als.hpp"
#include "quarks/datagen.hpp"
#include "quarks/errors.hpp"

namespace quarks {

double vaf(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted) {
  if (actual.rows() != predicted.rows() || actual.cols() != predicted.cols())
    throw ConfigError("vaf: signals must have equal shape");
  double signal = actual.squaredNorm();
  if (signal == 0.0)
    throw NumericalError("vaf: actual signal is identically zero, the ratio "
                         "is undefined");
  double resid = (actual - predicted).squaredNorm();
  return std::max(0.0, (1.0 - resid / signal) * 100.0);
}

double vaf(const SensorBatch& actual, const SensorBatch& predicted) {
  return vaf(actual.lifted_all(), predicted.lifted_all());
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> one_step_predictions(
    const QuarksModel& model, const SensorBatch& batch) {
  if (batch.size() <= model.order)
    throw ConfigError("one_step_predictions: need more frames than lags");
  const Eigen::Index steps = batch.size() - model.order;
  Eigen::MatrixXd actual(batch.channels(), steps);
  Eigen::MatrixXd pred(batch.channels(), steps);
  std::vector<Eigen::MatrixXd> window(batch.frames().begin(),
                                      batch.frames().begin() + model.order);
  for (Eigen::Index t = 0; t < steps; ++t) {
    Eigen::MatrixXd p = model.predict_one(window);
    pred.col(t) = Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
    actual.col(t) = batch.lifted(model.order + t);
    window.erase(window.begin());
    window.push_back(batch.frame(model.order + t));
  }
  return {actual, pred};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> one_step_predictions(
    const DenseVarModel& model, const SensorBatch& batch) {
  if (batch.channels() != model.channels)
    throw ConfigError("one_step_predictions: channel mismatch");
  if (batch.size() <= model.order)
    throw ConfigError("one_step_predictions: need more frames than lags");
  const Eigen::Index steps = batch.size() - model.order;
  Eigen::MatrixXd actual(batch.channels(), steps);
  Eigen::MatrixXd pred(batch.channels(), steps);
  std::vector<Eigen::VectorXd> window;
  for (int i = 0; i < model.order; ++i) window.push_back(batch.lifted(i));
  for (Eigen::Index t = 0; t < steps; ++t) {
    pred.col(t) = model.predict_one(window);
    actual.col(t) = batch.lifted(model.order + t);
    window.erase(window.begin());
    window.push_back(batch.lifted(model.order + t));
  }
  return {actual, pred};
}

Eigen::Index model_complexity(const QuarksModel& model) {
  return model.parameter_count();
}

Eigen::Index model_complexity(const DenseVarModel& model, double truncation) {
  Eigen::Index count = 0;
  for (const auto& a : model.coefficients) {
    double floor = truncation * a.cwiseAbs().maxCoeff();
    count += (a.cwiseAbs().array() > floor).count();
  }
  return count;
}

SlopeFit fit_loglog_slope(
    const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3)
    throw ConfigError("fit_loglog_slope: need at least 3 points");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (points[i].first <= 0.0 || points[i].second <= 0.0)
      throw ConfigError("fit_loglog_slope: sizes and times must be positive");
    x(i) = std::log10(points[i].first);
    y(i) = std::log10(points[i].second);
  }
  double xm = x.mean(), ym = y.mean();
  double sxx = (x.array() - xm).square().sum();
  double sxy = ((x.array() - xm) * (y.array() - ym)).sum();
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = ym - f.slope * xm;
  double ss_res = (y.array() - f.intercept - f.slope * x.array()).square().sum();
  double sigma2 = n > 2 ? ss_res / double(n - 2) : 0.0;
  f.slope_stddev = std::sqrt(sigma2 / sxx);
  return f;
}

double time_median(const std::function<void()>& fn, int repetitions,
                   double min_seconds) {
  using clock = std::chrono::steady_clock;
  if (repetitions < 1) throw ConfigError("time_median: need repetitions >= 1");
  fn();  // warm-up, discarded
  std::vector<double> times;
  times.reserve(repetitions);
  for (int rep = 0; rep < repetitions; ++rep) {
    int inner = 1;
    for (;;) {
      auto t0 = clock::now();
      for (int i = 0; i < inner; ++i) fn();
      double span = std::chrono::duration<double>(clock::now() - t0).count();
      if (span >= min_seconds || inner >= (1 << 20)) {
        times.push_back(span / double(inner));
        break;
      }
      inner *= 2;  // below clock resolution, repeat and average
    }
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

namespace {

BenchRecord run_quarks_case(int n, const ScalingOptions& opt) {
  const Eigen::Index samples = Eigen::Index(10) * opt.order * opt.rank * n;
  QuarksModel truth =
      random_quarks_model(n, opt.order, opt.rank, opt.seed + n);
  std::vector<Eigen::MatrixXd> init(
      opt.order, Eigen::MatrixXd::Zero(n, n));
  SensorBatch data =
      simulate(truth, init, samples + 200, opt.noise_std, opt.seed + 7 * n)
          .batch.slice(200, samples);

  AlsOptions als;
  als.max_iterations = opt.max_iterations;
  als.tolerance = 1e-300;  // run the full iteration budget
  als.patience = 1;
  als.seed = opt.seed;
  als.threads = opt.threads;

  BenchRecord rec;
  rec.method = "quarks";
  rec.n = n;
  rec.samples = samples;
  rec.order = opt.order;
  rec.rank = opt.rank;
  rec.threads = opt.threads;
  rec.seconds = time_median([&] { als_fit(data, opt.order, opt.rank, als); },
                            opt.repetitions);
  AlsFit fit = als_fit(data, opt.order, opt.rank, als);
  auto [act, pred] = one_step_predictions(fit.model, data);
  rec.vaf_percent = vaf(act, pred);
  rec.nonzeros = model_complexity(fit.model);
  return rec;
}

BenchRecord run_dense_case(int n, const ScalingOptions& opt) {
  const Eigen::Index samples = Eigen::Index(50) * n * n;
  QuarksModel truth =
      random_quarks_model(n, opt.order, opt.rank, opt.seed + n);
  std::vector<Eigen::MatrixXd> init(
      opt.order, Eigen::MatrixXd::Zero(n, n));
  SensorBatch data =
      simulate(truth, init, samples + 200, opt.noise_std, opt.seed + 7 * n)
          .batch.slice(200, samples);

  BenchRecord rec;
  rec.method = "dense";
  rec.n = n;
  rec.samples = samples;
  rec.order = opt.order;
  rec.rank = 0;
  rec.threads = opt.threads;
  rec.seconds =
      time_median([&] { fit_dense_var(data, opt.order); }, opt.repetitions);
  DenseVarModel model = fit_dense_var(data, opt.order);
  auto [act, pred] = one_step_predictions(model, data);
  rec.vaf_percent = vaf(act, pred);
  rec.nonzeros = model_complexity(model);
  return rec;
}

void add_slope(ScalingResult& res, const std::string& method) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : res.records)
    if (r.method == method) pts.emplace_back(double(r.n), r.seconds);
  if (pts.size() >= 3) res.slopes[method] = fit_loglog_slope(pts);
}

}  // namespace

ScalingResult scaling_bench(const std::vector<std::string>& methods,
                            const ScalingOptions& options) {
  if (options.sizes.empty())
    throw ConfigError("scaling_bench: empty size range");
  if (!std::is_sorted(options.sizes.begin(), options.sizes.end()))
    throw ConfigError("scaling_bench: sizes must be sorted ascending");
  ScalingResult res;
  for (const auto& method : methods) {
    for (int n : options.sizes) {
      if (method == "quarks")
        res.records.push_back(run_quarks_case(n, options));
      else if (method == "dense")
        res.records.push_back(run_dense_case(n, options));
      else
        throw ConfigError("scaling_bench: unknown method '" + method + "'");
    }
    add_slope(res, method);
  }
  return res;
}

ScalingResult scaling_bench_custom(const std::string& name,
                                   const std::function<void(int)>& work,
                                   const ScalingOptions& options) {
  if (options.sizes.empty())
    throw ConfigError("scaling_bench_custom: empty size range");
  ScalingResult res;
  for (int n : options.sizes) {
    BenchRecord rec;
    rec.method = name;
    rec.n = n;
    rec.order = options.order;
    rec.rank = options.rank;
    rec.threads = options.threads;
    rec.seconds = time_median([&] { work(n); }, options.repetitions);
    res.records.push_back(rec);
  }
  add_slope(res, name);
  return res;
}

}  // namespace quarks
