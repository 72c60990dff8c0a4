// Command-line front end: data generation, model fitting, validation,
// imputation, scaling benchmarks, and the kernel separability study.
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 I/O error.

#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "quarks/als.hpp"
#include "quarks/baselines.hpp"
#include "quarks/datagen.hpp"
#include "quarks/errors.hpp"
#include "quarks/io.hpp"
#include "quarks/metrics.hpp"
#include "quarks/missing_data.hpp"
#include "quarks/parallel.hpp"

namespace {

using nlohmann::json;

struct GenerateArgs {
  std::string kind = "ao";
  int n = 10;
  int order = 2;
  int rank = 2;
  long long samples = 5000;
  long long validation = 5000;
  std::uint64_t seed = 0;
  double noise_std = 1.0;
  std::string train_path;
  std::string val_path;
  std::string model_out;
  // turbulence parameters, two layers by default
  std::vector<double> fried = {0.2, 0.4};
  std::vector<double> wind = {1.0, 2.0};
  double outer_scale = 10.0;
  int phase_per_lenslet = 3;
  double snr_db = 15.0;
  double aperture = 1.0;
  double sampling_hz = 500.0;
  int subharmonics = 3;
  bool clean = false;
};

struct FitArgs {
  std::string data_path;
  std::string method = "quarks";
  int order = 2;
  int rank = 2;
  double mu = 0.0, xi = 0.8, eta = 0.5, lambda = 0.0, zeta = 0.1;
  double tau = 0.0;
  double beta = 0.0;
  int max_iters = 100;
  double tol = 1e-5;
  int patience = 3;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string normalize_targets;
  bool normalize_ones = false;
  std::string mask_path;
  std::string model_out;
  std::string report_out;
  std::string coeff_csv;
  std::string completed_out;
};

quarks::TurbulenceConfig turbulence_config(const GenerateArgs& a) {
  quarks::TurbulenceConfig cfg;
  if (a.fried.size() != a.wind.size())
    throw quarks::ConfigError("generate: --r0 and --wind need one value per layer");
  cfg.layers.clear();
  for (std::size_t i = 0; i < a.fried.size(); ++i)
    cfg.layers.push_back({a.fried[i], a.outer_scale, a.wind[i]});
  cfg.aperture = a.aperture;
  cfg.lenslets = a.n;
  cfg.phase_per_lenslet = a.phase_per_lenslet;
  cfg.sampling_hz = a.sampling_hz;
  cfg.snr_db = a.snr_db;
  cfg.seed = a.seed;
  cfg.subharmonic_levels = a.subharmonics;
  return cfg;
}

void run_generate(const GenerateArgs& a) {
  if (a.train_path.empty())
    throw quarks::ConfigError("generate: --train output path is required");
  if (a.n < 2)
    throw quarks::ConfigError("generate: grids of side 1 are not supported");

  if (a.kind == "ao") {
    quarks::TurbulenceConfig cfg = turbulence_config(a);
    quarks::AoData train = quarks::generate_ao_batch(cfg, a.samples);
    if (train.wrapped)
      std::cerr << "warning: strip shorter than the translation, screens wrap "
                   "periodically\n";
    quarks::write_batch_csv(a.train_path, a.clean ? train.clean : train.noisy);
    if (!a.val_path.empty()) {
      cfg.seed = a.seed + 1;  // independent realization of the same process
      quarks::AoData val = quarks::generate_ao_batch(cfg, a.validation);
      quarks::write_batch_csv(a.val_path, a.clean ? val.clean : val.noisy);
    }
  } else if (a.kind == "quarks") {
    quarks::QuarksModel model =
        quarks::random_quarks_model(a.n, a.order, a.rank, a.seed);
    std::vector<Eigen::MatrixXd> init(
        a.order, Eigen::MatrixXd::Zero(a.n, a.n));
    auto sim = quarks::simulate(model, init, a.samples + a.order + 200,
                                a.noise_std, a.seed + 1);
    if (sim.truncated)
      throw quarks::NumericalError("generate: simulation diverged");
    quarks::write_batch_csv(a.train_path,
                            sim.batch.slice(200 + a.order, a.samples));
    if (!a.val_path.empty()) {
      auto vsim = quarks::simulate(model, init, a.validation + a.order + 200,
                                   a.noise_std, a.seed + 2);
      if (vsim.truncated)
        throw quarks::NumericalError("generate: simulation diverged");
      quarks::write_batch_csv(a.val_path,
                              vsim.batch.slice(200 + a.order, a.validation));
    }
    if (!a.model_out.empty()) quarks::write_model_json(a.model_out, model);
  } else {
    throw quarks::ConfigError("generate: unknown --kind '" + a.kind + "'");
  }
}

json fit_config_json(const FitArgs& a) {
  json cfg;
  cfg["data"] = a.data_path;
  cfg["method"] = a.method;
  cfg["p"] = a.order;
  cfg["r"] = a.rank;
  cfg["mu"] = a.mu;
  cfg["xi"] = a.xi;
  cfg["eta"] = a.eta;
  cfg["lambda"] = a.lambda;
  cfg["zeta"] = a.zeta;
  cfg["tau"] = a.tau;
  cfg["beta"] = a.beta;
  cfg["max_iters"] = a.max_iters;
  cfg["tol"] = a.tol;
  cfg["patience"] = a.patience;
  cfg["seed"] = a.seed;
  cfg["threads"] =
      a.threads > 0 ? a.threads : quarks::default_thread_count();
  cfg["mask"] = a.mask_path;
  return cfg;
}

void write_report(const std::string& path, const quarks::AlsReport& report,
                  const FitArgs& args, double train_vaf) {
  if (path.empty()) return;
  json j = json::parse(quarks::report_json(report));
  j["effective_config"] = fit_config_json(args);
  j["train_vaf"] = train_vaf;
  std::ofstream out(path);
  if (!out) throw quarks::IoError("cannot open '" + path + "' for writing");
  out << j.dump(1) << "\n";
}

void run_fit(const FitArgs& a) {
  if (a.data_path.empty() || a.model_out.empty())
    throw quarks::ConfigError("fit: --data and --model-out are required");
  quarks::SensorBatch data = quarks::read_batch_csv(a.data_path);

  quarks::RegularizationConfig reg;
  reg.temporal_weight = a.mu;
  reg.xi = a.xi;
  reg.eta = a.eta;
  reg.spatial_weight = a.lambda;
  reg.zeta = a.zeta;
  reg.ridge = a.beta;

  if (a.method == "dense") {
    quarks::DenseVarModel model = quarks::fit_dense_var(data, a.order);
    quarks::write_model_json(a.model_out, model);
    auto [act, pred] = quarks::one_step_predictions(model, data);
    std::printf("dense fit: p=%d train VAF %.2f%%\n", a.order,
                quarks::vaf(act, pred));
    return;
  }
  if (a.method == "sparse") {
    quarks::SparseFitResult res = quarks::fit_sparse_var(data, a.order, a.tau);
    if (!res.converged)
      std::cerr << "warning: proximal solver hit the iteration cap\n";
    quarks::write_model_json(a.model_out, res.model);
    auto [act, pred] = quarks::one_step_predictions(res.model, data);
    std::printf("sparse fit: p=%d tau=%g nonzeros=%lld train VAF %.2f%%\n",
                a.order, a.tau,
                static_cast<long long>(quarks::model_complexity(res.model)),
                quarks::vaf(act, pred));
    return;
  }
  if (a.method != "quarks")
    throw quarks::ConfigError("fit: unknown --method '" + a.method + "'");

  quarks::AlsOptions opt;
  opt.max_iterations = a.max_iters;
  opt.tolerance = a.tol;
  opt.patience = a.patience;
  opt.seed = a.seed;
  opt.threads = a.threads;
  if (a.normalize_ones)
    opt.column_norm_targets = Eigen::VectorXd::Ones(data.frame_cols());
  if (!a.normalize_targets.empty()) {
    std::ifstream in(a.normalize_targets);
    if (!in)
      throw quarks::IoError("cannot open '" + a.normalize_targets + "'");
    std::vector<double> vals;
    double v;
    while (in >> v) vals.push_back(v);
    opt.column_norm_targets =
        Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
  }

  quarks::QuarksModel model;
  quarks::AlsReport report;
  if (!a.mask_path.empty()) {
    quarks::MissingMask mask =
        quarks::read_mask_csv(a.mask_path, data.channels());
    quarks::MissingFit fit =
        quarks::fit_with_missing(data, mask, a.order, a.rank, opt, reg);
    model = std::move(fit.model);
    report = std::move(fit.report);
    if (!a.completed_out.empty())
      quarks::write_batch_csv(a.completed_out, fit.completed);
  } else {
    quarks::AlsFit fit = quarks::als_fit(data, a.order, a.rank, opt, reg);
    model = std::move(fit.model);
    report = std::move(fit.report);
  }

  quarks::write_model_json(a.model_out, model);
  auto [act, pred] = quarks::one_step_predictions(model, data);
  double train_vaf = quarks::vaf(act, pred);
  write_report(a.report_out, report, a, train_vaf);
  if (!a.coeff_csv.empty())
    for (int lag = 1; lag <= model.order; ++lag)
      quarks::write_coefficient_csv(
          a.coeff_csv + ".A" + std::to_string(lag) + ".csv", model, lag);
  std::printf("quarks fit: p=%d r=%d iters=%d cost=%.6g train VAF %.2f%%\n",
              a.order, a.rank, report.iterations,
              report.cost_trace.empty() ? 0.0 : report.cost_trace.back(),
              train_vaf);
}

void run_validate(const std::string& model_path, const std::string& data_path,
                  const std::string& residual_csv) {
  quarks::SensorBatch data = quarks::read_batch_csv(data_path);
  quarks::AnyModel any = quarks::read_model_json(model_path);

  Eigen::MatrixXd actual, predicted;
  if (std::holds_alternative<quarks::QuarksModel>(any)) {
    auto [a, p] =
        quarks::one_step_predictions(std::get<quarks::QuarksModel>(any), data);
    actual = a;
    predicted = p;
  } else {
    auto [a, p] = quarks::one_step_predictions(
        std::get<quarks::DenseVarModel>(any), data);
    actual = a;
    predicted = p;
  }
  double score = quarks::vaf(actual, predicted);
  std::printf("VAF %.4f%% over %lld steps\n", score,
              static_cast<long long>(actual.cols()));
  if (!residual_csv.empty()) {
    std::ofstream out(residual_csv);
    if (!out) throw quarks::IoError("cannot open '" + residual_csv + "'");
    out << "step,residual_sq,signal_sq\n";
    for (Eigen::Index t = 0; t < actual.cols(); ++t)
      out << t << "," << (actual.col(t) - predicted.col(t)).squaredNorm()
          << "," << actual.col(t).squaredNorm() << "\n";
  }
}

void run_impute(const std::string& model_path, const std::string& data_path,
                const std::string& mask_path, double beta,
                const std::string& out_path) {
  quarks::SensorBatch data = quarks::read_batch_csv(data_path);
  quarks::AnyModel any = quarks::read_model_json(model_path);
  if (!std::holds_alternative<quarks::QuarksModel>(any))
    throw quarks::ConfigError("impute: needs a structured model");
  quarks::MissingMask mask = quarks::read_mask_csv(mask_path, data.channels());
  quarks::SensorBatch completed = quarks::impute_given_model(
      std::get<quarks::QuarksModel>(any), data, mask, beta);
  quarks::write_batch_csv(out_path, completed);
  std::printf("imputed %lld channels over %lld samples\n",
              static_cast<long long>(mask.missing_count()),
              static_cast<long long>(data.size()));
}

std::vector<int> parse_sizes(const std::string& spec) {
  // either "6:2:20" (start:step:stop) or a comma list
  std::vector<int> sizes;
  if (spec.find(':') != std::string::npos) {
    int start, step, stop;
    if (std::sscanf(spec.c_str(), "%d:%d:%d", &start, &step, &stop) != 3 ||
        step <= 0)
      throw quarks::ConfigError("bench: bad --sizes range '" + spec + "'");
    for (int n = start; n <= stop; n += step) sizes.push_back(n);
  } else {
    std::stringstream ss(spec);
    std::string cell;
    while (std::getline(ss, cell, ','))
      if (!cell.empty()) sizes.push_back(std::stoi(cell));
  }
  if (sizes.empty()) throw quarks::ConfigError("bench: empty size range");
  return sizes;
}

void run_bench(const std::string& methods_csv, const std::string& sizes_spec,
               int reps, int order, int rank, std::uint64_t seed, int threads,
               const std::string& out_csv) {
  std::vector<std::string> methods;
  std::stringstream ss(methods_csv);
  std::string cell;
  while (std::getline(ss, cell, ','))
    if (!cell.empty()) methods.push_back(cell);

  quarks::ScalingOptions opt;
  opt.sizes = parse_sizes(sizes_spec);
  opt.repetitions = reps;
  opt.order = order;
  opt.rank = rank;
  opt.seed = seed;
  opt.threads = threads;

  quarks::ScalingResult res = quarks::scaling_bench(methods, opt);
  if (!out_csv.empty()) quarks::write_bench_csv(out_csv, res.records);
  for (const auto& [name, slope] : res.slopes)
    std::printf("%s: log10(time) = %.3f*log10(N) %+.3f (slope std %.3f)\n",
                name.c_str(), slope.slope, slope.intercept,
                slope.slope_stddev);
}

void run_spectrum(int n, const std::string& kernel_kind, double sigma,
                  const std::string& grids, std::uint64_t seed,
                  const std::string& out_csv) {
  std::function<double(double, double, double, double)> kernel;
  if (kernel_kind == "gauss") {
    kernel = [sigma](double x, double y, double a, double b) {
      double d2 = (x - a) * (x - a) + (y - b) * (y - b);
      return std::exp(-d2 / (sigma * sigma));
    };
  } else if (kernel_kind == "exp") {
    kernel = [sigma](double x, double y, double a, double b) {
      double d = std::sqrt((x - a) * (x - a) + (y - b) * (y - b));
      return std::exp(-d / (sigma * sigma));
    };
  } else {
    throw quarks::ConfigError("spectrum: unknown --kernel '" + kernel_kind +
                              "'");
  }

  Eigen::MatrixXd in_grid, out_grid;
  if (grids == "rect2rect") {
    in_grid = quarks::rect_grid(n);
    out_grid = in_grid;
  } else if (grids == "random2random") {
    in_grid = quarks::random_grid(n, seed);
    out_grid = quarks::random_grid(n, seed + 1);
  } else if (grids == "hex2rect") {
    // hex lattice coordinates for the inputs, regular lattice outputs
    auto hex = quarks::hex_rings((n - 1) / 2);
    auto cells = quarks::hex_to_grid(hex);
    in_grid.resize(n * n, 2);
    in_grid.setZero();
    Eigen::Index row = 0;
    for (const auto& g : cells) {
      if (row >= n * n) break;
      in_grid(row, 0) = double(g.row) + 0.5 * double(g.col);
      in_grid(row, 1) = std::sqrt(3.0) / 2.0 * double(g.col);
      ++row;
    }
    in_grid /= double(n);
    out_grid = quarks::rect_grid(n);
  } else {
    throw quarks::ConfigError("spectrum: unknown --grids '" + grids + "'");
  }

  Eigen::VectorXd sv = quarks::separability_spectrum(kernel, in_grid, out_grid);
  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    if (!out) throw quarks::IoError("cannot open '" + out_csv + "'");
    out << "index,singular_value\n";
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      out << i << "," << sv(i) << "\n";
  }
  std::printf("sigma_1 %.6g, sigma_5/sigma_1 %.3e, numerical K-rank (1e-10) "
              "%lld\n",
              sv(0), sv.size() > 4 ? sv(4) / sv(0) : 0.0,
              static_cast<long long>(
                  (sv.array() > 1e-10 * sv(0)).count()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kronecker-structured VAR identification toolkit"};
  app.set_config("--config", "", "Read options from an INI/TOML file");
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* cgen = app.add_subcommand(
      "generate", "Synthesize sensor batches (turbulence or random model)");
  cgen->add_option("--kind", gen.kind, "ao | quarks");
  cgen->add_option("--n", gen.n, "grid side (lenslets per side for ao)");
  cgen->add_option("--p", gen.order, "temporal order of the random model");
  cgen->add_option("--r", gen.rank, "Kronecker rank of the random model");
  cgen->add_option("--nt", gen.samples, "identification samples");
  cgen->add_option("--nt-val", gen.validation, "validation samples");
  cgen->add_option("--seed", gen.seed, "realization seed");
  cgen->add_option("--noise-std", gen.noise_std,
                   "process noise std for --kind quarks");
  cgen->add_option("--train", gen.train_path, "output CSV (identification)")
      ->required();
  cgen->add_option("--val", gen.val_path, "output CSV (validation)");
  cgen->add_option("--model-out", gen.model_out,
                   "write the generating model (kind quarks)");
  cgen->add_option("--r0", gen.fried, "Fried parameter per layer [m]");
  cgen->add_option("--wind", gen.wind, "windspeed per layer [points/sample]");
  cgen->add_option("--l0", gen.outer_scale, "outer scale [m]");
  cgen->add_option("--n-phi", gen.phase_per_lenslet,
                   "phase samples per lenslet side");
  cgen->add_option("--snr-db", gen.snr_db, "sensor SNR [dB]");
  cgen->add_option("--aperture", gen.aperture, "telescope aperture [m]");
  cgen->add_option("--sampling-hz", gen.sampling_hz, "sampling frequency");
  cgen->add_option("--subharmonics", gen.subharmonics,
                   "low-frequency compensation depth");
  cgen->add_flag("--clean", gen.clean, "emit noise-free slopes");

  FitArgs fit;
  auto* cfit = app.add_subcommand("fit", "Identify a model from a batch");
  cfit->add_option("--data", fit.data_path, "input batch CSV")->required();
  cfit->add_option("--method", fit.method, "quarks | dense | sparse");
  cfit->add_option("--p", fit.order, "temporal order");
  cfit->add_option("--r", fit.rank, "Kronecker rank");
  cfit->add_option("--mu", fit.mu, "temporal regularization weight");
  cfit->add_option("--xi", fit.xi, "temporal kernel decay, [0,1)");
  cfit->add_option("--eta", fit.eta, "temporal kernel correlation, [-1,1]");
  cfit->add_option("--lambda", fit.lambda, "spatial regularization weight");
  cfit->add_option("--zeta", fit.zeta, "spatial decay rate");
  cfit->add_option("--tau", fit.tau, "l1 weight for --method sparse");
  cfit->add_option("--beta", fit.beta, "missing-data ridge");
  cfit->add_option("--max-iters", fit.max_iters, "iteration cap");
  cfit->add_option("--tol", fit.tol, "stopping tolerance on |dc|");
  cfit->add_option("--patience", fit.patience,
                   "consecutive calm iterations before stopping");
  cfit->add_option("--seed", fit.seed, "initializer seed");
  cfit->add_option("--threads", fit.threads,
                   "worker threads (0: QUARKS_THREADS env)");
  cfit->add_option("--normalize-targets", fit.normalize_targets,
                   "file with one column-norm target per frame column");
  cfit->add_flag("--normalize-ones", fit.normalize_ones,
                 "normalize stacked right-factor columns to 1");
  cfit->add_option("--mask", fit.mask_path,
                   "missing-channel CSV; enables the joint fit");
  cfit->add_option("--model-out", fit.model_out, "output model JSON")
      ->required();
  cfit->add_option("--report-out", fit.report_out, "output report JSON");
  cfit->add_option("--completed-out", fit.completed_out,
                   "write the imputed batch (with --mask)");
  cfit->add_option("--export-coeff-csv", fit.coeff_csv,
                   "debug: dense A_i CSV prefix");

  std::string v_model, v_data, v_resid;
  auto* cval = app.add_subcommand("validate", "Score a model on a batch");
  cval->add_option("--model", v_model, "model JSON")->required();
  cval->add_option("--data", v_data, "batch CSV")->required();
  cval->add_option("--residual-csv", v_resid, "per-step residual output");

  std::string i_model, i_data, i_mask, i_out;
  double i_beta = 0.0;
  auto* cimp = app.add_subcommand("impute", "Fill missing channels");
  cimp->add_option("--model", i_model, "model JSON")->required();
  cimp->add_option("--data", i_data, "batch CSV with gaps")->required();
  cimp->add_option("--mask", i_mask, "missing-channel CSV")->required();
  cimp->add_option("--beta", i_beta, "ridge weight");
  cimp->add_option("--out", i_out, "completed batch CSV")->required();

  std::string b_methods = "quarks,dense", b_sizes = "6:2:20", b_out;
  int b_reps = 3, b_p = 4, b_r = 2, b_threads = 1;
  std::uint64_t b_seed = 1;
  auto* cbench = app.add_subcommand("bench", "Wall-time scaling sweep");
  cbench->add_option("--methods", b_methods, "comma list: quarks,dense");
  cbench->add_option("--sizes", b_sizes, "start:step:stop or comma list");
  cbench->add_option("--reps", b_reps, "timed repetitions (median)");
  cbench->add_option("--p", b_p, "temporal order");
  cbench->add_option("--r", b_r, "Kronecker rank");
  cbench->add_option("--seed", b_seed, "data seed");
  cbench->add_option("--threads", b_threads,
                     "worker threads during measurements");
  cbench->add_option("--out", b_out, "records CSV");

  int s_n = 8;
  std::string s_kernel = "gauss", s_grids = "rect2rect", s_out;
  double s_sigma = 0.5;
  std::uint64_t s_seed = 0;
  auto* cspec = app.add_subcommand(
      "spectrum", "Singular values of the reshuffled kernel map");
  cspec->add_option("--n", s_n, "grid side");
  cspec->add_option("--kernel", s_kernel,
                    "gauss: exp(-d^2/s^2) | exp: exp(-d/s^2)");
  cspec->add_option("--sigma", s_sigma, "kernel width");
  cspec->add_option("--grids", s_grids, "rect2rect | random2random | hex2rect");
  cspec->add_option("--seed", s_seed, "random grid seed");
  cspec->add_option("--out", s_out, "singular values CSV");

  try {
    app.parse(argc, argv);
    if (cgen->parsed()) run_generate(gen);
    if (cfit->parsed()) run_fit(fit);
    if (cval->parsed()) run_validate(v_model, v_data, v_resid);
    if (cimp->parsed()) run_impute(i_model, i_data, i_mask, i_beta, i_out);
    if (cbench->parsed())
      run_bench(b_methods, b_sizes, b_reps, b_p, b_r, b_seed, b_threads, b_out);
    if (cspec->parsed())
      run_spectrum(s_n, s_kernel, s_sigma, s_grids, s_seed, s_out);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const quarks::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const quarks::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const quarks::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
