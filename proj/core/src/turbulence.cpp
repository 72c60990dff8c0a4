#include <fftw3.h>

#include <Eigen/Core>
#include <cmath>
#include <complex>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "quarks/datagen.hpp"
#include "quarks/errors.hpp"

namespace quarks {

namespace {

constexpr double kVonKarmanPsd = 0.022895586990617642;  // matches the 6.88 law

std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

double fft_frequency(Eigen::Index i, Eigen::Index n, double spacing) {
  Eigen::Index s = i <= n / 2 ? i : i - n;
  return double(s) / (double(n) * spacing);
}

Eigen::Index next_pow2(Eigen::Index v) {
  Eigen::Index p = 1;
  while (p < v) p <<= 1;
  return p;
}

}  // namespace

void TurbulenceConfig::validate() const {
  if (layers.empty()) throw ConfigError("TurbulenceConfig: no layers");
  for (const auto& l : layers) {
    if (l.fried_parameter <= 0.0 || l.outer_scale <= 0.0)
      throw ConfigError("TurbulenceConfig: r0 and L0 must be positive");
    if (l.windspeed < 0.0 ||
        std::abs(l.windspeed - std::round(l.windspeed)) > 1e-9)
      throw ConfigError("TurbulenceConfig: windspeed must be a nonnegative "
                        "integer number of grid points per sample");
  }
  if (aperture <= 0.0) throw ConfigError("TurbulenceConfig: aperture must be positive");
  if (lenslets < 2)
    throw ConfigError("TurbulenceConfig: at least a 2x2 lenslet array is required");
  if (phase_per_lenslet < 1)
    throw ConfigError("TurbulenceConfig: phase_per_lenslet must be >= 1");
  if (sampling_hz <= 0.0) throw ConfigError("TurbulenceConfig: sampling rate must be positive");
  if (subharmonic_levels < 0 || max_grid < 64)
    throw ConfigError("TurbulenceConfig: invalid generator sizing");
}

Eigen::MatrixXd von_karman_screen(Eigen::Index rows, Eigen::Index cols,
                                  double spacing, double r0, double l0,
                                  std::uint64_t seed, int subharmonic_levels) {
  if (rows < 2 || cols < 2 || spacing <= 0.0 || r0 <= 0.0 || l0 <= 0.0)
    throw ConfigError("von_karman_screen: invalid grid or layer parameters");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double scale = kVonKarmanPsd * std::pow(r0, -5.0 / 3.0);
  const double f0sq = 1.0 / (l0 * l0);
  const double dfx = 1.0 / (double(rows) * spacing);
  const double dfy = 1.0 / (double(cols) * spacing);

  std::vector<std::complex<double>> spec(std::size_t(rows) * cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double fx = fft_frequency(i, rows, spacing);
    for (Eigen::Index j = 0; j < cols; ++j) {
      double g1 = gauss(rng), g2 = gauss(rng);
      if (i == 0 && j == 0) {
        spec[0] = 0.0;  // piston carries no slope information
        continue;
      }
      double fy = fft_frequency(j, cols, spacing);
      double amp = std::sqrt(
          scale * std::pow(fx * fx + fy * fy + f0sq, -11.0 / 6.0) * dfx * dfy);
      spec[std::size_t(i) * cols + j] =
          std::complex<double>(g1, g2) * (amp / std::sqrt(2.0));
    }
  }

  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_plan plan = fftw_plan_dft_2d(
        int(rows), int(cols), reinterpret_cast<fftw_complex*>(spec.data()),
        reinterpret_cast<fftw_complex*>(spec.data()), FFTW_BACKWARD,
        FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }

  Eigen::MatrixXd screen(rows, cols);
  const double root2 = std::sqrt(2.0);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      screen(i, j) = root2 * spec[std::size_t(i) * cols + j].real();

  // Low-frequency modes below the FFT bin, on 3x-refined cells per level.
  for (int level = 1; level <= subharmonic_levels; ++level) {
    double sx = dfx / std::pow(3.0, level);
    double sy = dfy / std::pow(3.0, level);
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b) {
        double g1 = gauss(rng), g2 = gauss(rng);
        if (a == 0 && b == 0) continue;
        double fx = a * sx, fy = b * sy;
        double amp = std::sqrt(
            scale * std::pow(fx * fx + fy * fy + f0sq, -11.0 / 6.0) * sx * sy);
        Eigen::ArrayXd cx(rows), snx(rows), cy(cols), sny(cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
          double t = 2.0 * M_PI * fx * double(i) * spacing;
          cx(i) = std::cos(t);
          snx(i) = std::sin(t);
        }
        for (Eigen::Index j = 0; j < cols; ++j) {
          double t = 2.0 * M_PI * fy * double(j) * spacing;
          cy(j) = std::cos(t);
          sny(j) = std::sin(t);
        }
        // amp*(g1*cos(theta) - g2*sin(theta)), theta = 2pi(fx xi + fy yj)
        screen.array() += amp * g1 *
                          (cx.matrix() * cy.matrix().transpose() -
                           snx.matrix() * sny.matrix().transpose())
                              .array();
        screen.array() -= amp * g2 *
                          (snx.matrix() * cy.matrix().transpose() +
                           cx.matrix() * sny.matrix().transpose())
                              .array();
      }
  }
  return screen;
}

PhaseScreenSequence::PhaseScreenSequence(Eigen::MatrixXd strip,
                                         Eigen::Index window,
                                         Eigen::Index shift, Eigen::Index count,
                                         bool wrapped)
    : strip_(std::move(strip)),
      window_(window),
      shift_(shift),
      count_(count),
      wrapped_(wrapped) {
  if (strip_.rows() != window_ || strip_.cols() < window_)
    throw ConfigError("PhaseScreenSequence: strip smaller than the window");
}

Eigen::MatrixXd PhaseScreenSequence::screen(Eigen::Index k) const {
  if (k < 0 || k >= count_)
    throw ConfigError("PhaseScreenSequence: sample index out of range");
  Eigen::Index start = k * shift_;
  Eigen::Index cols = strip_.cols();
  if (!wrapped_ || start + window_ <= cols) {
    start %= cols;
    if (start + window_ <= cols) return strip_.middleCols(start, window_);
  }
  Eigen::MatrixXd out(window_, window_);
  for (Eigen::Index j = 0; j < window_; ++j)
    out.col(j) = strip_.col((start + j) % cols);
  return out;
}

std::vector<PhaseScreenSequence> von_karman_screens(const TurbulenceConfig& cfg,
                                                    Eigen::Index count) {
  cfg.validate();
  if (count < 1) throw ConfigError("von_karman_screens: count must be positive");
  const Eigen::Index n_phi = cfg.phase_points();
  const double dx = cfg.spacing();

  std::vector<PhaseScreenSequence> out;
  out.reserve(cfg.layers.size());
  for (std::size_t l = 0; l < cfg.layers.size(); ++l) {
    const auto& layer = cfg.layers[l];
    Eigen::Index shift = Eigen::Index(std::llround(layer.windspeed));
    Eigen::Index needed = n_phi + shift * (count - 1);
    bool wrapped = false;
    Eigen::Index cols = next_pow2(std::max<Eigen::Index>(256, needed));
    if (cols > cfg.max_grid) {
      cols = cfg.max_grid;  // periodic reuse of the strip
      wrapped = true;
    }
    Eigen::Index rows = next_pow2(std::max<Eigen::Index>(256, 2 * n_phi));
    Eigen::MatrixXd strip =
        von_karman_screen(rows, cols, dx, layer.fried_parameter,
                          layer.outer_scale, cfg.seed + l,
                          cfg.subharmonic_levels)
            .topRows(n_phi);
    out.emplace_back(std::move(strip), n_phi, shift, count, wrapped);
  }
  return out;
}

Eigen::MatrixXd combined_screen(const std::vector<PhaseScreenSequence>& layers,
                                Eigen::Index k) {
  if (layers.empty()) throw ConfigError("combined_screen: no layers");
  Eigen::MatrixXd out = layers.front().screen(k);
  for (std::size_t l = 1; l < layers.size(); ++l) out += layers[l].screen(k);
  return out;
}

}  // namespace quarks
