#include <cmath>
#include <random>

#include "quarks/datagen.hpp"
#include "quarks/errors.hpp"

namespace quarks {

Eigen::MatrixXd shack_hartmann_frame(const Eigen::MatrixXd& phase,
                                     Eigen::Index lenslets,
                                     int phase_per_lenslet) {
  const Eigen::Index n_phi = lenslets * (phase_per_lenslet + 1) + 1;
  if (phase.rows() != n_phi || phase.cols() != n_phi)
    throw ConfigError("shack_hartmann_frame: phase grid must be " +
                      std::to_string(n_phi) + "x" + std::to_string(n_phi));

  const int np = phase_per_lenslet;
  Eigen::MatrixXd frame(lenslets, 2 * lenslets);
  for (Eigen::Index i = 0; i < lenslets; ++i) {
    for (Eigen::Index j = 0; j < lenslets; ++j) {
      Eigen::Index r0 = i * (np + 1);
      Eigen::Index c0 = j * (np + 1);
      // boundary differences of the interior samples of lenslet (i,j)
      double sx = 0.0, sy = 0.0;
      for (int v = 1; v <= np; ++v)
        sx += phase(r0 + np, c0 + v) - phase(r0 + 1, c0 + v);
      for (int u = 1; u <= np; ++u)
        sy += phase(r0 + u, c0 + np) - phase(r0 + u, c0 + 1);
      frame(i, j) = sx;
      frame(i, lenslets + j) = sy;
    }
  }
  return frame;
}

AoData shack_hartmann(const std::vector<PhaseScreenSequence>& layers,
                      const TurbulenceConfig& cfg, Eigen::Index count) {
  if (count < 1) throw ConfigError("shack_hartmann: count must be positive");
  AoData out;
  for (const auto& l : layers) out.wrapped |= l.wrapped();
  double power = 0.0;
  for (Eigen::Index k = 0; k < count; ++k) {
    Eigen::MatrixXd frame = shack_hartmann_frame(
        combined_screen(layers, k), cfg.lenslets, cfg.phase_per_lenslet);
    power += frame.squaredNorm();
    out.clean.append(std::move(frame));
  }
  power /= double(count) * double(out.clean.channels());

  out.noise_std = std::sqrt(power * std::pow(10.0, -cfg.snr_db / 10.0));
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index k = 0; k < count; ++k) {
    Eigen::MatrixXd noisy = out.clean.frame(k);
    for (Eigen::Index c = 0; c < noisy.cols(); ++c)
      for (Eigen::Index r = 0; r < noisy.rows(); ++r)
        noisy(r, c) += out.noise_std * gauss(rng);
    out.noisy.append(std::move(noisy));
  }
  return out;
}

AoData generate_ao_batch(const TurbulenceConfig& cfg, Eigen::Index count) {
  return shack_hartmann(von_karman_screens(cfg, count), cfg, count);
}

}  // namespace quarks
