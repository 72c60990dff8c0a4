#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "quarks/quarks_model.hpp"
#include "quarks/sensor_batch.hpp"

namespace quarks {

// -- random structured models ------------------------------------------------

/// Random stable model on a square n x n grid: every factor is Toeplitz with
/// per-offset entries drawn as gaussian * exp(-decay*|offset|), then the lag
/// coefficients are scaled so the companion spectral radius does not exceed
/// spectral_target.
QuarksModel random_quarks_model(Eigen::Index n, int order, int rank,
                                std::uint64_t seed, double decay = 0.5,
                                double spectral_target = 0.95);

/// Spectral radius of the model's companion matrix; dense eigenvalues for
/// small systems, power iteration above that.
double companion_spectral_radius(const QuarksModel& model);

/// Frames of i.i.d. standard normal entries.
SensorBatch white_noise_batch(Eigen::Index rows, Eigen::Index cols,
                              Eigen::Index count, std::uint64_t seed);

/// Response of the lagged bilinear map to a known input series:
///   output[k] = sum_ij left[i][j] * inputs[k-i] * right[i][j] + noise
/// for k >= order; the first `order` output frames are zero (they have no
/// full input window and the fit never targets them). Feeding a white input
/// gives a persistently exciting batch that the model explains exactly when
/// noise_std is zero; identify it with the two-series als_fit overload.
SensorBatch lagged_response(const QuarksModel& model, const SensorBatch& inputs,
                            double noise_std, std::uint64_t seed);

// -- atmospheric turbulence ---------------------------------------------------

struct TurbulenceLayer {
  double fried_parameter = 0.2;  // r0 [m]
  double outer_scale = 10.0;     // L0 [m]
  double windspeed = 1.0;        // horizontal, grid points per sample
};

struct TurbulenceConfig {
  std::vector<TurbulenceLayer> layers = {{0.2, 10.0, 1.0}, {0.4, 10.0, 2.0}};
  double aperture = 1.0;         // telescope diameter D [m]
  Eigen::Index lenslets = 10;    // N per side
  int phase_per_lenslet = 3;     // interior phase samples per lenslet side
  double sampling_hz = 500.0;
  double snr_db = 15.0;
  std::uint64_t seed = 0;
  int subharmonic_levels = 3;    // low-frequency compensation depth
  Eigen::Index max_grid = 16384; // longest FFT axis before periodic wrap

  /// Phase grid side: lenslets*(phase_per_lenslet+1)+1, shared boundaries.
  Eigen::Index phase_points() const {
    return lenslets * (phase_per_lenslet + 1) + 1;
  }
  double spacing() const {
    return aperture / double(phase_points() - 1);
  }
  void validate() const;
};

/// One frozen-flow layer: a fixed strip of phase with a window sliding along
/// the wind axis by an integer number of grid points per sample.
class PhaseScreenSequence {
 public:
  PhaseScreenSequence(Eigen::MatrixXd strip, Eigen::Index window,
                      Eigen::Index shift, Eigen::Index count, bool wrapped);

  Eigen::Index size() const { return count_; }
  Eigen::Index window() const { return window_; }
  bool wrapped() const { return wrapped_; }

  /// window x window phase values at sample k.
  Eigen::MatrixXd screen(Eigen::Index k) const;

 private:
  Eigen::MatrixXd strip_;  // window rows x strip columns
  Eigen::Index window_;
  Eigen::Index shift_;
  Eigen::Index count_;
  bool wrapped_;
};

/// Wide-sense-stationary random field with the von Karman phase spectrum
/// 0.0229 r0^-5/3 (f^2 + 1/L0^2)^-11/6 (f in cycles/m), synthesized by FFT
/// filtering of white noise on a periodic rows x cols grid of the given
/// spacing, plus `subharmonic_levels` of 3x-refined low-frequency modes to
/// restore large-scale power the FFT grid cannot carry.
Eigen::MatrixXd von_karman_screen(Eigen::Index rows, Eigen::Index cols,
                                  double spacing, double fried_parameter,
                                  double outer_scale, std::uint64_t seed,
                                  int subharmonic_levels = 3);

/// Per-layer frozen-flow sequences for `count` samples. Strips are sized to
/// hold the whole translation when that fits under cfg.max_grid; otherwise
/// the window wraps around the periodic strip and the sequence is flagged.
std::vector<PhaseScreenSequence> von_karman_screens(const TurbulenceConfig& cfg,
                                                    Eigen::Index count);

/// Sum of all layer screens at sample k.
Eigen::MatrixXd combined_screen(const std::vector<PhaseScreenSequence>& layers,
                                Eigen::Index k);

// -- Shack-Hartmann sensing ----------------------------------------------------

/// Slopes of one wavefront: boundary differences of the interior phase
/// samples of each lenslet, x along rows and y along columns. The result is
/// lenslets x 2*lenslets, x-slope plane left, y-slope plane right, so the
/// column-stacked frame lists all x slopes then all y slopes.
Eigen::MatrixXd shack_hartmann_frame(const Eigen::MatrixXd& phase,
                                     Eigen::Index lenslets,
                                     int phase_per_lenslet);

struct AoData {
  SensorBatch clean;
  SensorBatch noisy;
  double noise_std = 0.0;
  bool wrapped = false;
};

/// Slope batches for `count` samples from the given layer sequences; the
/// noisy copy carries white Gaussian channel noise whose variance is set
/// from cfg.snr_db relative to the mean noise-free slope power.
AoData shack_hartmann(const std::vector<PhaseScreenSequence>& layers,
                      const TurbulenceConfig& cfg, Eigen::Index count);

/// Screens + sensing in one call.
AoData generate_ao_batch(const TurbulenceConfig& cfg, Eigen::Index count);

// -- non-rectangular grids -----------------------------------------------------

struct GridNode {
  Eigen::Index row = 0;
  Eigen::Index col = 0;
  double value = 0.0;
};

/// Places node values on an n x n frame, zeros elsewhere. Errors on
/// out-of-box nodes and duplicate cells.
Eigen::MatrixXd grid_embed(const std::vector<GridNode>& nodes, Eigen::Index n);

/// Cells of an n x n grid inside a circle of the given radius (in cells)
/// around the grid center.
std::vector<std::pair<Eigen::Index, Eigen::Index>> circular_mask_nodes(
    Eigen::Index n, double radius);

struct HexNode {
  int q = 0;  // axial coordinates along the two lattice directions
  int r = 0;
  double value = 0.0;
};

/// Axial coordinates of a hexagonal aperture with the given number of rings.
std::vector<HexNode> hex_rings(int rings);

/// Renumbers hex nodes onto a rectangular grid along the two lattice
/// directions (cell = (q - q_min, r - r_min)); the embedding box is the
/// axial bounding square. Distinct nodes map to distinct cells.
std::vector<GridNode> hex_to_grid(const std::vector<HexNode>& nodes);

// -- separability study ---------------------------------------------------------

/// n^2 x 2 coordinates of a regular lattice over the unit square,
/// column-major node order.
Eigen::MatrixXd rect_grid(Eigen::Index n);

/// n^2 uniform random points in the unit square.
Eigen::MatrixXd random_grid(Eigen::Index n, std::uint64_t seed);

/// Singular values of the reshuffled kernel map between two n^2-point grids:
/// builds M(i,j) = kernel(out_i, in_j), reshuffles it under the n-blocking
/// and returns the spectrum. Guards against n > 32.
Eigen::VectorXd separability_spectrum(
    const std::function<double(double, double, double, double)>& kernel,
    const Eigen::MatrixXd& input_grid, const Eigen::MatrixXd& output_grid);

}  // namespace quarks
