#pragma once

#include <array>
#include <vector>

#include "otdoa/prs.hpp"
#include "otdoa/types.hpp"

namespace otdoa::locate {

struct Xy {
  double x = 0.0;
  double y = 0.0;
};

struct PositionFix {
  Xy xy_m;
  int reference_cell = -1;
  std::vector<double> tdoas_s;  // aligned with the input cell list; 0 at ref
  double residual_norm = 0.0;
  int iterations_used = 0;
  bool localized = false;
};

// Per-cell ToA measurement feeding the solver.
struct ToaMeasurement {
  int cell_id = 0;
  bool detected = false;
  double toa_samples = 0.0;   // refined ToA, high-rate samples
  double strength = 0.0;      // |h_tilde|; picks the reference cell
};

// TDOAs vs the strongest detected cell, in seconds. localized=false result
// (not an error) when fewer than 3 cells are detected.
struct TdoaSet {
  std::vector<double> tdoas_s;
  std::vector<bool> detected;  // aligned; undetected rows hold tdoa 0.0
  int reference_index = -1;
  bool valid = false;
};
TdoaSet tdoas(const std::vector<ToaMeasurement>& reports, double rate_hz);

// Hyperbolic multilateration: damped Gauss-Newton on
// r_p = c*tdoa_p - (||x - s_p|| - ||x - s_ref||), centroid start, coarse
// grid-search fallback when it diverges. Every entry of tdoas_s is treated
// as a real measurement.
PositionFix multilaterate(const std::vector<double>& tdoas_s,
                          const std::vector<Xy>& sites, int reference_index,
                          const Xy* initial_guess = nullptr);

// Mask-aware front-end: drops undetected rows before solving, so their
// placeholder 0.0 TDOAs cannot pull the fix toward the reference cell.
// reference_cell in the result indexes the original (uncompacted) list.
PositionFix multilaterate(const TdoaSet& set, const std::vector<Xy>& sites,
                          const Xy* initial_guess = nullptr);

// ToA variance lower bound in (low-rate samples)^2 for the AWGN single-path
// model. The denominator uses (k^2 + (k+6)^2) over the occupied pairs; the
// printed (k^2 + (k^2+6)^2) variant is available behind the flag for
// comparison.
double crlb_toa(const prs::PrsPlan& plan, double noise_variance,
                bool printed_variant = false);

}  // namespace otdoa::locate
