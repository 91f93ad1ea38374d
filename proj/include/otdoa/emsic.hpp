#pragma once

#include <array>
#include <vector>

#include "otdoa/correlate.hpp"
#include "otdoa/prs.hpp"
#include "otdoa/types.hpp"

namespace otdoa::emsic {

// BLUE combining weights for lag-m phase differences over 8 PRS symbols.
constexpr std::array<double, 4> kBlueWeights = {0.4762, 0.3095, 0.1667,
                                                0.0476};

struct CellReport {
  int cell_id = 0;
  bool detected = false;
  int coarse_toa = 0;          // low-rate lag
  double fo_estimate = 0.0;    // eps_hat
  cplx raw_channel = 0.0;      // h_hat
  cplx lmmse_channel = 0.0;    // h_tilde
  double noise_estimate = 0.0; // sigma_tilde^2
  std::vector<double> fo_per_lag;  // eps_tilde[n]
  cvec combined;               // FO-corrected combined profile (for stage 2)
  double gate_ratio = 0.0;     // peak / mean, diagnostics
};

struct SicState {
  cvec residual;                       // y with current subtractions removed
  std::vector<cvec> subtracted;        // per-cell regenerated components
  int iteration = 0;
};

// BLUE residual-FO estimate at one lag from the 8 per-symbol correlations.
// Positive-ramp convention: profiles proportional to
// exp(+j 2 pi eps M l(s) / N) yield +eps.
double blue_fo(const correlate::CorrelationSet& profiles,
               const std::vector<int>& symbol_indices, int n);

std::vector<double> blue_fo_all(const correlate::CorrelationSet& profiles,
                                const std::vector<int>& symbol_indices);

// FO-corrected coherent sum across the 8 PRS symbols.
cvec coherent_combine(const correlate::CorrelationSet& profiles,
                      const std::vector<int>& symbol_indices,
                      const std::vector<double>& fo_per_lag);

// Argmax of |combined| (smallest index on ties) and the FO estimate there.
struct PeakPick {
  int lag = 0;
  double fo = 0.0;
};
PeakPick strongest_path(const cvec& combined,
                        const std::vector<double>& fo_per_lag);

// Eq-style single-tap channel estimate from the residual (cell still
// present), noise estimate, and LMMSE shrinkage.
struct ChannelEstimate {
  cplx raw = 0.0;
  double noise = 0.0;
  cplx lmmse = 0.0;
};
ChannelEstimate estimate_channel(const cvec& residual,
                                 const prs::PrsPlan& plan, int coarse_toa,
                                 double fo);

// Regenerate the cell's PRS with (h_tilde, toa, fo) and subtract it from the
// residual; the component is stored for later add-back.
void subtract_cell(SicState& state, int cell_index, const prs::PrsPlan& plan,
                   cplx channel, int coarse_toa, double fo);

void add_back_cell(SicState& state, int cell_index);

struct Stage1Options {
  int iterations = 2;
  double eta1 = 0.8;
  double eta2 = 3.0;
  bool foc = true;        // false: eps forced to 0 everywhere (no-FOC ablation)
  int num_lags = 64;
};

std::vector<CellReport> run_stage1(const ComplexSignal& y,
                                   const std::vector<prs::PrsPlan>& plans,
                                   const Stage1Options& opts);

}  // namespace otdoa::emsic
