#include "otdoa/emsic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace otdoa::emsic {

namespace {
constexpr double kPi = std::numbers::pi;

cplx unit_phase(double angle) { return {std::cos(angle), std::sin(angle)}; }
}  // namespace

double blue_fo(const correlate::CorrelationSet& profiles,
               const std::vector<int>& symbol_indices, int n) {
  const int m_len = kSymbolLen;
  double eps = 0.0;
  for (int m = 1; m <= 4; ++m) {
    double phi = 0.0;
    for (int s = 0; s + m < kPrsSymbols; ++s) {
      // Product ordered so a positive-frequency ramp across symbols gives a
      // positive angle; the printed conjugation order flips the sign and
      // breaks the downstream combining.
      const cplx prod =
          profiles.per_symbol[s + m][n] * std::conj(profiles.per_symbol[s][n]);
      const double ang = (std::abs(prod) > 0.0) ? std::arg(prod) : 0.0;
      phi += ang / (symbol_indices[s + m] - symbol_indices[s]);
    }
    phi *= kFftSize / (2.0 * kPi * m_len * (kPrsSymbols - m));
    eps += kBlueWeights[m - 1] * phi;
  }
  return eps;
}

std::vector<double> blue_fo_all(const correlate::CorrelationSet& profiles,
                                const std::vector<int>& symbol_indices) {
  std::vector<double> out(profiles.num_lags());
  for (int n = 0; n < profiles.num_lags(); ++n)
    out[n] = blue_fo(profiles, symbol_indices, n);
  return out;
}

cvec coherent_combine(const correlate::CorrelationSet& profiles,
                      const std::vector<int>& symbol_indices,
                      const std::vector<double>& fo_per_lag) {
  const int lags = profiles.num_lags();
  cvec out(lags);
  for (int n = 0; n < lags; ++n) {
    cplx acc = profiles.per_symbol[0][n];
    for (int s = 1; s < kPrsSymbols; ++s) {
      const double ang = -2.0 * kPi * fo_per_lag[n] * kSymbolLen *
                         (symbol_indices[s] - symbol_indices[0]) / kFftSize;
      acc += unit_phase(ang) * profiles.per_symbol[s][n];
    }
    out[n] = acc;
  }
  return out;
}

PeakPick strongest_path(const cvec& combined,
                        const std::vector<double>& fo_per_lag) {
  PeakPick pick;
  double best = -1.0;
  for (int n = 0; n < static_cast<int>(combined.size()); ++n) {
    const double mag = std::abs(combined[n]);
    if (mag > best) {
      best = mag;
      pick.lag = n;
    }
  }
  pick.fo = fo_per_lag.empty() ? 0.0 : fo_per_lag[pick.lag];
  return pick;
}

ChannelEstimate estimate_channel(const cvec& residual,
                                 const prs::PrsPlan& plan, int coarse_toa,
                                 double fo) {
  const int m_len = plan.symbol_len();
  ChannelEstimate est;

  // RMS of the symbol waveform, for the divide-by-zero guard.
  double rms = 0.0;
  for (const auto& x : plan.time_waveforms[0]) rms += std::norm(x);
  rms = std::sqrt(rms / m_len);
  const double floor_mag = 1e-6 * rms;

  cplx acc = 0.0;
  int count = 0;
  const int total = static_cast<int>(residual.size());
  for (int s = 0; s < kPrsSymbols; ++s) {
    const int base = plan.symbols[s].subframe_symbol * m_len;
    for (int k = coarse_toa; k < coarse_toa + m_len; ++k) {
      const int idx = base + k;
      if (idx < 0 || idx >= total) continue;
      const cplx sv = plan.time_waveforms[s][k - coarse_toa];
      if (std::abs(sv) < floor_mag) continue;  // isolated waveform zeros
      const double ang = -2.0 * kPi * fo * idx / kFftSize;
      acc += residual[idx] / sv * unit_phase(ang);
      ++count;
    }
  }
  est.raw = (count > 0) ? acc / static_cast<double>(count) : cplx{0.0, 0.0};

  double noise = 0.0;
  int ncount = 0;
  for (int s = 0; s < kPrsSymbols; ++s) {
    const int base = plan.symbols[s].subframe_symbol * m_len;
    for (int k = coarse_toa; k < coarse_toa + m_len; ++k) {
      const int idx = base + k;
      if (idx < 0 || idx >= total) continue;
      const cplx sv = plan.time_waveforms[s][k - coarse_toa];
      const double ang = 2.0 * kPi * fo * idx / kFftSize;
      noise += std::norm(residual[idx] - est.raw * sv * unit_phase(ang));
      ++ncount;
    }
  }
  est.noise = (ncount > 0) ? noise / ncount : 0.0;

  const double h2 = std::norm(est.raw);
  est.lmmse = (h2 > 0.0) ? est.raw / (1.0 + est.noise / h2) : cplx{0.0, 0.0};
  return est;
}

void subtract_cell(SicState& state, int cell_index, const prs::PrsPlan& plan,
                   cplx channel, int coarse_toa, double fo) {
  const int m_len = plan.symbol_len();
  const int total = static_cast<int>(state.residual.size());
  cvec& comp = state.subtracted[cell_index];
  if (comp.empty()) comp.assign(total, cplx{0.0, 0.0});
  for (int s = 0; s < kPrsSymbols; ++s) {
    const int base = plan.symbols[s].subframe_symbol * m_len;
    for (int k = coarse_toa; k < coarse_toa + m_len; ++k) {
      const int idx = base + k;
      if (idx < 0 || idx >= total) continue;
      // Regeneration uses the synthesis phase convention; the opposite sign
      // would double the rotation instead of cancelling it.
      const double ang = 2.0 * kPi * fo * idx / kFftSize;
      const cplx v =
          channel * plan.time_waveforms[s][k - coarse_toa] * unit_phase(ang);
      state.residual[idx] -= v;
      comp[idx] += v;
    }
  }
}

void add_back_cell(SicState& state, int cell_index) {
  cvec& comp = state.subtracted[cell_index];
  if (comp.empty()) return;
  for (size_t i = 0; i < comp.size(); ++i) {
    state.residual[i] += comp[i];
    comp[i] = 0.0;
  }
}

std::vector<CellReport> run_stage1(const ComplexSignal& y,
                                   const std::vector<prs::PrsPlan>& plans,
                                   const Stage1Options& opts) {
  const int num_cells = static_cast<int>(plans.size());
  SicState state;
  state.residual = y.samples;
  state.subtracted.resize(num_cells);

  std::vector<CellReport> reports(num_cells);
  for (int p = 0; p < num_cells; ++p)
    reports[p].cell_id = plans[p].config.pci;

  // Up-front, per-cell presence decision on the raw input, shared by every
  // variant so the false-alarm behavior is common; a cell that fails is
  // excluded from processing and subtraction entirely. The same pass sets
  // the initial processing order (strongest non-coherent peak first).
  std::vector<double> order_metric(num_cells, 0.0);
  std::vector<char> gated_in(num_cells, 0);
  {
    ComplexSignal wrapped{state.residual, y.rate_hz, y.origin};
    for (int p = 0; p < num_cells; ++p) {
      auto set = correlate::correlate_all(wrapped, plans[p], opts.num_lags);
      double nc_peak = 0.0, coh_mean = 0.0;
      for (int n = 0; n < opts.num_lags; ++n) {
        double mag = 0.0;
        cplx coh = 0.0;
        for (const auto& prof : set.per_symbol) {
          mag += std::abs(prof[n]);
          coh += prof[n];
        }
        nc_peak = std::max(nc_peak, mag);
        coh_mean += std::abs(coh);
      }
      order_metric[p] = nc_peak;
      coh_mean /= opts.num_lags;
      reports[p].gate_ratio = (coh_mean > 0.0) ? nc_peak / coh_mean : 0.0;
      gated_in[p] = correlate::presence_gate(set, opts.eta2) ? 1 : 0;
      reports[p].detected = gated_in[p] != 0;
    }
  }
  std::vector<int> order(num_cells);
  std::iota(order.begin(), order.end(), 0);

  for (int it = 0; it < opts.iterations; ++it) {
    state.iteration = it;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return order_metric[a] > order_metric[b];
    });
    for (int p : order) {
      if (!gated_in[p]) continue;
      add_back_cell(state, p);
      ComplexSignal wrapped{state.residual, y.rate_hz, y.origin};
      auto set = correlate::correlate_all(wrapped, plans[p], opts.num_lags);

      CellReport& rep = reports[p];
      if (opts.foc) {
        // Single FO per cell, estimated at the peak of the non-coherent
        // magnitude sum (robust to the offset itself). Derotating every lag
        // by one common estimate restores the coherent peak under FO while
        // leaving the off-peak noise statistics untouched; a per-lag FO
        // adaptation instead coheres off-peak mass and pushes clean-signal
        // peak-to-average ratios below eta2 = 3.
        int nc_peak = 0;
        double nc_best = -1.0;
        for (int n = 0; n < opts.num_lags; ++n) {
          double mag = 0.0;
          for (const auto& prof : set.per_symbol) mag += std::abs(prof[n]);
          if (mag > nc_best) {
            nc_best = mag;
            nc_peak = n;
          }
        }
        const double fo =
            blue_fo(set, plans[p].config.prs_symbol_indices, nc_peak);
        rep.fo_per_lag.assign(opts.num_lags, fo);
      } else {
        rep.fo_per_lag.assign(opts.num_lags, 0.0);
      }
      rep.combined = coherent_combine(set, plans[p].config.prs_symbol_indices,
                                      rep.fo_per_lag);
      const auto pick = strongest_path(rep.combined, rep.fo_per_lag);
      rep.coarse_toa = pick.lag;
      rep.fo_estimate = pick.fo;
      auto est = estimate_channel(state.residual, plans[p], pick.lag, pick.fo);
      rep.raw_channel = est.raw;
      rep.noise_estimate = est.noise;
      rep.lmmse_channel = est.lmmse;
      subtract_cell(state, p, plans[p], est.lmmse, pick.lag, pick.fo);
      order_metric[p] = std::abs(rep.combined[pick.lag]);
    }
  }
  return reports;
}

}  // namespace otdoa::emsic
