#include "otdoa/correlate.hpp"

#include <cmath>
#include <stdexcept>

namespace otdoa::correlate {

cvec correlate_symbol(const ComplexSignal& y, const prs::PrsPlan& plan, int s,
                      int num_lags) {
  const int m_len = plan.symbol_len();
  const int base = plan.symbols[s].subframe_symbol * m_len;
  if (base + num_lags - 1 + m_len > static_cast<int>(y.samples.size()))
    throw std::invalid_argument("signal too short for lag range");
  cvec profile(num_lags);
  const auto& tmpl = plan.time_waveforms[s];
  for (int n = 0; n < num_lags; ++n) {
    cplx acc = 0.0;
    const cplx* yp = y.samples.data() + base + n;
    for (int m = 0; m < m_len; ++m) acc += yp[m] * std::conj(tmpl[m]);
    profile[n] = acc;
  }
  return profile;
}

CorrelationSet correlate_all(const ComplexSignal& y, const prs::PrsPlan& plan,
                             int num_lags) {
  CorrelationSet set;
  set.cell_id = plan.config.pci;
  for (int s = 0; s < static_cast<int>(plan.symbols.size()); ++s)
    set.per_symbol.push_back(correlate_symbol(y, plan, s, num_lags));
  return set;
}

bool presence_gate(const CorrelationSet& profiles, double eta2) {
  const int lags = profiles.num_lags();
  if (lags == 0) return false;
  double nc_peak = 0.0;
  double coh_mean = 0.0;
  for (int n = 0; n < lags; ++n) {
    double nc = 0.0;
    cplx coh = 0.0;
    for (const auto& prof : profiles.per_symbol) {
      nc += std::abs(prof[n]);
      coh += prof[n];
    }
    nc_peak = std::max(nc_peak, nc);
    coh_mean += std::abs(coh);
  }
  coh_mean /= lags;
  return nc_peak > eta2 * coh_mean;
}

int threshold_toa(const cvec& combined, double eta1) {
  double peak = 0.0;
  for (const auto& x : combined) peak = std::max(peak, std::abs(x));
  if (peak <= 0.0) return 0;
  for (int n = 0; n < static_cast<int>(combined.size()); ++n) {
    if (std::abs(combined[n]) / peak > eta1) return n;
  }
  // eta1 >= 1: the peak itself qualifies at equality tolerance
  for (int n = 0; n < static_cast<int>(combined.size()); ++n) {
    if (std::abs(combined[n]) >= peak) return n;
  }
  return 0;
}

cvec plain_sum(const CorrelationSet& profiles) {
  cvec out(profiles.num_lags(), cplx{0.0, 0.0});
  for (const auto& prof : profiles.per_symbol)
    for (size_t n = 0; n < out.size(); ++n) out[n] += prof[n];
  return out;
}

}  // namespace otdoa::correlate
