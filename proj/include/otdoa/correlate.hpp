#pragma once

#include <vector>

#include "otdoa/prs.hpp"
#include "otdoa/types.hpp"

namespace otdoa::correlate {

// Per-cell correlation lag profiles: 8 per-symbol profiles over the delay
// search range, plus the combined profile once FOC has been applied.
struct CorrelationSet {
  int cell_id = 0;
  std::vector<cvec> per_symbol;  // 8 profiles, each num_lags long
  cvec combined;                 // empty until combining
  int num_lags() const {
    return per_symbol.empty() ? 0 : static_cast<int>(per_symbol[0].size());
  }
};

// Sliding cross-correlation of the s-th PRS symbol span of y against
// s_{p,l(s)}: R[n] = sum_m y[l*M + n + m] conj(s[m]), n = 0..num_lags-1.
cvec correlate_symbol(const ComplexSignal& y, const prs::PrsPlan& plan, int s,
                      int num_lags);

CorrelationSet correlate_all(const ComplexSignal& y, const prs::PrsPlan& plan,
                             int num_lags);

// Presence decision, applied once per cell up front by every detector
// variant: peak of the non-coherent magnitude sum across symbols against
// eta2 times the mean magnitude of the coherent sum. On noise alone the
// peak statistic sits near 3.6x the coherent mean, so eta2 = 3 is a
// permissive gate; false alarms are filtered downstream by the ToA
// correctness window (sweeps) or the position-error cut (deployment).
bool presence_gate(const CorrelationSet& profiles, double eta2);

// Smallest lag whose |combined| / max |combined| exceeds eta1.
int threshold_toa(const cvec& combined, double eta1);

// Plain (no FOC) coherent sum of the 8 per-symbol profiles.
cvec plain_sum(const CorrelationSet& profiles);

}  // namespace otdoa::correlate
