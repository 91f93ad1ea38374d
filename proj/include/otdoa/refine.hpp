#pragma once

#include <vector>

#include "otdoa/prs.hpp"
#include "otdoa/types.hpp"

namespace otdoa::refine {

// Sinc-interpolated correlation window around a coarse ToA. Entry m samples
// the combined profile at low-rate position center - W + m/V, so integer
// grid points m = V*(W + n0) reproduce R[center + n0] exactly.
struct UpsampledWindow {
  cvec values;     // length V*(2W+1)
  int v = kUpsampleFactor;
  int w = 20;
  int center = 0;  // coarse ToA (low-rate lag)
  int length() const { return v * (2 * w + 1); }
};

UpsampledWindow upsample(const cvec& combined, int center, int w, int v);

struct MpdResult {
  int refined_toa = 0;          // absolute high-rate lag, (center-W)*V + m*
  std::vector<int> path_positions;  // window-local high-rate positions
  bool refinement_failed = false;   // no path passed the PAR gate
};

// Iterative multipath detection: peak-pick, PAR gate against the window
// mean, ACF subtraction, repeat; first arrival = min detected position.
// When no path passes the gate, falls back to the interpolated-window peak
// (flagged refinement_failed).
MpdResult mpd(const UpsampledWindow& window, const prs::AcfProfile& acf,
              double gamma, int max_paths = 8);

}  // namespace otdoa::refine
