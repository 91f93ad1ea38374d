#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otdoa/prs.hpp"
#include "otdoa/types.hpp"

namespace otdoa::airlink {

struct Tap {
  double delay_ts = 0.0;  // absolute ToA in Ts units (1/30.72 MHz); can be
                          // fractional for the high-rate synthesis path
  cplx gain = 1.0;
};

struct CellLink {
  prs::PrsPlan plan;
  std::vector<Tap> taps;       // ordered by nondecreasing delay
  double residual_fo = 0.0;    // normalized by 15 kHz subcarrier spacing
  double tx_power_db = 0.0;    // linear amplitude scale = 10^(db/20)

  double amplitude() const;
  // Integer sample delay at the low rate for tap i: floor(tau * F~s).
  int delay_samples(int i) const;
};

// Average per-sample power of the PRS symbol waveform (sigma_s^2 = 2/N);
// SNR = sigma_s^2 / sigma^2.
double signal_power();

// Reference (fractional-delay) channel for one cell and one PRS symbol
// ordinal s: each tap's waveform delayed by its Ts-resolution delay,
// scaled, and phase-ramped by exp(j 2 pi eps t / N) on the absolute
// low-rate time index. Equivalent to synthesis at 30.72 MHz followed by
// decimation by 16, since the waveform is band-limited by construction.
// Output length = frame_len low-rate samples.
void add_cell_symbol(const CellLink& link, int s, cvec& frame);

// Integer-delay fast path per the low-rate model: delays floor(tau * F~s),
// symbol waveform shifted whole samples. Used by unit tests.
void add_cell_symbol_integer(const CellLink& link, int s, cvec& frame);

ComplexSignal apply_channel(const CellLink& link, int symbol_ordinal,
                            int frame_len, bool integer_delays = false);

// Superimposed received subframe for all cells plus AWGN of variance
// sigma^2 per sample. frame_len = 14*M + search range.
ComplexSignal superpose(const std::vector<CellLink>& links,
                        double noise_variance, std::uint64_t seed,
                        int frame_len, bool integer_delays = false);

// One block-fading ETU realization: Rayleigh taps on the standard ETU
// power-delay profile, quantized to the given rate with same-bin taps
// merged by complex addition. Delays returned in samples at rate_hz.
struct FadingRealization {
  std::vector<int> delays;  // samples at rate_hz, strictly increasing
  cvec gains;
};
FadingRealization etu_taps(double doppler_hz, std::uint64_t seed,
                           double rate_hz);

// IQ capture: JSON header line then interleaved little-endian float32.
void dump_iq(const ComplexSignal& sig, const std::vector<int>& pcis,
             std::uint64_t seed, const std::string& path);
ComplexSignal load_iq(const std::string& path, std::vector<int>* pcis);

}  // namespace otdoa::airlink
