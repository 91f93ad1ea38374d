#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otdoa/types.hpp"

namespace otdoa::prs {

enum class CpType { kNormal };

struct PrsConfig {
  int pci = 0;
  int n_subcarriers = kSubcarriersPerPrb;
  int fft_size = kFftSize;
  std::vector<int> cp_lengths =
      std::vector<int>(kSymbolsPerSubframe, kCpLen);  // uniform M = N + cp
  int slot_numbers[2] = {0, 1};  // the two slots n_s of the subframe
  CpType cp_type = CpType::kNormal;
  std::vector<int> prs_symbol_indices = {3, 5, 6, 8, 9, 10, 12, 13};

  void validate() const;  // throws std::invalid_argument
};

// One mapped PRS OFDM symbol: two occupied subcarriers spaced 6 apart.
// k_low is the lower frequency index in the "DC at bin 0, PRB on bins
// -6..5 mod N" convention, so k_low in [-6, 0) and k_low + 6 in [0, 6).
struct PrsSymbol {
  int subframe_symbol = 0;  // subframe-wide OFDM symbol index
  int slot = 0;             // n_s
  int slot_symbol = 0;      // symbol index within the slot
  int k_low = 0;
  cplx value_low;   // S[k_low]
  cplx value_high;  // S[k_low + 6]
};

struct PrsPlan {
  PrsConfig config;
  std::vector<PrsSymbol> symbols;             // 8 entries
  std::vector<cvec> time_waveforms;           // per PRS symbol, length M
  int symbol_len() const { return config.fft_size + config.cp_lengths[0]; }
};

// PRS initialization value for the length-31 Gold generator.
std::uint32_t gold_cinit(int pci, int n_s, int ell, CpType cp_type);

// First `length` bits of the standard dual-LFSR Gold sequence with the 1600
// step fast-forward discard.
std::vector<std::uint8_t> gold_sequence(int pci, int n_s, int ell,
                                        CpType cp_type, int length);

// Unit-modulus QPSK value from bit pair (c[2m], c[2m+1]).
cplx prs_qpsk(const std::vector<std::uint8_t>& bits, int m);

PrsPlan build_plan(const PrsConfig& config);

// Per-symbol time-domain waveforms s_{p,l}[n], length M including CP;
// CP is the cyclic extension so the two-tone closed form holds for all n.
std::vector<ComplexSignal> modulate(const PrsPlan& plan);

// Closed-form waveform of PRS symbol ordinal s evaluated at fractional
// sample time t (t = 0 is the start of the CP).
cplx waveform_at(const PrsPlan& plan, int s, double t);

// Normalized ACF of the combined 8-symbol PRS correlation shape, on the
// upsampled grid: entry [k + max_lag*v] is R_0 at lag k/v low-rate samples,
// k in [-max_lag*v, max_lag*v]. R_0[0] = 1.
struct AcfProfile {
  cvec values;
  int max_lag = 0;
  int v = 1;
  cplx at(int k) const {
    if (k < -max_lag * v || k > max_lag * v) return {0.0, 0.0};
    return values[k + max_lag * v];
  }
};
AcfProfile prs_acf(const PrsPlan& plan, int max_lag, int v);

// Structured text dump (JSON) of the mapped plan for golden-file tests.
std::string dump_plan(const PrsPlan& plan);

}  // namespace otdoa::prs
