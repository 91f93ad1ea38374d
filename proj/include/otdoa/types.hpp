#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace otdoa {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

// System numerology (one PRB NB-IoT, normal CP).
constexpr int kFftSize = 128;            // N
constexpr int kCpLen = 9;                // CP samples at 1.92 MHz
constexpr int kSymbolLen = kFftSize + kCpLen;  // M = 137
constexpr int kSymbolsPerSubframe = 14;  // N_sym
constexpr int kPrsSymbols = 8;           // N_PRS
constexpr int kSubcarriersPerPrb = 12;
constexpr int kUpsampleFactor = 16;      // V
constexpr double kLowRateHz = 1.92e6;    // F~s
constexpr double kHighRateHz = 30.72e6;  // Fs, Ts = 1/Fs
constexpr double kSpeedOfLight = 299792458.0;

// Subframe-wide OFDM symbol indices carrying PRS (normal CP, port 6):
// slot 0 symbols {3,5,6}, slot 1 symbols {1,2,3,5,6} offset by 7.
constexpr int kPrsSymbolIndices[kPrsSymbols] = {3, 5, 6, 8, 9, 10, 12, 13};

// A finite block of complex baseband samples at a known rate.
struct ComplexSignal {
  cvec samples;
  double rate_hz = kLowRateHz;
  std::int64_t origin = 0;  // sample index of time zero
};

}  // namespace otdoa
