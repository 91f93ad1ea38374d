#include "otdoa/airlink.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "otdoa/rng.hpp"

namespace otdoa::airlink {

namespace {
constexpr double kPi = std::numbers::pi;

cplx phase_ramp(double eps, double t) {
  const double a = 2.0 * kPi * eps * t / kFftSize;
  return {std::cos(a), std::sin(a)};
}
}  // namespace

double CellLink::amplitude() const { return std::pow(10.0, tx_power_db / 20.0); }

int CellLink::delay_samples(int i) const {
  // n = floor(tau * F~s); delay_ts is in Ts = 1/(16 F~s) units.
  return static_cast<int>(std::floor(taps[i].delay_ts / kUpsampleFactor));
}

double signal_power() { return 2.0 / kFftSize; }

void add_cell_symbol(const CellLink& link, int s, cvec& frame) {
  const int m_len = link.plan.symbol_len();
  const int base = link.plan.symbols[s].subframe_symbol * m_len;
  const double amp = link.amplitude();
  const int frame_len = static_cast<int>(frame.size());
  for (const auto& tap : link.taps) {
    const double d = tap.delay_ts / kUpsampleFactor;  // low-rate samples
    const int first = static_cast<int>(std::ceil(d - 1e-12));
    for (int n = first; n < first + m_len; ++n) {
      const double u = n - d;
      if (u >= m_len) break;
      const int idx = base + n;
      if (idx < 0 || idx >= frame_len) continue;
      frame[idx] += amp * tap.gain * phase_ramp(link.residual_fo, idx) *
                    prs::waveform_at(link.plan, s, u);
    }
  }
}

void add_cell_symbol_integer(const CellLink& link, int s, cvec& frame) {
  const int m_len = link.plan.symbol_len();
  const int base = link.plan.symbols[s].subframe_symbol * m_len;
  const double amp = link.amplitude();
  const int frame_len = static_cast<int>(frame.size());
  for (size_t i = 0; i < link.taps.size(); ++i) {
    const int d = link.delay_samples(static_cast<int>(i));
    for (int m = 0; m < m_len; ++m) {
      const int idx = base + d + m;
      if (idx < 0 || idx >= frame_len) continue;
      frame[idx] += amp * link.taps[i].gain *
                    phase_ramp(link.residual_fo, idx) *
                    link.plan.time_waveforms[s][m];
    }
  }
}

ComplexSignal apply_channel(const CellLink& link, int symbol_ordinal,
                            int frame_len, bool integer_delays) {
  const int m_len = link.plan.symbol_len();
  const int max_extra = frame_len - kSymbolsPerSubframe * m_len;
  for (size_t i = 0; i < link.taps.size(); ++i) {
    if (link.delay_samples(static_cast<int>(i)) > max_extra)
      throw std::invalid_argument("tap delay exceeds search range");
  }
  ComplexSignal out;
  out.rate_hz = kLowRateHz;
  out.samples.assign(frame_len, cplx{0.0, 0.0});
  if (integer_delays)
    add_cell_symbol_integer(link, symbol_ordinal, out.samples);
  else
    add_cell_symbol(link, symbol_ordinal, out.samples);
  return out;
}

ComplexSignal superpose(const std::vector<CellLink>& links,
                        double noise_variance, std::uint64_t seed,
                        int frame_len, bool integer_delays) {
  ComplexSignal out;
  out.rate_hz = kLowRateHz;
  out.samples.assign(frame_len, cplx{0.0, 0.0});
  for (const auto& link : links) {
    for (int s = 0; s < static_cast<int>(link.plan.symbols.size()); ++s) {
      if (integer_delays)
        add_cell_symbol_integer(link, s, out.samples);
      else
        add_cell_symbol(link, s, out.samples);
    }
  }
  if (noise_variance > 0.0) {
    Rng rng(seed);
    for (auto& x : out.samples) x += rng.cgauss(noise_variance);
  }
  return out;
}

FadingRealization etu_taps(double /*doppler_hz*/, std::uint64_t seed,
                           double rate_hz) {
  static const double kDelaysNs[] = {0, 50, 120, 200, 230, 500, 1600, 2300, 5000};
  static const double kPowersDb[] = {-1, -1, -1, 0, 0, 0, -3, -5, -7};
  constexpr int kNumTaps = 9;

  double total = 0.0;
  double p[kNumTaps];
  for (int i = 0; i < kNumTaps; ++i) {
    p[i] = std::pow(10.0, kPowersDb[i] / 10.0);
    total += p[i];
  }
  Rng rng(seed);
  FadingRealization out;
  for (int i = 0; i < kNumTaps; ++i) {
    const int bin = static_cast<int>(std::floor(kDelaysNs[i] * 1e-9 * rate_hz));
    const cplx g = rng.cgauss(p[i] / total);
    if (!out.delays.empty() && out.delays.back() == bin) {
      out.gains.back() += g;  // unresolvable taps merge
    } else {
      out.delays.push_back(bin);
      out.gains.push_back(g);
    }
  }
  return out;
}

void dump_iq(const ComplexSignal& sig, const std::vector<int>& pcis,
             std::uint64_t seed, const std::string& path) {
  nlohmann::json header;
  header["rate_hz"] = sig.rate_hz;
  header["length"] = sig.samples.size();
  header["seed"] = seed;
  header["pcis"] = pcis;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << header.dump() << "\n";
  for (const auto& x : sig.samples) {
    float re = static_cast<float>(x.real());
    float im = static_cast<float>(x.imag());
    os.write(reinterpret_cast<const char*>(&re), sizeof(float));
    os.write(reinterpret_cast<const char*>(&im), sizeof(float));
  }
}

ComplexSignal load_iq(const std::string& path, std::vector<int>* pcis) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(is, line);
  auto header = nlohmann::json::parse(line);
  ComplexSignal sig;
  sig.rate_hz = header["rate_hz"].get<double>();
  const size_t n = header["length"].get<size_t>();
  if (pcis) *pcis = header["pcis"].get<std::vector<int>>();
  sig.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    float re = 0.0f, im = 0.0f;
    is.read(reinterpret_cast<char*>(&re), sizeof(float));
    is.read(reinterpret_cast<char*>(&im), sizeof(float));
    sig.samples[i] = {re, im};
  }
  if (!is) throw std::runtime_error("truncated IQ file " + path);
  return sig;
}

}  // namespace otdoa::airlink
