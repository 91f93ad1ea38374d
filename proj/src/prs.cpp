#include "otdoa/prs.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace otdoa::prs {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kInvSqrt2 = 0.70710678118654752440;
}  // namespace

void PrsConfig::validate() const {
  if (pci < 0) throw std::invalid_argument("pci must be >= 0");
  if (fft_size < n_subcarriers)
    throw std::invalid_argument("fft_size smaller than subcarrier count");
  if ((fft_size & (fft_size - 1)) != 0)
    throw std::invalid_argument("fft_size must be a power of two");
  if (static_cast<int>(cp_lengths.size()) != kSymbolsPerSubframe)
    throw std::invalid_argument("need 14 cp lengths (normal CP)");
  if (static_cast<int>(prs_symbol_indices.size()) != kPrsSymbols)
    throw std::invalid_argument("exactly 8 OFDM symbols carry PRS");
  for (int s : {0, 1}) {
    if (slot_numbers[s] < 0 || slot_numbers[s] >= 20)
      throw std::invalid_argument("slot number out of range");
  }
}

std::uint32_t gold_cinit(int pci, int n_s, int ell, CpType cp_type) {
  if (n_s < 0 || n_s >= 20) throw std::invalid_argument("slot index");
  if (ell < 0 || ell >= 14) throw std::invalid_argument("symbol index");
  if (pci < 0) throw std::invalid_argument("pci");
  const std::uint32_t n_cp = (cp_type == CpType::kNormal) ? 1 : 0;
  return (1u << 10) * static_cast<std::uint32_t>(
             (7 * (n_s + 1) + ell + 1) * (2 * pci + 1)) +
         2u * static_cast<std::uint32_t>(pci) + n_cp;
}

std::vector<std::uint8_t> gold_sequence(int pci, int n_s, int ell,
                                        CpType cp_type, int length) {
  if (length < 1) throw std::invalid_argument("length must be >= 1");
  const std::uint32_t cinit = gold_cinit(pci, n_s, ell, cp_type);

  // x1(n+31) = x1(n+3) + x1(n); x2(n+31) = x2(n+3) + x2(n+2) + x2(n+1) + x2(n)
  std::uint32_t x1 = 1u;
  std::uint32_t x2 = cinit;
  auto step1 = [&]() {
    std::uint32_t bit = ((x1 >> 3) ^ x1) & 1u;
    x1 = (x1 >> 1) | (bit << 30);
    return x1;
  };
  auto step2 = [&]() {
    std::uint32_t bit = ((x2 >> 3) ^ (x2 >> 2) ^ (x2 >> 1) ^ x2) & 1u;
    x2 = (x2 >> 1) | (bit << 30);
    return x2;
  };
  // Fast-forward Nc = 1600
  for (int i = 0; i < 1600; ++i) {
    step1();
    step2();
  }
  std::vector<std::uint8_t> out(length);
  for (int i = 0; i < length; ++i) {
    out[i] = static_cast<std::uint8_t>((x1 ^ x2) & 1u);
    step1();
    step2();
  }
  return out;
}

cplx prs_qpsk(const std::vector<std::uint8_t>& bits, int m) {
  if (m < 0 || static_cast<int>(bits.size()) < 2 * m + 2)
    throw std::invalid_argument("bit index out of range");
  return {kInvSqrt2 * (1.0 - 2.0 * bits[2 * m]),
          kInvSqrt2 * (1.0 - 2.0 * bits[2 * m + 1])};
}

PrsPlan build_plan(const PrsConfig& config) {
  config.validate();
  PrsPlan plan;
  plan.config = config;
  const int shift = config.pci % 6;
  for (int s = 0; s < kPrsSymbols; ++s) {
    PrsSymbol sym;
    sym.subframe_symbol = config.prs_symbol_indices[s];
    sym.slot = config.slot_numbers[sym.subframe_symbol / 7];
    sym.slot_symbol = sym.subframe_symbol % 7;
    // Diamond mapping pattern: offset (6 - l + shift) mod 6 within the PRB,
    // the PRB spanning bins -6..5 (DC at bin 0).
    const int offset = ((6 - sym.slot_symbol + shift) % 6 + 6) % 6;
    sym.k_low = offset - 6;
    auto bits = gold_sequence(config.pci, sym.slot, sym.slot_symbol,
                              config.cp_type, 4);
    sym.value_low = prs_qpsk(bits, 0);
    sym.value_high = prs_qpsk(bits, 1);
    plan.symbols.push_back(sym);
  }
  auto waves = modulate(plan);
  plan.time_waveforms.clear();
  for (auto& w : waves) plan.time_waveforms.push_back(std::move(w.samples));
  return plan;
}

cplx waveform_at(const PrsPlan& plan, int s, double t) {
  const auto& sym = plan.symbols[s];
  const int n = plan.config.fft_size;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double cp = static_cast<double>(plan.config.cp_lengths[0]);
  const double u = t - cp;
  const double a1 = 2.0 * kPi * u * sym.k_low / n;
  const double a2 = 2.0 * kPi * u * (sym.k_low + 6) / n;
  return scale * (sym.value_low * cplx{std::cos(a1), std::sin(a1)} +
                  sym.value_high * cplx{std::cos(a2), std::sin(a2)});
}

std::vector<ComplexSignal> modulate(const PrsPlan& plan) {
  std::vector<ComplexSignal> out;
  const int m_len = plan.config.fft_size + plan.config.cp_lengths[0];
  for (int s = 0; s < static_cast<int>(plan.symbols.size()); ++s) {
    ComplexSignal sig;
    sig.rate_hz = kLowRateHz;
    sig.samples.resize(m_len);
    for (int i = 0; i < m_len; ++i)
      sig.samples[i] = waveform_at(plan, s, static_cast<double>(i));
    out.push_back(std::move(sig));
  }
  return out;
}

AcfProfile prs_acf(const PrsPlan& plan, int max_lag, int v) {
  if (max_lag < 1 || v < 1) throw std::invalid_argument("prs_acf arguments");
  AcfProfile acf;
  acf.max_lag = max_lag;
  acf.v = v;
  const int m_len = plan.symbol_len();
  const int half = max_lag * v;
  acf.values.resize(2 * half + 1);
  // C(u) = sum_s sum_m s_s(m - u) conj(s_s[m]) with the band-limited closed
  // form; normalized so C(0) = 1.
  auto corr_at = [&](double u) {
    cplx acc = 0.0;
    for (int s = 0; s < kPrsSymbols; ++s) {
      for (int m = 0; m < m_len; ++m) {
        acc += waveform_at(plan, s, m - u) *
               std::conj(plan.time_waveforms[s][m]);
      }
    }
    return acc;
  };
  const cplx c0 = corr_at(0.0);
  for (int k = -half; k <= half; ++k)
    acf.values[k + half] = corr_at(static_cast<double>(k) / v) / c0;
  return acf;
}

std::string dump_plan(const PrsPlan& plan) {
  std::ostringstream os;
  os << "{\"pci\":" << plan.config.pci << ",\"fft_size\":"
     << plan.config.fft_size << ",\"symbols\":[";
  for (size_t i = 0; i < plan.symbols.size(); ++i) {
    const auto& s = plan.symbols[i];
    if (i) os << ",";
    os << "{\"l\":" << s.subframe_symbol << ",\"k_low\":" << s.k_low
       << ",\"re0\":" << s.value_low.real() << ",\"im0\":" << s.value_low.imag()
       << ",\"re1\":" << s.value_high.real()
       << ",\"im1\":" << s.value_high.imag() << "}";
  }
  os << "]}";
  return os.str();
}

}  // namespace otdoa::prs
