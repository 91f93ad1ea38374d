#include "otdoa/scenario.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "otdoa/rng.hpp"

namespace otdoa::scenario {

namespace {
constexpr double kPi = std::numbers::pi;
}

Deployment default_deployment() {
  Deployment dep;
  const double r = dep.inter_site_distance_m;
  for (int i = 0; i < 6; ++i) {
    const double a = kPi / 3.0 * i;
    dep.sites.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return dep;
}

double path_loss_db(double d_km) {
  if (d_km <= 0.0) throw std::invalid_argument("distance must be positive");
  return 120.9 + 37.6 * std::log10(d_km);
}

std::vector<double> shadowing(std::uint64_t seed, int n_sites, int n_sectors) {
  if (n_sites < 1 || n_sectors < 1)
    throw std::invalid_argument("shadowing counts");
  Rng rng(seed);
  const double sigma = 8.0;
  // corr 0.5 across sites: sqrt(0.5)*common + sqrt(0.5)*per-site;
  // corr 1.0 within a site: all sectors share the site value.
  const double common = rng.gauss();
  std::vector<double> out;
  out.reserve(static_cast<size_t>(n_sites) * n_sectors);
  for (int i = 0; i < n_sites; ++i) {
    const double site = rng.gauss();
    const double value = sigma * std::sqrt(0.5) * (common + site);
    for (int j = 0; j < n_sectors; ++j) out.push_back(value);
  }
  return out;
}

static std::vector<double> rx_power_dbm(const Deployment& dep,
                                        const locate::Xy& xy,
                                        const std::vector<double>& shadow) {
  std::vector<double> out(dep.num_cells());
  for (int c = 0; c < dep.num_cells(); ++c) {
    const auto& site = dep.sites[dep.site_of(c)];
    const double d_km =
        std::max(std::hypot(xy.x - site.x, xy.y - site.y), 10.0) / 1000.0;
    out[c] = dep.tx_power_dbm - path_loss_db(d_km) - shadow[c];
  }
  return out;
}

std::vector<Device> drop_devices(const Deployment& dep, int n,
                                 std::uint64_t seed, bool geometric) {
  if (n < 1) throw std::invalid_argument("device count");
  const int target_site = dep.site_of(dep.serving_pci);
  double span = 0.0;
  for (const auto& s : dep.sites)
    span = std::max({span, std::abs(s.x), std::abs(s.y)});
  span += dep.inter_site_distance_m;

  std::vector<Device> out;
  Rng rng(mix_seed(seed, 0xd201));
  int attempts = 0;
  while (static_cast<int>(out.size()) < n) {
    if (++attempts > 200000)
      throw std::runtime_error("device drop rejection did not terminate");
    Device dev;
    dev.xy = {rng.uniform(-span, span), rng.uniform(-span, span)};
    dev.shadow_db = shadowing(rng.next_u64(), static_cast<int>(dep.sites.size()),
                              dep.sectors_per_site);
    int best_site = -1;
    if (geometric) {
      double best_d = 1e18;
      for (size_t i = 0; i < dep.sites.size(); ++i) {
        const double d = std::hypot(dev.xy.x - dep.sites[i].x,
                                    dev.xy.y - dep.sites[i].y);
        if (d < best_d) {
          best_d = d;
          best_site = static_cast<int>(i);
        }
      }
    } else {
      auto rx = rx_power_dbm(dep, dev.xy, dev.shadow_db);
      double best_p = -1e18;
      for (int c = 0; c < dep.num_cells(); ++c) {
        if (rx[c] > best_p) {
          best_p = rx[c];
          best_site = dep.site_of(c);
        }
      }
    }
    if (best_site != target_site) continue;
    dev.serving_pci = dep.serving_pci;
    out.push_back(std::move(dev));
  }
  return out;
}

std::vector<double> link_budget(const Deployment& dep, const Device& dev,
                                bool etu) {
  const double density =
      etu ? dep.noise_density_etu_dbm_hz : dep.noise_density_awgn_dbm_hz;
  const double noise_dbm = density + 10.0 * std::log10(dep.bandwidth_hz);
  auto rx = rx_power_dbm(dep, dev.xy, dev.shadow_db);
  std::vector<double> snr(rx.size());
  for (size_t c = 0; c < rx.size(); ++c) snr[c] = rx[c] - noise_dbm;
  return snr;
}

std::vector<airlink::CellLink> three_cell_links(const ThreeCellPreset& preset,
                                                bool with_fo, bool etu,
                                                std::uint64_t seed) {
  std::vector<airlink::CellLink> links;
  for (size_t p = 0; p < preset.pcis.size(); ++p) {
    airlink::CellLink link;
    prs::PrsConfig cfg;
    cfg.pci = preset.pcis[p];
    link.plan = prs::build_plan(cfg);
    link.tx_power_db = preset.powers_db[p];
    link.residual_fo = with_fo ? preset.fos[p] : 0.0;
    if (etu) {
      auto fading = airlink::etu_taps(3.0, mix_seed(seed, 0xe70 + p),
                                      kHighRateHz);
      for (size_t i = 0; i < fading.delays.size(); ++i)
        link.taps.push_back(
            {preset.toas_ts[p] + fading.delays[i], fading.gains[i]});
    } else {
      link.taps.push_back({preset.toas_ts[p], cplx{1.0, 0.0}});
    }
    links.push_back(std::move(link));
  }
  return links;
}

}  // namespace otdoa::scenario
