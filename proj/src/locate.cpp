#include "otdoa/locate.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace otdoa::locate {

namespace {
constexpr double kPi = std::numbers::pi;

double dist(const Xy& a, const Xy& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double residual_cost(const Xy& x, const std::vector<double>& tdoas_s,
                     const std::vector<Xy>& sites, int ref) {
  double cost = 0.0;
  const double dref = dist(x, sites[ref]);
  for (size_t p = 0; p < sites.size(); ++p) {
    if (static_cast<int>(p) == ref) continue;
    const double r =
        kSpeedOfLight * tdoas_s[p] - (dist(x, sites[p]) - dref);
    cost += r * r;
  }
  return cost;
}

// One damped Gauss-Newton descent from a given start; returns iterations
// used, or -1 if it failed to make progress.
int gauss_newton(Xy& x, const std::vector<double>& tdoas_s,
                 const std::vector<Xy>& sites, int ref, double* out_cost) {
  const int max_iter = 50;
  double lambda = 1e-3;
  double cost = residual_cost(x, tdoas_s, sites, ref);
  for (int it = 0; it < max_iter; ++it) {
    // Accumulate J^T J and J^T r
    double a00 = 0.0, a01 = 0.0, a11 = 0.0, b0 = 0.0, b1 = 0.0;
    const double dref = dist(x, sites[ref]);
    if (dref < 1e-9) {
      // Sitting exactly on the reference site; nudge off it
      x.x += 0.5;
      continue;
    }
    const double urx = (x.x - sites[ref].x) / dref;
    const double ury = (x.y - sites[ref].y) / dref;
    for (size_t p = 0; p < sites.size(); ++p) {
      if (static_cast<int>(p) == ref) continue;
      const double dp = dist(x, sites[p]);
      if (dp < 1e-9) continue;
      const double upx = (x.x - sites[p].x) / dp;
      const double upy = (x.y - sites[p].y) / dp;
      const double r =
          kSpeedOfLight * tdoas_s[p] - (dp - dref);
      const double jx = -(upx - urx);
      const double jy = -(upy - ury);
      a00 += jx * jx;
      a01 += jx * jy;
      a11 += jy * jy;
      b0 += jx * r;
      b1 += jy * r;
    }
    const double det = (a00 + lambda) * (a11 + lambda) - a01 * a01;
    if (std::abs(det) < 1e-12) return -1;
    const double sx = -((a11 + lambda) * b0 - a01 * b1) / det;
    const double sy = -((a00 + lambda) * b1 - a01 * b0) / det;
    Xy trial{x.x + sx, x.y + sy};
    const double trial_cost = residual_cost(trial, tdoas_s, sites, ref);
    if (trial_cost < cost) {
      x = trial;
      cost = trial_cost;
      lambda = std::max(lambda * 0.5, 1e-9);
      if (std::hypot(sx, sy) < 0.1) {
        if (out_cost) *out_cost = cost;
        return it + 1;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e9) break;
    }
  }
  if (out_cost) *out_cost = cost;
  return max_iter;
}
}  // namespace

TdoaSet tdoas(const std::vector<ToaMeasurement>& reports, double rate_hz) {
  TdoaSet out;
  int detected = 0;
  int ref = -1;
  double best = -1.0;
  for (size_t p = 0; p < reports.size(); ++p) {
    if (!reports[p].detected) continue;
    ++detected;
    if (reports[p].strength > best) {
      best = reports[p].strength;
      ref = static_cast<int>(p);
    }
  }
  out.detected.resize(reports.size());
  for (size_t p = 0; p < reports.size(); ++p)
    out.detected[p] = reports[p].detected;
  if (detected < 3) return out;  // not localizable
  out.valid = true;
  out.reference_index = ref;
  out.tdoas_s.assign(reports.size(), 0.0);
  for (size_t p = 0; p < reports.size(); ++p) {
    if (!reports[p].detected) continue;
    out.tdoas_s[p] =
        (reports[p].toa_samples - reports[ref].toa_samples) / rate_hz;
  }
  return out;
}

PositionFix multilaterate(const TdoaSet& set, const std::vector<Xy>& sites,
                          const Xy* initial_guess) {
  if (!set.valid) return {};
  std::vector<double> td;
  std::vector<Xy> xs;
  int ref = -1;
  for (size_t p = 0; p < sites.size(); ++p) {
    if (p < set.detected.size() && !set.detected[p]) continue;
    if (static_cast<int>(p) == set.reference_index)
      ref = static_cast<int>(td.size());
    td.push_back(set.tdoas_s[p]);
    xs.push_back(sites[p]);
  }
  PositionFix fix = multilaterate(td, xs, ref, initial_guess);
  fix.reference_cell = set.reference_index;
  return fix;
}

PositionFix multilaterate(const std::vector<double>& tdoas_s,
                          const std::vector<Xy>& sites, int reference_index,
                          const Xy* initial_guess) {
  PositionFix fix;
  fix.tdoas_s = tdoas_s;
  if (sites.size() < 3 || reference_index < 0 ||
      reference_index >= static_cast<int>(sites.size()))
    return fix;
  fix.reference_cell = reference_index;

  Xy start{0.0, 0.0};
  if (initial_guess) {
    start = *initial_guess;
  } else {
    for (const auto& s : sites) {
      start.x += s.x;
      start.y += s.y;
    }
    start.x /= sites.size();
    start.y /= sites.size();
  }

  Xy x = start;
  double cost = std::numeric_limits<double>::max();
  int iters = gauss_newton(x, tdoas_s, sites, reference_index, &cost);

  // Divergence guard: coarse grid over the deployment bounding box, polish.
  double span = 0.0;
  for (const auto& s : sites)
    span = std::max({span, std::abs(s.x - start.x), std::abs(s.y - start.y)});
  span = std::max(span * 2.0, 1000.0);
  const bool diverged =
      iters < 0 || !std::isfinite(cost) ||
      std::hypot(x.x - start.x, x.y - start.y) > 4.0 * span;
  if (diverged) {
    Xy best_grid = start;
    double best_cost = std::numeric_limits<double>::max();
    for (double gx = start.x - span; gx <= start.x + span; gx += 100.0) {
      for (double gy = start.y - span; gy <= start.y + span; gy += 100.0) {
        Xy g{gx, gy};
        const double c = residual_cost(g, tdoas_s, sites, reference_index);
        if (c < best_cost) {
          best_cost = c;
          best_grid = g;
        }
      }
    }
    x = best_grid;
    iters = gauss_newton(x, tdoas_s, sites, reference_index, &cost);
    if (iters < 0) return fix;  // singular geometry
  }

  fix.xy_m = x;
  fix.residual_norm = std::sqrt(std::max(cost, 0.0));
  fix.iterations_used = std::max(iters, 0);
  fix.localized = std::isfinite(x.x) && std::isfinite(x.y);
  return fix;
}

double crlb_toa(const prs::PrsPlan& plan, double noise_variance,
                bool printed_variant) {
  double denom = 0.0;
  for (const auto& sym : plan.symbols) {
    const double k = sym.k_low;
    if (printed_variant)
      denom += k * k + (k * k + 6.0) * (k * k + 6.0);
    else
      denom += k * k + (k + 6.0) * (k + 6.0);
  }
  const double n = plan.config.fft_size;
  return noise_variance * n * n / (8.0 * kPi * kPi * denom);
}

}  // namespace otdoa::locate
