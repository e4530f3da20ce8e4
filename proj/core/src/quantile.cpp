#include "otbv/quantile.hpp"

#include <algorithm>
#include <cmath>

namespace otbv {

QuantileTable quantile_table(const GridDensity& rho) {
  if (rho.grid.dim != 1) throw ConfigError("quantile_table: 1D only");
  const double h = rho.grid.spacing;
  QuantileTable qt;
  double cum = 0.0;
  bool in_run = false;
  for (int i = 0; i < rho.grid.shape[0]; ++i) {
    const double v = rho.values[i];
    const double left = rho.grid.x_of(i) - 0.5 * h;
    if (v > 0.0) {
      if (!in_run) {
        qt.p.push_back(cum);
        qt.x.push_back(left);
        in_run = true;
      }
      cum += v * h;
      qt.p.push_back(cum);
      qt.x.push_back(left + h);
    } else {
      in_run = false;
    }
  }
  qt.total_mass = cum;
  if (qt.p.empty()) throw ConfigError("quantile_table: density has no mass");
  return qt;
}

double QuantileTable::operator()(double prob) const {
  if (prob <= p.front()) return x.front();
  if (prob >= p.back()) return x.back();
  // first knot with p > prob
  const auto it = std::upper_bound(p.begin(), p.end(), prob);
  const std::size_t k = static_cast<std::size_t>(it - p.begin());
  const double dp = p[k] - p[k - 1];
  if (dp <= 0.0) return x[k];
  const double t = (prob - p[k - 1]) / dp;
  return x[k - 1] + t * (x[k] - x[k - 1]);
}

double cdf(const GridDensity& rho, double x) {
  if (rho.grid.dim != 1) throw ConfigError("cdf: 1D only");
  const double h = rho.grid.spacing;
  double cum = 0.0;
  for (int i = 0; i < rho.grid.shape[0]; ++i) {
    const double left = rho.grid.x_of(i) - 0.5 * h;
    if (x <= left) break;
    const double covered = std::min(x - left, h);
    cum += rho.values[i] * covered;
  }
  return cum;
}

double quantile_l2sq(const QuantileTable& a, const QuantileTable& b) {
  // merged knot set; both quantiles are linear between merged knots, so
  // Simpson is exact on each piece
  std::vector<double> knots;
  knots.reserve(a.p.size() + b.p.size());
  knots.insert(knots.end(), a.p.begin(), a.p.end());
  knots.insert(knots.end(), b.p.begin(), b.p.end());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  // evaluate the linear piece containing the interval's midpoint, so knot
  // values at jump points are taken from the correct side
  auto piece = [](const QuantileTable& t, double pm) {
    const auto it = std::upper_bound(t.p.begin(), t.p.end(), pm);
    std::size_t k = static_cast<std::size_t>(it - t.p.begin());
    if (k == 0) k = 1;
    if (k == t.p.size()) k = t.p.size() - 1;
    const double dp = t.p[k] - t.p[k - 1];
    const double slope = dp > 0.0 ? (t.x[k] - t.x[k - 1]) / dp : 0.0;
    return std::pair<double, double>{t.x[k - 1] - slope * t.p[k - 1], slope};
  };

  double total = 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double p0 = knots[k], p1 = knots[k + 1];
    const double dp = p1 - p0;
    if (dp <= 0.0) continue;
    const double pm = 0.5 * (p0 + p1);
    const auto [ca, sa] = piece(a, pm);
    const auto [cb, sb] = piece(b, pm);
    auto d2 = [&](double p) {
      const double d = (ca + sa * p) - (cb + sb * p);
      return d * d;
    };
    total += dp / 6.0 * (d2(p0) + 4.0 * d2(pm) + d2(p1));
  }
  return total;
}

}  // namespace otbv
