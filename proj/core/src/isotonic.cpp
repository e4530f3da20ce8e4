#include "otbv/isotonic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace otbv {

double PiecewiseLinear::operator()(double q) const {
  if (p.empty()) return 0.0;
  if (q <= p.front()) return y.front();
  if (q >= p.back()) return y.back();
  auto it = std::upper_bound(p.begin(), p.end(), q);
  std::size_t k = static_cast<std::size_t>(it - p.begin()) - 1;
  while (k + 1 < p.size() && p[k + 1] == p[k]) ++k;
  if (k + 1 >= p.size()) return y[k];
  const double t = (q - p[k]) / (p[k + 1] - p[k]);
  return y[k] * (1.0 - t) + y[k + 1] * t;
}

double PiecewiseLinear::integral() const {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k)
    s += 0.5 * (y[k] + y[k + 1]) * (p[k + 1] - p[k]);
  return s;
}

namespace {

struct Seg {
  double p0, y0, p1, y1;
  double slope() const { return (y1 - y0) / (p1 - p0); }
  double at(double q) const {
    const double t = (q - p0) / (p1 - p0);
    return y0 * (1.0 - t) + y1 * t;
  }
  double head_integral(double q) const { return 0.5 * (y0 + at(q)) * (q - p0); }
  double tail_integral(double q) const { return 0.5 * (at(q) + y1) * (p1 - q); }
  // preimage of a value, only valid for strictly monotone segments
  double inverse(double v) const { return p0 + (v - y0) / (y1 - y0) * (p1 - p0); }
};

struct Block {
  bool pooled;
  Seg seg;         // when !pooled
  double a, b, I;  // when pooled; constant value = I / (b - a)
  double value() const { return pooled ? I / (b - a) : seg.y1; }
};

// Left extent of a pool of constant value w: walk the stack from the top,
// absorbing material whose values lie at or above w. Returns the extent,
// the absorbed integral, how many whole blocks are consumed and, when the
// last free block is cut, the cut position.
struct LeftScan {
  double a;
  double integral;
  std::size_t popped;
  double cut = std::numeric_limits<double>::quiet_NaN();  // NaN: no cut
};

LeftScan scan_left(const std::vector<Block>& stack, double w, double frontier) {
  LeftScan r{frontier, 0.0, 0};
  for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
    const Block& blk = *it;
    if (blk.pooled) {
      if (blk.value() < w) break;
      r.a = blk.a;
      r.integral += blk.I;
      ++r.popped;
    } else {
      const Seg& F = blk.seg;
      if (F.y1 < w) break;
      if (F.y0 >= w) {
        r.a = F.p0;
        r.integral += 0.5 * (F.y0 + F.y1) * (F.p1 - F.p0);
        ++r.popped;
      } else {
        const double alpha = F.inverse(w);
        r.a = alpha;
        r.integral += F.tail_integral(alpha);
        r.cut = alpha;
        break;
      }
    }
  }
  return r;
}

}  // namespace

// Pool-adjacent-violators over linear segments. Whenever a segment breaks
// monotonicity the pooled constant w is located by bisection: the excess
// integral of the absorbed material over w is strictly decreasing in w,
// so the balance condition has a unique root. Pool boundaries inside
// segments come out of exact linear inversion at the final w.
PiecewiseLinear isotonic_project(const PiecewiseLinear& in) {
  std::vector<Seg> segs;
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (std::size_t k = 0; k + 1 < in.p.size(); ++k) {
    ymin = std::min({ymin, in.y[k], in.y[k + 1]});
    ymax = std::max({ymax, in.y[k], in.y[k + 1]});
    if (in.p[k + 1] > in.p[k])
      segs.push_back({in.p[k], in.y[k], in.p[k + 1], in.y[k + 1]});
  }
  if (segs.empty()) return in;
  const double eps = 1e-13 * std::max(std::abs(ymin), std::abs(ymax));

  std::vector<Block> stack;
  for (const Seg& S : segs) {
    const double top_end =
        stack.empty() ? -std::numeric_limits<double>::infinity()
                      : stack.back().value();
    const bool increasing = S.slope() >= 0.0;
    if (increasing && S.y0 >= top_end - eps) {
      stack.push_back({false, S, 0, 0, 0});
      continue;
    }

    // right extent of the pool inside S at value w
    auto right_end = [&](double w) {
      if (!increasing) return S.p1;
      if (w >= S.y1) return S.p1;
      if (w <= S.y0) return S.p0;
      return S.inverse(w);
    };
    // excess of the absorbed material over the constant w
    auto balance = [&](double w) {
      const LeftScan ls = scan_left(stack, w, S.p0);
      const double b = right_end(w);
      return ls.integral + S.head_integral(b) - w * (b - ls.a);
    };

    double lo = ymin, hi = ymax;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (balance(mid) > 0.0 ? lo : hi) = mid;
    }
    const double w = 0.5 * (lo + hi);

    const LeftScan ls = scan_left(stack, w, S.p0);
    const double b = right_end(w);
    stack.resize(stack.size() - ls.popped);
    if (!std::isnan(ls.cut)) {
      Seg& F = stack.back().seg;
      F.y1 = F.at(ls.cut);
      F.p1 = ls.cut;
    }
    const double I = ls.integral + S.head_integral(b);
    if (b > ls.a)
      stack.push_back({true, {}, ls.a, b, I});
    if (b < S.p1)
      stack.push_back({false, {b, S.at(b), S.p1, S.y1}, 0, 0, 0});
  }

  PiecewiseLinear out;
  auto emit = [&out](double p, double y) {
    if (!out.p.empty() && out.p.back() == p && out.y.back() == y) return;
    out.p.push_back(p);
    out.y.push_back(y);
  };
  for (const Block& blk : stack) {
    if (blk.pooled) {
      emit(blk.a, blk.value());
      emit(blk.b, blk.value());
    } else {
      emit(blk.seg.p0, blk.seg.y0);
      emit(blk.seg.p1, blk.seg.y1);
    }
  }
  return out;
}

PiecewiseLinear isotonic_project_clamped(const PiecewiseLinear& in, double lo,
                                         double hi) {
  PiecewiseLinear mono = isotonic_project(in);
  PiecewiseLinear out;
  auto emit = [&out](double p, double y) {
    if (!out.p.empty() && out.p.back() == p && out.y.back() == y) return;
    out.p.push_back(p);
    out.y.push_back(y);
  };
  auto clamp = [&](double y) { return std::min(hi, std::max(lo, y)); };
  for (std::size_t k = 0; k + 1 < mono.p.size(); ++k) {
    const double p0 = mono.p[k], p1 = mono.p[k + 1];
    const double y0 = mono.y[k], y1 = mono.y[k + 1];
    emit(p0, clamp(y0));
    if (p1 > p0)
      for (double bound : {lo, hi})
        if ((y0 - bound) * (y1 - bound) < 0.0)
          emit(p0 + (bound - y0) / (y1 - y0) * (p1 - p0), bound);
    emit(p1, clamp(y1));
  }
  if (out.p.empty()) {
    out.p = mono.p;
    for (double y : mono.y) out.y.push_back(clamp(y));
  }
  return out;
}

}  // namespace otbv
