#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "csvddnet/errors.hpp"

namespace csvddnet {

// Euclidean projection onto the capped simplex
//   { a : sum a_i = total, 0 <= a_i <= cap }.
//
// The projection is a(tau)_i = clamp(v_i - tau, 0, cap) for the tau that
// makes the coordinates sum to `total`. g(tau) = sum a(tau)_i is
// non-increasing and piecewise linear with breakpoints at v_i and
// v_i - cap, so tau is found by scanning the sorted breakpoints.
inline Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& v, double cap,
                                              double total = 1.0) {
  const int n = static_cast<int>(v.size());
  if (n == 0) throw Error("project_capped_simplex: empty input");
  if (cap <= 0.0 || total <= 0.0) throw Error("project_capped_simplex: cap and total must be > 0");
  if (cap * n < total)
    throw InfeasibleLambda("project_capped_simplex: cap * n < total, feasible set is empty");

  std::vector<double> bps;
  bps.reserve(2 * n);
  for (int i = 0; i < n; ++i) {
    bps.push_back(v[i]);
    bps.push_back(v[i] - cap);
  }
  std::sort(bps.begin(), bps.end());

  auto g = [&](double tau) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::clamp(v[i] - tau, 0.0, cap);
    return s;
  };

  // bracket: g(bps.front()) is the max (= n*cap formally clipped), g(bps.back()) = 0
  double lo = bps.front(), hi = bps.back();
  if (g(lo) < total) {
    // total == cap * n within rounding; everything at the cap
    return Eigen::VectorXd::Constant(n, cap);
  }
  // binary search over breakpoints for the segment containing the solution
  int a = 0, b = static_cast<int>(bps.size()) - 1;
  while (b - a > 1) {
    const int mid = (a + b) / 2;
    if (g(bps[mid]) >= total)
      a = mid;
    else
      b = mid;
  }
  lo = bps[a];
  hi = bps[b];
  const double glo = g(lo), ghi = g(hi);
  double tau;
  if (glo <= ghi + 1e-300) {
    tau = lo;  // flat segment, any tau works
  } else {
    tau = lo + (glo - total) * (hi - lo) / (glo - ghi);
  }

  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = std::clamp(v[i] - tau, 0.0, cap);

  // polish the sum; the few active coordinates absorb rounding error
  const double err = out.sum() - total;
  if (err != 0.0) {
    int free_count = 0;
    for (int i = 0; i < n; ++i)
      if (out[i] > 0.0 && out[i] < cap) ++free_count;
    if (free_count > 0) {
      const double shift = err / free_count;
      for (int i = 0; i < n; ++i)
        if (out[i] > 0.0 && out[i] < cap) out[i] = std::clamp(out[i] - shift, 0.0, cap);
    }
  }
  return out;
}

}  // namespace csvddnet
