#pragma once

// Exact integration of piecewise polynomials.
//
// Every integrand in this library (products of the piecewise cubic
// sigmoid, its derivative, piecewise-constant or piecewise-affine targets)
// is a polynomial of degree <= 7 between consecutive kinks. A 4-point
// Gauss-Legendre rule on each kink-free sub-interval is therefore exact up
// to rounding.

#include <algorithm>
#include <array>
#include <span>
#include <vector>

namespace tts {

namespace detail {

inline constexpr std::array<double, 4> kGaussNodes = {
    -0.86113631159405257522, -0.33998104358485626480,
    0.33998104358485626480, 0.86113631159405257522};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.34785484513745385737, 0.65214515486254614263,
    0.65214515486254614263, 0.34785484513745385737};

}  // namespace detail

/// Gauss-Legendre 4-point rule on [lo, hi]; exact for degree <= 7.
template <class F>
double gauss4(F&& f, double lo, double hi) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double sum = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    sum += detail::kGaussWeights[k] * f(mid + half * detail::kGaussNodes[k]);
  }
  return half * sum;
}

/// Integrates f over [lo, hi], splitting at every cut strictly inside.
/// `cuts` need not be sorted and may contain points outside [lo, hi].
template <class F>
double integrate_piecewise(F&& f, std::span<const double> cuts, double lo,
                           double hi) {
  if (!(hi > lo)) return 0.0;
  std::vector<double> pts;
  pts.reserve(cuts.size() + 2);
  pts.push_back(lo);
  for (double c : cuts) {
    if (c > lo && c < hi) pts.push_back(c);
  }
  pts.push_back(hi);
  std::sort(pts.begin() + 1, pts.end() - 1);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    if (pts[k + 1] > pts[k]) total += gauss4(f, pts[k], pts[k + 1]);
  }
  return total;
}

}  // namespace tts
