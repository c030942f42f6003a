#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace sbl::quad {

struct Options {
  double abs_tol = 0.0;
  double rel_tol = 1e-8;
  int max_panels = 4000;
  int initial_panels = 1;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
  bool converged = false;
};

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss-Legendre rule.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kKronrodNodes[j];
    const double s = f(c - dx) + f(c + dx);
    kron += kKronrodWeights[j] * s;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * s;
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b].
/// The panel with the largest error estimate is bisected until the summed
/// error drops below max(abs_tol, rel_tol * |value|) or max_panels is hit.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  Result res;
  if (a == b) {
    res.converged = true;
    return res;
  }
  const int init = std::max(1, opt.initial_panels);
  std::vector<detail::Panel> heap;
  heap.reserve(static_cast<std::size_t>(std::max(opt.max_panels, init)) + 2);
  const double width = (b - a) / init;
  for (int i = 0; i < init; ++i) {
    const double lo = a + i * width;
    const double hi = (i + 1 == init) ? b : a + (i + 1) * width;
    heap.push_back(detail::gk15(f, lo, hi));
  }
  res.evaluations = 15L * init;
  std::make_heap(heap.begin(), heap.end());

  auto totals = [&heap](double& v, double& e) {
    v = 0.0;
    e = 0.0;
    for (const auto& p : heap) {
      v += p.value;
      e += p.error;
    }
  };
  double value = 0.0, error = 0.0;
  totals(value, error);
  while (error > std::max(opt.abs_tol, opt.rel_tol * std::abs(value)) &&
         static_cast<int>(heap.size()) < opt.max_panels) {
    std::pop_heap(heap.begin(), heap.end());
    const detail::Panel worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // panel cannot be split further in double precision
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end());
      break;
    }
    const detail::Panel left = detail::gk15(f, worst.a, mid);
    const detail::Panel right = detail::gk15(f, mid, worst.b);
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end());
    res.evaluations += 30;
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    // periodic resummation keeps the running totals from drifting
    if (heap.size() % 64 == 0) totals(value, error);
  }
  totals(value, error);
  res.value = value;
  res.error = error;
  res.converged = error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(value));
  return res;
}

/// Nodes and weights of the m-point Gauss-Hermite rule for weight exp(-x^2).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Golub-Welsch construction; the rule is built once per m and cached.
const GaussHermiteRule& gauss_hermite(int m);

}  // namespace sbl::quad
