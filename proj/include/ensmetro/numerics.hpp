#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ensmetro::numerics {

/// P(n+1, x) * n!, i.e. int_0^x u^n e^{-u} du, for small n, without
/// cancellation at small x.
template <typename Scalar>
Scalar lower_gamma_int(int n, Scalar x) {
  using std::exp;
  if (x <= Scalar(0)) return Scalar(0);
  Scalar factorial(1);
  for (int k = 2; k <= n; ++k) factorial *= Scalar(k);
  if (x < Scalar(n + 1)) {
    // e^{-x} sum_{k>n} x^k / k! * n!
    Scalar term = Scalar(1);
    for (int k = 1; k <= n + 1; ++k) term *= x / Scalar(k);
    Scalar sum(0);
    for (int k = n + 1; k < n + 200; ++k) {
      sum += term;
      term *= x / Scalar(k + 1);
      if (term < sum * std::numeric_limits<Scalar>::epsilon()) break;
    }
    return factorial * exp(-x) * sum;
  }
  Scalar term(1), partial(1);
  for (int k = 1; k <= n; ++k) {
    term *= x / Scalar(k);
    partial += term;
  }
  return factorial * (Scalar(1) - exp(-x) * partial);
}

/// int_0^length (offset + t)^2 e^{-rate t} dt for rate > 0.
template <typename Scalar>
Scalar shifted_quadratic_exp_integral(Scalar offset, Scalar rate, Scalar length) {
  const Scalar x = rate * length;
  const Scalar j0 = lower_gamma_int(0, x) / rate;
  const Scalar j1 = lower_gamma_int(1, x) / (rate * rate);
  const Scalar j2 = lower_gamma_int(2, x) / (rate * rate * rate);
  return offset * offset * j0 + Scalar(2) * offset * j1 + j2;
}

template <typename Scalar>
struct ScalarMinimum {
  Scalar x{};
  Scalar fx{};
  int iterations = 0;
  bool converged = false;
};

/// Golden-section search for a minimum of a unimodal f on [lo, hi].
template <typename Scalar, typename F>
ScalarMinimum<Scalar> golden_section(F&& f, Scalar lo, Scalar hi, Scalar tol,
                                     int max_iterations = 500) {
  const Scalar inv_phi = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
  Scalar c = hi - inv_phi * (hi - lo);
  Scalar d = lo + inv_phi * (hi - lo);
  Scalar fc = f(c);
  Scalar fd = f(d);
  ScalarMinimum<Scalar> res;
  for (; res.iterations < max_iterations; ++res.iterations) {
    if (hi - lo <= tol) {
      res.converged = true;
      break;
    }
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  if (fc <= fd) {
    res.x = c;
    res.fx = fc;
  } else {
    res.x = d;
    res.fx = fd;
  }
  return res;
}

template <typename Scalar>
struct Bracket {
  Scalar lo{};
  Scalar hi{};
  bool unimodal = false;
};

/// Coarse scan of f on `points` equispaced nodes. Returns the neighbourhood of
/// the smallest node and whether the sampled sequence is non-increasing then
/// non-decreasing.
template <typename Scalar, typename F>
Bracket<Scalar> scan_bracket(F&& f, Scalar lo, Scalar hi, int points = 64) {
  std::vector<Scalar> xs(points), fs(points);
  for (int i = 0; i < points; ++i) {
    xs[i] = lo + (hi - lo) * Scalar(i) / Scalar(points - 1);
    fs[i] = f(xs[i]);
  }
  const auto best = static_cast<int>(std::min_element(fs.begin(), fs.end()) - fs.begin());
  Bracket<Scalar> b;
  b.lo = xs[std::max(best - 1, 0)];
  b.hi = xs[std::min(best + 1, points - 1)];
  b.unimodal = true;
  for (int i = 1; i <= best; ++i) b.unimodal = b.unimodal && fs[i] <= fs[i - 1];
  for (int i = best + 1; i < points; ++i) b.unimodal = b.unimodal && fs[i] >= fs[i - 1];
  return b;
}

template <typename Scalar, int N>
struct SimplexMinimum {
  Eigen::Matrix<Scalar, N, 1> x;
  Scalar fx{};
  int iterations = 0;
  bool converged = false;
};

/// Nelder-Mead simplex descent with standard coefficients. Stops when every
/// vertex lies within `xtol` (max-norm) of the best one.
template <typename Scalar, int N, typename F>
SimplexMinimum<Scalar, N> nelder_mead(F&& f, const Eigen::Matrix<Scalar, N, 1>& start,
                                      const Eigen::Matrix<Scalar, N, 1>& step, Scalar xtol,
                                      int max_iterations = 5000) {
  using Point = Eigen::Matrix<Scalar, N, 1>;
  std::array<Point, N + 1> v;
  std::array<Scalar, N + 1> fv;
  v[0] = start;
  for (int i = 0; i < N; ++i) {
    v[i + 1] = start;
    v[i + 1][i] += step[i];
  }
  for (int i = 0; i <= N; ++i) fv[i] = f(v[i]);

  SimplexMinimum<Scalar, N> res;
  std::array<int, N + 1> order;
  for (; res.iterations < max_iterations; ++res.iterations) {
    for (int i = 0; i <= N; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = order[0];
    const int worst = order[N];
    const int second = order[N - 1];

    Scalar size(0);
    for (int i = 0; i <= N; ++i) size = std::max(size, (v[i] - v[best]).cwiseAbs().maxCoeff());
    if (size <= xtol) {
      res.converged = true;
      break;
    }

    Point centroid = Point::Zero();
    for (int i = 0; i <= N; ++i) {
      if (i != worst) centroid += v[i];
    }
    centroid /= Scalar(N);

    const Point reflected = centroid + (centroid - v[worst]);
    const Scalar fr = f(reflected);
    if (fr < fv[best]) {
      const Point expanded = centroid + Scalar(2) * (centroid - v[worst]);
      const Scalar fe = f(expanded);
      if (fe < fr) {
        v[worst] = expanded;
        fv[worst] = fe;
      } else {
        v[worst] = reflected;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      v[worst] = reflected;
      fv[worst] = fr;
      continue;
    }
    const bool outside = fr < fv[worst];
    const Point contracted = outside ? Point(centroid + Scalar(0.5) * (reflected - centroid))
                                     : Point(centroid + Scalar(0.5) * (v[worst] - centroid));
    const Scalar fc = f(contracted);
    if (fc < (outside ? fr : fv[worst])) {
      v[worst] = contracted;
      fv[worst] = fc;
      continue;
    }
    for (int i = 0; i <= N; ++i) {
      if (i == best) continue;
      v[i] = v[best] + Scalar(0.5) * (v[i] - v[best]);
      fv[i] = f(v[i]);
    }
  }
  const auto best_it = std::min_element(fv.begin(), fv.end());
  res.x = v[static_cast<std::size_t>(best_it - fv.begin())];
  res.fx = *best_it;
  return res;
}

}  // namespace ensmetro::numerics
