#include "geodiff/mollifier.hpp"

#include <algorithm>
#include <cmath>

namespace geodiff {

namespace {

double low(double t, double e) { return -t * t * t / (e * e) + 2 * t * t / e; }
double low_d1(double t, double e) { return -3 * t * t / (e * e) + 4 * t / e; }
double low_d2(double t, double e) { return -6 * t / (e * e) + 4 / e; }

}  // namespace

double Mollifier::value(double t) const {
  if (!enabled) return t;
  if (t < eps) return low(t, eps);
  if (t > 1 - eps) return 1 - low(1 - t, eps);
  return t;
}

double Mollifier::d1(double t) const {
  if (!enabled) return 1.0;
  if (t < eps) return low_d1(t, eps);
  if (t > 1 - eps) return low_d1(1 - t, eps);
  return 1.0;
}

double Mollifier::d2(double t) const {
  if (!enabled) return 0.0;
  if (t < eps) return low_d2(t, eps);
  if (t > 1 - eps) return -low_d2(1 - t, eps);
  return 0.0;
}

double Mollifier::inverse(double y) const {
  if (!enabled || (y >= eps && y <= 1 - eps)) return y;
  const bool upper = y > 1 - eps;
  const double target = upper ? 1 - y : y;
  if (target <= 0) return upper ? 1.0 : 0.0;
  // low() is increasing on [0,eps]; bisection then a Newton polish.
  double a = 0, b = eps;
  for (int i = 0; i < 60; ++i) {
    double m = 0.5 * (a + b);
    (low(m, eps) < target ? a : b) = m;
  }
  double s = 0.5 * (a + b);
  for (int i = 0; i < 3; ++i) {
    double d = low_d1(s, eps);
    if (d <= 0) break;
    double n = s - (low(s, eps) - target) / d;
    if (n < 0 || n > eps) break;
    s = n;
  }
  return upper ? 1 - s : s;
}

}  // namespace geodiff
