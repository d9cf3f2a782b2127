#pragma once

namespace geodiff {

// C^2-ish reparameterization of [0,1] that flattens near the end points:
// cubic on [0,eps), identity on [eps,1-eps], point-mirrored cubic on (1-eps,1].
struct Mollifier {
  double eps = 1e-6;
  bool enabled = true;

  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const;
  // Inverse on [0,1]; value(inverse(y)) == y up to roundoff.
  double inverse(double y) const;
};

}  // namespace geodiff
