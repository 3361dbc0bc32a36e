#pragma once

#include <span>

namespace specfno {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};

/// Ordinary least squares y ~ slope * x + intercept. Needs >= 2 distinct x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double stddev(std::span<const double> v);

}  // namespace specfno
