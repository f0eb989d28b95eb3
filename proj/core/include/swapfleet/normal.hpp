#pragma once

namespace swapfleet::normal {

/// Standard normal cdf.
double cdf(double z);

/// Standard normal density.
double pdf(double z);

/// Inverse standard normal cdf for p in (0, 1); absolute error below 1e-12
/// over the whole range. Throws ConfigError outside (0, 1).
double quantile(double p);

}  // namespace swapfleet::normal
