#pragma once

#include <sgca/error.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace sgca::harness {

/// Median; the mean of the two middle values for even sizes.
inline double median(std::vector<double> xs)
{
    if (xs.empty()) throw parameter_error("median: empty sample");
    const std::size_t n = xs.size();
    std::sort(xs.begin(), xs.end());
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

/// Median absolute deviation about the median, unscaled.
inline double mad(const std::vector<double>& xs)
{
    const double m = median(xs);
    std::vector<double> dev;
    dev.reserve(xs.size());
    for (double x : xs) dev.push_back(std::abs(x - m));
    return median(std::move(dev));
}

inline double mean(const std::vector<double>& xs)
{
    if (xs.empty()) throw parameter_error("mean: empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double stddev(const std::vector<double>& xs)
{
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

} // namespace sgca::harness
