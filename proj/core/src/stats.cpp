#include "emuchain/stats.hpp"

#include "emuchain/error.hpp"

#include <algorithm>
#include <cmath>

namespace emuchain {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw InvalidArgument("mean of an empty sample");
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return acc / static_cast<double>(xs.size() - 1);
}

namespace {

double sorted_quantile(const std::vector<double>& s, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile level must be in [0, 1]");
    const double h = p * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    const double v = s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
    return std::clamp(v, s[lo], s[hi]);
}

}  // namespace

double quantile(std::span<const double> xs, double p) {
    const double ps[] = {p};
    return quantiles(xs, ps).front();
}

std::vector<double> quantiles(std::span<const double> xs, std::span<const double> ps) {
    if (xs.empty()) throw InvalidArgument("quantile of an empty sample");
    std::vector<double> s(xs.begin(), xs.end());
    std::sort(s.begin(), s.end());
    std::vector<double> out;
    out.reserve(ps.size());
    for (double p : ps) out.push_back(sorted_quantile(s, p));
    return out;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InvalidArgument("KS statistic needs two non-empty samples");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

}  // namespace emuchain
