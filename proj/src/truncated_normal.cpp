#include "glad/truncated_normal.hpp"

#include <cmath>
#include <numbers>

#include "glad/errors.hpp"

namespace glad {

double standard_normal_pdf(double z) noexcept {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double standard_normal_cdf(double z) noexcept {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

namespace {

// Probability mass of [a, b] under N(0,1), computed on the side of the
// distribution that avoids cancellation.
double mass(double a, double b) noexcept {
    if (a > 0.0) return standard_normal_cdf(-a) - standard_normal_cdf(-b);
    return standard_normal_cdf(b) - standard_normal_cdf(a);
}

}  // namespace

double TruncatedNormal::mean() const noexcept {
    const double a = (lo - loc) / scale;
    const double b = (hi - loc) / scale;
    const double z = mass(a, b);
    if (!(z > 1e-300)) return a > 0.0 ? lo : hi;
    return loc + scale * (standard_normal_pdf(a) - standard_normal_pdf(b)) / z;
}

double TruncatedNormal::variance() const noexcept {
    const double a = (lo - loc) / scale;
    const double b = (hi - loc) / scale;
    const double z = mass(a, b);
    if (!(z > 1e-300)) return 0.0;
    const double pa = standard_normal_pdf(a);
    const double pb = standard_normal_pdf(b);
    // a*pdf(a) -> 0 as a -> -inf; guard the infinite-bound case explicitly.
    const double apa = std::isfinite(a) ? a * pa : 0.0;
    const double bpb = std::isfinite(b) ? b * pb : 0.0;
    const double r = (pa - pb) / z;
    return scale * scale * (1.0 + (apa - bpb) / z - r * r);
}

double TruncatedNormal::sample(Rng& rng) const {
    for (int attempt = 0; attempt < 10'000'000; ++attempt) {
        const double x = rng.normal(loc, scale);
        if (x >= lo && x <= hi) return x;
    }
    throw Error("truncated normal: acceptance region has negligible mass");
}

TruncatedNormal TruncatedNormal::matching_mean(double target_mean, double sd, double lo, double hi) {
    if (!(target_mean > lo && target_mean < hi) || !(sd > 0.0))
        throw ArgumentError("truncated normal: mean must lie strictly inside the bounds");
    double left = target_mean - 20.0 * sd;
    double right = target_mean + 20.0 * sd;
    for (int i = 0; i < 200 && right - left > 1e-13 * sd; ++i) {
        const double mid = 0.5 * (left + right);
        if (TruncatedNormal{mid, sd, lo, hi}.mean() < target_mean)
            left = mid;
        else
            right = mid;
    }
    return {0.5 * (left + right), sd, lo, hi};
}

}  // namespace glad
