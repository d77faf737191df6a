#pragma once

#include "glad/random.hpp"

namespace glad {

double standard_normal_pdf(double z) noexcept;
double standard_normal_cdf(double z) noexcept;

/// Normal(loc, scale) conditioned on [lo, hi].
struct TruncatedNormal {
    double loc;
    double scale;
    double lo;
    double hi;

    double mean() const noexcept;
    double variance() const noexcept;
    /// Rejection from the parent normal.
    double sample(Rng& rng) const;

    /// Keeps `scale` = sd and solves for `loc` so that the truncated mean equals
    /// `target_mean`. Bounds that sit close to the mean (e.g. a count with
    /// mean 2.8, sd 3.3, floor 0) would otherwise shift the sampled mean.
    static TruncatedNormal matching_mean(double target_mean, double sd, double lo, double hi);
};

}  // namespace glad
