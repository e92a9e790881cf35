#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace moods::stats {

struct LmmObservation {
    std::string participant;
    double week = 0.0;
    double y = 0.0;
};

struct LmmFilterResult {
    std::vector<LmmObservation> kept;
    std::vector<std::string> dropped;  // sorted participant ids
};

/// Drops participants with fewer than `min_weeks` distinct weeks or with no
/// within-participant variance in y.
LmmFilterResult filter_lmm_participants(std::span<const LmmObservation> obs, int min_weeks = 5);

struct LmmOptions {
    int restarts = 5;
    double tolerance = 1e-8;  // deviance change between iterations
    int max_iterations = 400;
    std::uint64_t seed = 0x1d3a;
    bool zero_random_effects = false;  // constrain the random-effect covariance to 0
};

struct FixedEffect {
    double estimate = 0.0;
    double se = 0.0;
    double z = 0.0;
    double p = 1.0;
};

struct LmmFit {
    FixedEffect intercept;
    FixedEffect slope;
    double sd_intercept = 0.0;
    double sd_slope = 0.0;
    double corr = 0.0;
    double sd_residual = 0.0;
    double reml_loglik = 0.0;
    std::array<double, 3> theta{};  // relative Cholesky factor (l11, l21, l22)
    bool converged = false;
    int iterations = 0;
    int restarts_run = 0;
    double restart_spread = 0.0;  // max deviance gap among converged restarts
    std::size_t n_participants = 0;
    std::size_t n_obs = 0;
    std::string message;
};

/// Per-participant sufficient statistics for y = X beta + Z b + e with
/// X = Z = [1, week]. The REML criterion only needs these.
class LmmProblem {
public:
    explicit LmmProblem(std::span<const LmmObservation> obs);

    std::size_t groups() const noexcept { return groups_.size(); }
    std::size_t n_obs() const noexcept { return n_; }

    /// -2 x REML log-likelihood with the residual variance profiled out, at the
    /// relative covariance factor Lambda = [[t0, 0], [t1, t2]].
    double deviance(const std::array<double, 3>& theta) const;

    struct Solution {
        double beta[2];
        double cov[2][2];  // unscaled (X'V^-1 X)^-1 with V relative to sigma^2
        double sigma2;
        double deviance;
    };
    Solution solve(const std::array<double, 3>& theta) const;

private:
    struct Group {
        double ztz[3];  // n, sum x, sum x^2
        double zty[2];
        double yty;
    };
    std::vector<Group> groups_;
    std::size_t n_ = 0;
};

/// REML fit of the random intercept + random slope model by quasi-Newton
/// (BFGS) on the profiled deviance with random restarts; fixed-effect
/// p-values are Wald z tests.
LmmFit fit_lmm(std::span<const LmmObservation> obs, const LmmOptions& options = {});

}  // namespace moods::stats
