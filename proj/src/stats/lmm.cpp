#include "moods/stats/lmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "moods/domain.hpp"
#include "moods/stats/distributions.hpp"

namespace moods::stats {

LmmFilterResult filter_lmm_participants(std::span<const LmmObservation> obs, int min_weeks) {
    struct Acc {
        std::set<double> weeks;
        double first = 0.0;
        bool varies = false;
        bool seen = false;
    };
    std::map<std::string, Acc> acc;
    for (const auto& o : obs) {
        auto& a = acc[o.participant];
        a.weeks.insert(o.week);
        if (!a.seen) {
            a.first = o.y;
            a.seen = true;
        } else if (o.y != a.first) {
            a.varies = true;
        }
    }
    LmmFilterResult out;
    std::set<std::string> keep;
    for (const auto& [pid, a] : acc) {
        if (static_cast<int>(a.weeks.size()) >= min_weeks && a.varies) keep.insert(pid);
        else out.dropped.push_back(pid);
    }
    for (const auto& o : obs) {
        if (keep.count(o.participant)) out.kept.push_back(o);
    }
    return out;
}

LmmProblem::LmmProblem(std::span<const LmmObservation> obs) {
    std::map<std::string, Group> by;
    for (const auto& o : obs) {
        if (!std::isfinite(o.y) || !std::isfinite(o.week)) throw Error(ErrorCode::Validation, "non-finite observation");
        auto& g = by[o.participant];
        g.ztz[0] += 1.0;
        g.ztz[1] += o.week;
        g.ztz[2] += o.week * o.week;
        g.zty[0] += o.y;
        g.zty[1] += o.week * o.y;
        g.yty += o.y * o.y;
        ++n_;
    }
    groups_.reserve(by.size());
    for (auto& [pid, g] : by) groups_.push_back(g);
}

LmmProblem::Solution LmmProblem::solve(const std::array<double, 3>& theta) const {
    using Eigen::Matrix2d;
    using Eigen::Vector2d;
    Matrix2d lambda;
    lambda << theta[0], 0.0, theta[1], theta[2];

    Matrix2d sxx = Matrix2d::Zero();
    Vector2d sxy = Vector2d::Zero();
    double syy = 0.0;
    double logdet_a = 0.0;
    for (const auto& g : groups_) {
        Matrix2d m;
        m << g.ztz[0], g.ztz[1], g.ztz[1], g.ztz[2];
        const Vector2d zy(g.zty[0], g.zty[1]);
        const Matrix2d ml = m * lambda;
        const Matrix2d a = lambda.transpose() * ml + Matrix2d::Identity();
        const Eigen::LLT<Matrix2d> llt(a);
        const Matrix2d l = llt.matrixL();
        logdet_a += 2.0 * (std::log(l(0, 0)) + std::log(l(1, 1)));
        const Vector2d lzy = lambda.transpose() * zy;
        sxx += m - ml * llt.solve(ml.transpose());
        sxy += zy - ml * llt.solve(lzy);
        syy += g.yty - lzy.dot(llt.solve(lzy));
    }
    const Eigen::LLT<Matrix2d> fx(sxx);
    if (fx.info() != Eigen::Success) throw Error(ErrorCode::InsufficientData, "fixed-effect design is singular");
    const Vector2d beta = fx.solve(sxy);
    const Matrix2d cov = fx.solve(Matrix2d::Identity());
    const Matrix2d lx = fx.matrixL();
    const double dof = static_cast<double>(n_) - 2.0;
    const double r2 = std::max(syy - beta.dot(sxy), std::numeric_limits<double>::min());

    Solution s;
    s.beta[0] = beta(0);
    s.beta[1] = beta(1);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) s.cov[i][j] = cov(i, j);
    s.sigma2 = r2 / dof;
    s.deviance = logdet_a + 2.0 * (std::log(lx(0, 0)) + std::log(lx(1, 1))) +
                 dof * (1.0 + std::log(2.0 * M_PI * r2 / dof));
    return s;
}

double LmmProblem::deviance(const std::array<double, 3>& theta) const { return solve(theta).deviance; }

namespace {

using Vec3 = Eigen::Vector3d;

struct Minimum {
    Vec3 x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
};

Vec3 numeric_gradient(const LmmProblem& p, const Vec3& x, double fx) {
    Vec3 g;
    for (int i = 0; i < 3; ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
        Vec3 up = x, dn = x;
        up(i) += h;
        dn(i) -= h;
        const double fu = p.deviance({up(0), up(1), up(2)});
        const double fd = p.deviance({dn(0), dn(1), dn(2)});
        g(i) = std::isfinite(fu) && std::isfinite(fd) ? (fu - fd) / (2.0 * h) : 0.0;
    }
    (void)fx;
    return g;
}

Minimum bfgs(const LmmProblem& p, Vec3 x, double tol, int max_iter) {
    auto f = [&](const Vec3& v) {
        const double d = p.deviance({v(0), v(1), v(2)});
        return std::isfinite(d) ? d : std::numeric_limits<double>::infinity();
    };
    Minimum out;
    double fx = f(x);
    Vec3 g = numeric_gradient(p, x, fx);
    Eigen::Matrix3d h = Eigen::Matrix3d::Identity();
    int stalls = 0;
    for (int it = 1; it <= max_iter; ++it) {
        out.iterations = it;
        Vec3 dir = -h * g;
        if (dir.dot(g) >= 0.0) {
            h.setIdentity();
            dir = -g;
        }
        // Keep trial steps in a sane range; theta lives on the scale of sd ratios.
        const double len = dir.norm();
        if (len > 2.0) dir *= 2.0 / len;
        double step = 1.0;
        const double slope = dir.dot(g);
        Vec3 xn;
        double fn = fx;
        bool moved = false;
        for (int ls = 0; ls < 40; ++ls) {
            xn = x + step * dir;
            fn = f(xn);
            if (fn <= fx + 1e-4 * step * slope) {
                moved = true;
                break;
            }
            step *= 0.5;
        }
        const double gmax = g.cwiseAbs().maxCoeff();
        if (!moved) {
            if (gmax < 1e-3) {
                out.converged = true;
                break;
            }
            if (++stalls > 2) break;
            h.setIdentity();
            continue;
        }
        stalls = 0;
        const Vec3 gn = numeric_gradient(p, xn, fn);
        const Vec3 s = xn - x;
        const Vec3 y = gn - g;
        const double sy = s.dot(y);
        if (sy > 1e-12) {
            const double rho = 1.0 / sy;
            const Eigen::Matrix3d i3 = Eigen::Matrix3d::Identity();
            h = (i3 - rho * s * y.transpose()) * h * (i3 - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        const double change = fx - fn;
        x = xn;
        fx = fn;
        g = gn;
        if (change < tol && g.cwiseAbs().maxCoeff() < 1e-3) {
            out.converged = true;
            break;
        }
    }
    out.x = x;
    out.f = fx;
    return out;
}

FixedEffect wald(double est, double var) {
    FixedEffect fe;
    fe.estimate = est;
    fe.se = std::sqrt(std::max(var, 0.0));
    fe.z = fe.se > 0 ? est / fe.se : 0.0;
    fe.p = normal_two_sided_p(fe.z);
    return fe;
}

}  // namespace

LmmFit fit_lmm(std::span<const LmmObservation> obs, const LmmOptions& options) {
    const LmmProblem problem(obs);
    if (problem.groups() < 2 || problem.n_obs() < 4) {
        throw Error(ErrorCode::InsufficientData, "mixed model needs at least two participants");
    }
    LmmFit fit;
    fit.n_participants = problem.groups();
    fit.n_obs = problem.n_obs();

    std::array<double, 3> theta{0.0, 0.0, 0.0};
    if (options.zero_random_effects) {
        fit.converged = true;
        fit.message = "random-effect covariance constrained to zero";
    } else {
        std::mt19937_64 rng(options.seed);
        std::normal_distribution<double> nd(0.0, 1.0);
        std::vector<Minimum> runs;
        for (int r = 0; r < std::max(1, options.restarts); ++r) {
            Vec3 start(0.5, 0.0, 0.05);
            if (r > 0) start = Vec3(std::abs(nd(rng)) * 1.5, nd(rng) * 0.2, std::abs(nd(rng)) * 0.15);
            runs.push_back(bfgs(problem, start, options.tolerance, options.max_iterations));
        }
        fit.restarts_run = static_cast<int>(runs.size());
        auto best = std::min_element(runs.begin(), runs.end(),
                                     [](const Minimum& a, const Minimum& b) { return a.f < b.f; });
        double spread = 0.0;
        for (const auto& m : runs) {
            if (m.converged) spread = std::max(spread, m.f - best->f);
        }
        fit.restart_spread = spread;
        fit.converged = best->converged;
        fit.iterations = best->iterations;
        theta = {best->x(0), best->x(1), best->x(2)};
        // Canonical sign: non-negative diagonal of the Cholesky factor.
        if (theta[0] < 0) {
            theta[0] = -theta[0];
            theta[1] = -theta[1];
        }
        theta[2] = std::abs(theta[2]);
        fit.message = fit.converged ? "converged" : "did not converge within the iteration limit";
    }

    const auto sol = problem.solve(theta);
    fit.theta = theta;
    fit.intercept = wald(sol.beta[0], sol.sigma2 * sol.cov[0][0]);
    fit.slope = wald(sol.beta[1], sol.sigma2 * sol.cov[1][1]);
    fit.sd_residual = std::sqrt(sol.sigma2);
    const double d00 = sol.sigma2 * theta[0] * theta[0];
    const double d01 = sol.sigma2 * theta[0] * theta[1];
    const double d11 = sol.sigma2 * (theta[1] * theta[1] + theta[2] * theta[2]);
    fit.sd_intercept = std::sqrt(d00);
    fit.sd_slope = std::sqrt(d11);
    fit.corr = (d00 > 0 && d11 > 0) ? std::clamp(d01 / std::sqrt(d00 * d11), -1.0, 1.0) : 0.0;
    fit.reml_loglik = -0.5 * sol.deviance;
    return fit;
}

}  // namespace moods::stats
