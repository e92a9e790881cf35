#include "moods/stats/its.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "moods/domain.hpp"
#include "moods/stats/distributions.hpp"

namespace moods::stats {

ZScored zscore(std::span<const double> x) {
    ZScored z;
    if (x.empty()) return z;
    z.mean = mean(x);
    z.sd = std::sqrt(variance(x, 0));
    z.values.resize(x.size(), 0.0);
    if (!(z.sd > 0.0)) {
        z.sd = 0.0;
        z.degenerate = true;
        return z;
    }
    for (std::size_t i = 0; i < x.size(); ++i) z.values[i] = (x[i] - z.mean) / z.sd;
    return z;
}

std::map<std::string, ZScored> zscore_per_participant(const std::map<std::string, std::vector<double>>& series) {
    std::map<std::string, ZScored> out;
    for (const auto& [pid, xs] : series) out[pid] = zscore(xs);
    return out;
}

ItsReport interrupted_time_series(std::span<const ItsParticipant> cohort, const ItsOptions& options) {
    if (options.window < 1) throw Error(ErrorCode::Validation, "ITS window must be >= 1");
    struct Row {
        int k;
        double z;
    };
    std::vector<Row> rows;
    ItsReport rep;
    rep.window = options.window;
    for (const auto& p : cohort) {
        std::vector<ItsDay> days = p.days;
        std::sort(days.begin(), days.end(), [](const ItsDay& a, const ItsDay& b) { return a.day < b.day; });
        std::vector<double> values;
        for (const auto& d : days) values.push_back(d.value);
        const auto z = zscore(values);
        std::vector<std::size_t> pre, post;
        for (std::size_t i = 0; i < days.size(); ++i) {
            if (days[i].week < p.action_week) pre.push_back(i);
            else if (days[i].week > p.action_week) post.push_back(i);
        }
        if (z.degenerate || pre.empty() || post.empty()) {
            rep.excluded.push_back(p.participant);
            continue;
        }
        const auto w = static_cast<std::size_t>(options.window);
        const std::size_t npre = std::min(w, pre.size());
        for (std::size_t j = 0; j < npre; ++j) {
            rows.push_back({-static_cast<int>(npre - j), z.values[pre[pre.size() - npre + j]]});
        }
        for (std::size_t j = 0; j < std::min(w, post.size()); ++j) {
            rows.push_back({static_cast<int>(j + 1), z.values[post[j]]});
        }
        ++rep.n_participants;
    }
    std::sort(rep.excluded.begin(), rep.excluded.end());
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (n < 5) throw Error(ErrorCode::InsufficientData, "ITS needs pre- and post-action data");

    Eigen::MatrixXd x(n, 4);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double k = rows[i].k;
        const double d = rows[i].k > 0 ? 1.0 : 0.0;
        x.row(i) << 1.0, k, d, d * k;
        y(i) = rows[i].z;
    }
    const Eigen::Matrix4d xtx = x.transpose() * x;
    const Eigen::FullPivLU<Eigen::Matrix4d> lu(xtx);
    if (lu.rank() < 4) throw Error(ErrorCode::InsufficientData, "ITS design is rank deficient");
    const Eigen::Vector4d beta = lu.solve(x.transpose() * y);
    const Eigen::VectorXd resid = y - x * beta;
    const double dof = static_cast<double>(n) - 4.0;
    const double s2 = resid.squaredNorm() / dof;
    const Eigen::Matrix4d cov = s2 * lu.inverse();

    rep.n_points = static_cast<std::size_t>(n);
    rep.intercept = beta(0);
    rep.pre_slope = beta(1);
    rep.level_change = beta(2);
    rep.slope_change = beta(3);
    rep.post_slope = beta(1) + beta(3);
    rep.residual_sd = std::sqrt(s2);
    rep.level_change_se = std::sqrt(std::max(cov(2, 2), 0.0));
    rep.level_change_t = rep.level_change_se > 0 ? beta(2) / rep.level_change_se : 0.0;
    rep.level_change_p = student_t_two_sided_p(rep.level_change_t, dof);
    const double sc_se = std::sqrt(std::max(cov(3, 3), 0.0));
    rep.slope_change_p = sc_se > 0 ? student_t_two_sided_p(beta(3) / sc_se, dof) : 1.0;

    std::map<int, std::pair<double, std::size_t>> by_k;
    for (const auto& r : rows) {
        by_k[r.k].first += r.z;
        by_k[r.k].second += 1;
    }
    for (const auto& [k, acc] : by_k) {
        ItsPoint pt;
        pt.k = k;
        pt.n = acc.second;
        pt.observed_mean = acc.first / static_cast<double>(acc.second);
        const double d = k > 0 ? 1.0 : 0.0;
        pt.fitted = beta(0) + beta(1) * k + d * (beta(2) + beta(3) * k);
        pt.counterfactual = beta(0) + beta(1) * k;
        rep.points.push_back(pt);
    }
    return rep;
}

}  // namespace moods::stats
