#include "dqkd/estimation.hpp"

#include <cmath>

namespace dqkd {

double compensate_polarization(std::span<const SamplePair> pairs) {
    if (pairs.size() < kMinCompensationPairs)
        throw std::invalid_argument("polarization compensation needs at least 100 pairs");
    double cross = 0.0, dot = 0.0;
    for (const SamplePair& sp : pairs) {
        cross += sp.sent.x * sp.measured.p - sp.sent.p * sp.measured.x;
        dot += sp.sent.x * sp.measured.x + sp.sent.p * sp.measured.p;
    }
    if (cross == 0.0 && dot == 0.0) return 0.0;
    return std::atan2(cross, dot);
}

void apply_compensation(std::span<SamplePair> pairs, double theta) {
    for (SamplePair& sp : pairs) sp.measured = rotate(sp.measured, -theta);
}

CovarianceEstimate estimate_parameters(std::span<const SamplePair> pairs, const SessionConfig& /*cfg*/,
                                       const ReceiverConfig& rcv, double z) {
    if (pairs.size() < kMinEstimationPairs)
        throw std::invalid_argument("parameter estimation needs at least 1000 pairs");

    const double m = static_cast<double>(pairs.size());
    double mx = 0, mp = 0, my2 = 0, my3 = 0;
    for (const SamplePair& sp : pairs) {
        mx += sp.sent.x;
        mp += sp.sent.p;
        my2 += sp.measured.x;
        my3 += sp.measured.p;
    }
    mx /= m; mp /= m; my2 /= m; my3 /= m;

    double vx = 0, vp = 0, cx = 0, cp = 0;
    for (const SamplePair& sp : pairs) {
        const double dx = sp.sent.x - mx, dp = sp.sent.p - mp;
        vx += dx * dx;
        vp += dp * dp;
        cx += dx * (sp.measured.x - my2);
        cp += dp * (sp.measured.p - my3);
    }
    if (!(vx > 0.0 && vp > 0.0))
        throw EstimationError("revealed data carry no modulation");

    CovarianceEstimate est;
    est.n_used = pairs.size();
    est.t_hat = 0.5 * (cx / vx + cp / vp);
    if (!(est.t_hat > 0.0))
        throw EstimationError("estimated transmission is not positive");

    double resid = 0.0;
    for (const SamplePair& sp : pairs) {
        const double ex = (sp.measured.x - my2) - est.t_hat * (sp.sent.x - mx);
        const double ep = (sp.measured.p - my3) - est.t_hat * (sp.sent.p - mp);
        resid += ex * ex + ep * ep;
    }
    const double sigma2 = resid / (2.0 * m);
    const double t2 = est.t_hat * est.t_hat;

    // Negative excess noise is unphysical; zero is the conservative floor.
    est.xi_hat = std::max(0.0, (sigma2 - 1.0 - rcv.electronic_noise) / t2);
    est.sigma_t = std::sqrt(sigma2 / (vx + vp));
    est.sigma_xi = sigma2 * std::sqrt(2.0 / (2.0 * m)) / t2;
    est.t_lo = est.t_hat - z * est.sigma_t;
    est.xi_hi = est.xi_hat + z * est.sigma_xi;
    return est;
}

CovarianceEstimate rescale_estimate(const CovarianceEstimate& est, double scale, double z) {
    if (!(scale >= 1.0)) throw std::invalid_argument("rescale factor must be >= 1");
    CovarianceEstimate out = est;
    const double shrink = 1.0 / std::sqrt(scale);
    out.n_used = static_cast<std::uint64_t>(std::llround(static_cast<double>(est.n_used) * scale));
    out.sigma_t = est.sigma_t * shrink;
    out.sigma_xi = est.sigma_xi * shrink;
    out.t_lo = out.t_hat - z * out.sigma_t;
    out.xi_hi = out.xi_hat + z * out.sigma_xi;
    return out;
}

}  // namespace dqkd
