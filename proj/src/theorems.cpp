#include "distortlab/theorems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "distortlab/error.hpp"
#include "distortlab/parallel.hpp"

namespace distortlab {

namespace {

struct JacobianSurvey {
    std::vector<Matrix> jacobians;
    double eps_hat = 0.0;
    Matrix t_b;
    std::vector<double> devs;
};

double sampled_distortion(std::span<const Matrix> jacs) {
    std::vector<double> dist(jacs.size());
    parallel_for(jacs.size(), [&](std::size_t i) { dist[i] = pointwise_distortion(jacs[i]); });
    double eps = 0.0;
    for (double d : dist) eps = std::max(eps, d);
    return eps;
}

JacobianSurvey survey(const DifferentiableMap& map, const Ball& ball, std::size_t n,
                      std::uint64_t seed) {
    if (ball.dim() != map.dim()) throw InvalidInput("theorem check: ball and map dimensions differ");
    const BallSample sample = sample_ball(ball, n, seed);
    JacobianSurvey s;
    s.jacobians = jacobians_on(map, sample);
    s.eps_hat = sampled_distortion(s.jacobians);
    s.t_b = polar_orthogonal_factor(sample_mean(s.jacobians));
    s.devs = deviations(s.jacobians, s.t_b);
    return s;
}

TheoremReport make_report(const JacobianSurvey& s, std::size_t n, std::uint64_t seed) {
    const DeviationMoments m = deviation_moments(s.devs);
    TheoremReport r;
    r.eps_hat = s.eps_hat;
    r.t_b = s.t_b;
    r.mean_dev = m.mean;
    r.p4_dev = m.p4;
    r.max_dev = m.max;
    r.n = n;
    r.seed = seed;
    if (s.eps_hat > 0.0) {
        r.ratio_linear = m.mean / s.eps_hat;
        r.ratio_sqrt = m.mean / std::sqrt(s.eps_hat);
        r.ratio_p4_sqrt = m.p4 / std::sqrt(s.eps_hat);
    }
    return r;
}

}  // namespace

Matrix best_orthogonal_T(const DifferentiableMap& map, const BallSample& sample) {
    const std::vector<Matrix> jacs = jacobians_on(map, sample);
    return polar_orthogonal_factor(sample_mean(jacs));
}

TheoremReport theorem1_check(const DifferentiableMap& map, const Ball& ball, std::size_t n,
                             std::uint64_t seed) {
    return make_report(survey(map, ball, n, seed), n, seed);
}

TheoremReport theorem2_check(const DifferentiableMap& map, const Ball& ball, std::size_t n,
                             std::uint64_t seed) {
    return make_report(survey(map, ball, n, seed), n, seed);
}

QuadraticRelation quadratic_relation_check(const DifferentiableMap& map, const BallSample& sample) {
    const std::vector<Matrix> jacs = jacobians_on(map, sample);
    const int d = map.dim();
    std::vector<double> residual(jacs.size());
    std::vector<double> direct(jacs.size());
    std::vector<double> gap(jacs.size());

    parallel_for(jacs.size(), [&](std::size_t p) {
        // grad(i, j) = d W_j / d x_i where W = Phi - id, i.e. (J - I)^T.
        const Matrix grad = (jacs[p] - Matrix::Identity(d, d)).transpose();
        double worst = 0.0;
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                double v = grad(i, j) + grad(j, i);
                for (int l = 0; l < d; ++l) v += grad(i, l) * grad(j, l);
                worst = std::max(worst, std::abs(v));
            }
        }
        const Matrix gram = jacs[p].transpose() * jacs[p] - Matrix::Identity(d, d);
        residual[p] = worst;
        direct[p] = gram.cwiseAbs().maxCoeff();
        gap[p] = std::abs(worst - direct[p]);
    });

    QuadraticRelation q;
    for (std::size_t p = 0; p < jacs.size(); ++p) {
        q.max_residual = std::max(q.max_residual, residual[p]);
        q.max_direct = std::max(q.max_direct, direct[p]);
        q.identity_gap = std::max(q.identity_gap, gap[p]);
    }
    q.eps_hat = sampled_distortion(jacs);
    return q;
}

constexpr double kRoundingFloor = 1e-12;

TheoremReport tail_check(const DifferentiableMap& map, const Ball& ball, std::size_t n,
                         std::uint64_t seed, std::span<const double> lambdas,
                         std::optional<double> calibration_c) {
    if (lambdas.empty()) throw InvalidInput("tail_check: empty lambda list");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] >= 1.0)) throw InvalidInput("tail_check: lambda must be >= 1");
        if (i > 0 && lambdas[i] < lambdas[i - 1]) throw InvalidInput("tail_check: lambdas not sorted");
    }
    if (calibration_c && !(*calibration_c > 0.0)) {
        throw InvalidInput("tail_check: calibration constant must be positive");
    }

    const JacobianSurvey s = survey(map, ball, n, seed);
    TheoremReport r = make_report(s, n, seed);
    // Deviations at rounding level carry no tail: a rigid map has devs of
    // order 1e-16 and would otherwise calibrate onto its own noise.
    std::vector<double> devs = s.devs;
    for (double& d : devs)
        if (d <= kRoundingFloor) d = 0.0;
    r.calibration_c = calibration_c ? *calibration_c : calibrate_tail_constant(devs, s.eps_hat);
    r.tail = tail_fractions(devs, r.calibration_c * s.eps_hat, lambdas);
    r.tail_pass = true;
    for (const TailPoint& t : r.tail) {
        const double bound = std::exp(-t.lambda);
        const double limit = bound + 3.0 * binomial_sigma(bound, n);
        r.tail_bounds.push_back(limit);
        if (t.fraction > limit) r.tail_pass = false;
    }
    return r;
}

std::optional<double> tail_exponent(std::span<const TailPoint> tail) {
    double kappa = 0.0;
    std::size_t used = 0;
    for (const TailPoint& t : tail) {
        if (t.fraction <= 0.0) continue;
        kappa = std::max(kappa, -std::log(t.fraction) / t.lambda);
        ++used;
    }
    if (used < 2) return std::nullopt;
    return kappa;
}

SharpnessResult sharpness_experiment(double eps, std::size_t n, std::uint64_t seed, int dim,
                                     double clamp, std::span<const double> lambdas) {
    if (!(eps >= 0.0 && eps <= 0.3)) throw InvalidInput("sharpness_experiment: eps must be in [0, 0.3]");
    if (dim < 2) throw InvalidInput("sharpness_experiment: dim must be >= 2");
    SharpnessResult out;
    out.eps = eps;
    if (eps == 0.0) {
        out.degenerate = true;
        return out;
    }
    const auto twist = make_slow_twist(dim, log_profile(eps / 2.0, clamp), Matrix::Identity(dim, dim));
    out.report = tail_check(*twist, unit_ball(dim), n, seed, lambdas);
    out.kappa = tail_exponent(out.report.tail);
    out.lambdas_used = static_cast<std::size_t>(std::count_if(
        out.report.tail.begin(), out.report.tail.end(), [](const TailPoint& t) { return t.fraction > 0.0; }));
    return out;
}

ClaimsStats jacobian_claims_check(const DifferentiableMap& map, const Ball& ball, std::size_t n,
                                  std::uint64_t seed) {
    if (ball.dim() != map.dim()) throw InvalidInput("jacobian_claims_check: dimension mismatch");
    const BallSample sample = sample_ball(ball, n, seed);
    const std::vector<Matrix> jacs = jacobians_on(map, sample);
    const int d = map.dim();
    Matrix abs_sum = Matrix::Zero(d, d);
    Vector sq_sum = Vector::Zero(d);
    for (const Matrix& j : jacs) {
        Matrix dev = j - Matrix::Identity(d, d);
        abs_sum += dev.cwiseAbs();
        sq_sum += dev.diagonal().cwiseAbs2();
    }
    const double count = static_cast<double>(jacs.size());
    ClaimsStats c;
    for (int i = 0; i < d; ++i) {
        c.diagonal_l1 = std::max(c.diagonal_l1, abs_sum(i, i) / count);
        c.diagonal_l2 = std::max(c.diagonal_l2, std::sqrt(sq_sum(i) / count));
        for (int k = 0; k < d; ++k)
            if (k != i) c.off_diagonal_l1 = std::max(c.off_diagonal_l1, abs_sum(i, k) / count);
    }
    return c;
}

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidInput("fit_loglog: size mismatch");
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    if (lx.size() < 2) throw InvalidInput("fit_loglog: need at least two positive pairs");
    const double m = static_cast<double>(lx.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (!(sxx > 0.0)) throw InvalidInput("fit_loglog: x values are all equal");
    const double slope = sxy / sxx;
    return LogLogFit{slope, std::exp(my - slope * mx)};
}

SweepResult eps_sweep(const MapFamily& family, std::span<const double> eps_grid, const Ball& ball,
                      std::size_t n, std::uint64_t seed) {
    if (eps_grid.size() < 2) throw InvalidInput("eps_sweep: need at least two eps values");
    SweepResult out;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double eps : eps_grid) {
        const MapPtr map = family(eps);
        const TheoremReport r = theorem2_check(*map, ball, n, seed);
        out.eps_grid.push_back(eps);
        out.eps_hats.push_back(r.eps_hat);
        out.mean_devs.push_back(r.mean_dev);
        out.p4_devs.push_back(r.p4_dev);
        if (r.eps_hat > 0.0) {
            lo = std::min(lo, r.ratio_linear);
            hi = std::max(hi, r.ratio_linear);
        }
    }
    const LogLogFit fit = fit_loglog(out.eps_hats, out.mean_devs);
    out.fitted_slope = fit.slope;
    out.fitted_constant = fit.constant;
    out.ratio_spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace distortlab
