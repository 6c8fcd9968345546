#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "distortlab/ball.hpp"
#include "distortlab/maps.hpp"

namespace distortlab {

/// Result of one theorem check on one ball.
///
/// eps_hat is the sampled distortion over the same points used for the
/// deviation statistics. t_b is the orthogonal approximant; mean_dev,
/// p4_dev and max_dev describe hs_norm(Phi'(x) - t_b) over the sample.
struct TheoremReport {
    double eps_hat = 0.0;
    Matrix t_b;
    double mean_dev = 0.0;
    double p4_dev = 0.0;
    double max_dev = 0.0;
    std::vector<TailPoint> tail;
    /// exp(-lambda) + 3 binomial sigma, aligned with `tail`.
    std::vector<double> tail_bounds;
    double calibration_c = 0.0;
    bool tail_pass = true;

    /// mean_dev / eps_hat (rate of the refined theorem).
    double ratio_linear = 0.0;
    /// mean_dev / sqrt(eps_hat) (rate of the first theorem).
    double ratio_sqrt = 0.0;
    /// p4_dev / sqrt(eps_hat) (fourth-moment corollary).
    double ratio_p4_sqrt = 0.0;

    std::size_t n = 0;
    std::uint64_t seed = 0;
};

/// Polar factor of the sample-averaged Jacobian. Throws DegenerateInput when
/// the averaged Jacobian is rank-deficient.
Matrix best_orthogonal_T(const DifferentiableMap& map, const BallSample& sample);

/// mean_dev against best_orthogonal_T; headline ratio is ratio_sqrt.
TheoremReport theorem1_check(const DifferentiableMap& map, const Ball& ball, std::size_t n,
                             std::uint64_t seed);
/// Same statistics; headline ratio is ratio_linear.
TheoremReport theorem2_check(const DifferentiableMap& map, const Ball& ball, std::size_t n,
                             std::uint64_t seed);

struct QuadraticRelation {
    /// max |d_i W_j + d_j W_i + sum_l d_i W_l d_j W_l| with W = Phi - id.
    double max_residual = 0.0;
    /// max |Phi'^T Phi' - I| entrywise, computed directly.
    double max_direct = 0.0;
    /// Largest |max_residual - max_direct| observed pointwise.
    double identity_gap = 0.0;
    double eps_hat = 0.0;
};

QuadraticRelation quadratic_relation_check(const DifferentiableMap& map, const BallSample& sample);

/// Tail fractions of hs_norm(Phi' - T_B) above calibration_c * lambda * eps_hat.
/// Without `calibration_c` the constant is fit so that fraction(1) <= exp(-1).
/// tail_pass holds when every fraction is <= exp(-lambda) + 3 binomial sigma.
/// Deviations <= 1e-12 count as exact zeros.
TheoremReport tail_check(const DifferentiableMap& map, const Ball& ball, std::size_t n,
                         std::uint64_t seed, std::span<const double> lambdas,
                         std::optional<double> calibration_c = std::nullopt);

/// Smallest kappa with fraction(lambda) >= exp(-kappa * lambda) over the
/// lambdas whose fraction is positive. Lambdas with zero fraction lie beyond
/// the largest deviation and are skipped. Empty when fewer than two lambdas
/// have a positive fraction.
std::optional<double> tail_exponent(std::span<const TailPoint> tail);

struct SharpnessResult {
    double eps = 0.0;
    bool degenerate = false;
    std::optional<double> kappa;
    /// Number of lambdas that entered the kappa estimate.
    std::size_t lambdas_used = 0;
    TheoremReport report;
};

inline constexpr double kDefaultLambdas[] = {1.0, 1.5, 2.0, 3.0, 4.0};

/// Log-profile slow twist with t f' -> eps / 2 above the clamp, tail-checked on
/// B(0, 1). eps must lie in [0, 0.3]; eps == 0 is flagged degenerate.
SharpnessResult sharpness_experiment(double eps, std::size_t n, std::uint64_t seed, int dim = 2,
                                     double clamp = 0.1,
                                     std::span<const double> lambdas = kDefaultLambdas);

struct ClaimsStats {
    /// max_i mean |d psi_i / d x_i - 1|
    double diagonal_l1 = 0.0;
    /// max_{i != j} mean |d psi_i / d x_j|
    double off_diagonal_l1 = 0.0;
    /// max_i sqrt(mean (d psi_i / d x_i - 1)^2)
    double diagonal_l2 = 0.0;
};

/// Coordinate statistics of the Jacobian. The map should already be
/// normalized so that its best-fit Euclidean motion is the identity.
ClaimsStats jacobian_claims_check(const DifferentiableMap& map, const Ball& ball, std::size_t n,
                                  std::uint64_t seed);

struct LogLogFit {
    double slope = 0.0;
    double constant = 0.0;  // y ~ constant * x^slope
};

/// Least-squares line through (log x, log y). Requires >= 2 positive pairs.
LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y);

struct SweepResult {
    std::vector<double> eps_grid;
    std::vector<double> eps_hats;
    std::vector<double> mean_devs;
    std::vector<double> p4_devs;
    /// Fit of mean_dev against eps_hat.
    double fitted_slope = 0.0;
    double fitted_constant = 0.0;
    /// max / min of mean_dev / eps_hat over the grid.
    double ratio_spread = 0.0;
};

using MapFamily = std::function<MapPtr(double eps)>;

/// Runs theorem2_check for each eps (same sample seed throughout) and fits
/// the log-log rate of mean_dev in eps_hat.
SweepResult eps_sweep(const MapFamily& family, std::span<const double> eps_grid, const Ball& ball,
                      std::size_t n, std::uint64_t seed);

}  // namespace distortlab
