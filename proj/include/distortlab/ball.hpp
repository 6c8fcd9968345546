#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "distortlab/linalg.hpp"

namespace distortlab {

/// Open ball B(center, radius).
struct Ball {
    Vector center;
    double radius = 1.0;

    int dim() const { return static_cast<int>(center.size()); }
    bool contains(const Vector& x) const { return (x - center).norm() < radius; }
};

Ball make_ball(Vector center, double radius);
Ball unit_ball(int dim);

enum class SamplingScheme { UniformRejection, Polar };

/// Uniform sample of a ball. Points are stored column-wise (dim x count).
/// Points are drawn in fixed blocks of `kBlockSize`, block b from the stream
/// derive_seed(seed, b); the sample is therefore a pure function of
/// (ball, count, seed, scheme) regardless of thread count.
struct BallSample {
    static constexpr std::size_t kBlockSize = 4096;

    Ball ball;
    Matrix points;
    std::uint64_t seed = 0;
    SamplingScheme scheme = SamplingScheme::Polar;

    std::size_t size() const { return static_cast<std::size_t>(points.cols()); }
    Vector point(std::size_t i) const { return points.col(static_cast<Eigen::Index>(i)); }
};

/// Rejection sampling is available for dim <= 6 only.
BallSample sample_ball(const Ball& ball, std::size_t count, std::uint64_t seed,
                       SamplingScheme scheme = SamplingScheme::Polar);

using MatrixField = std::function<Matrix(const Vector&)>;
using ScalarField = std::function<double(const Vector&)>;

/// Lifts a scalar field to a 1x1 matrix field; hs_norm then reduces to |.|.
MatrixField as_matrix_field(ScalarField f);

struct TailPoint {
    double lambda = 0.0;
    double fraction = 0.0;
};

/// Mean-oscillation statistics of a field over one ball sample.
///
/// h_b is the centering constant. mean_dev, p4_dev and max_dev are the
/// sample mean, fourth-moment root and maximum of hs_norm(f - h_b), so
/// mean_dev <= p4_dev <= max_dev always holds.
struct OscillationStats {
    Matrix h_b;
    double mean_dev = 0.0;
    double p4_dev = 0.0;
    double max_dev = 0.0;
    std::vector<TailPoint> tail;
};

struct DeviationMoments {
    double mean = 0.0;
    double p4 = 0.0;
    double max = 0.0;
};

DeviationMoments deviation_moments(std::span<const double> devs);

/// Evaluates f on every sample point. Throws EvaluationError naming the point
/// when f is non-finite there.
std::vector<Matrix> evaluate_field(const MatrixField& f, const BallSample& sample);

Matrix sample_mean(std::span<const Matrix> values);
std::vector<double> deviations(std::span<const Matrix> values, const Matrix& h);

/// Centering defaults to the sample mean when `given_h` is empty.
OscillationStats mean_oscillation(const MatrixField& f, const BallSample& sample,
                                  const std::optional<Matrix>& given_h = std::nullopt);
OscillationStats mean_oscillation(const ScalarField& f, const BallSample& sample,
                                  const std::optional<double>& given_h = std::nullopt);

/// Largest mean-centred mean oscillation over the given balls. A finite ball
/// family only yields a lower estimate of the BMO norm.
double bmo_norm_estimate(const MatrixField& f, std::span<const Ball> balls,
                         std::size_t n_per_ball, std::uint64_t seed,
                         SamplingScheme scheme = SamplingScheme::Polar);
double bmo_norm_estimate(const ScalarField& f, std::span<const Ball> balls,
                         std::size_t n_per_ball, std::uint64_t seed,
                         SamplingScheme scheme = SamplingScheme::Polar);

/// fraction(lambda) = #{dev > lambda * unit} / n for each lambda.
std::vector<TailPoint> tail_fractions(std::span<const double> devs, double unit,
                                      std::span<const double> lambdas);

/// Smallest constant C such that #{dev > C * norm} <= floor(n / e), i.e. the
/// calibration that makes fraction(lambda = 1) <= exp(-1). Returns 1 when the
/// deviations or the norm vanish.
double calibrate_tail_constant(std::span<const double> devs, double norm);

/// John-Nirenberg tail: fraction of the sample with
/// hs_norm(f - h_b) > calibration_c * lambda * norm_estimate.
/// lambdas must be non-empty, sorted, and >= 1.
std::vector<TailPoint> jn_tail(const MatrixField& f, const BallSample& sample,
                               const Matrix& h_b, std::span<const double> lambdas,
                               double norm_estimate, double calibration_c);
std::vector<TailPoint> jn_tail(const ScalarField& f, const BallSample& sample, double h_b,
                               std::span<const double> lambdas, double norm_estimate,
                               double calibration_c);

/// Binomial standard error sqrt(p (1 - p) / n).
double binomial_sigma(double p, std::size_t n);

}  // namespace distortlab
