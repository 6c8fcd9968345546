#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "distortlab/linalg.hpp"

namespace distortlab {

/// Ordered points y_1..y_k of R^D, stored column-wise (D x k).
struct LabeledPointSet {
    Matrix points;

    int dim() const { return static_cast<int>(points.rows()); }
    std::size_t size() const { return static_cast<std::size_t>(points.cols()); }
};

/// Requires k >= 2 finite points.
LabeledPointSet make_point_set(Matrix points);

/// Largest pairwise distance.
double diameter(const LabeledPointSet& e);

/// delta = max_{i<j} max(r_ij, 1/r_ij) - 1 with r_ij = |z_i - z_j| / |y_i - y_j|.
/// Throws DegenerateInput naming the pair when two points of `source` coincide.
double pairwise_distortion(const LabeledPointSet& source, const LabeledPointSet& target);

struct AlignmentResult {
    EuclideanMotion motion;
    /// max_i |z_i - motion(y_i)| / diam(source)
    double max_rel_err = 0.0;
    /// sqrt(mean_i |z_i - motion(y_i)|^2)
    double rms_err = 0.0;
    double delta_in = 0.0;
    bool proper_requested = false;
    /// Set when a proper motion was requested, k > D and the cross-covariance
    /// is rank-deficient, so the optimal proper motion is not unique.
    std::optional<std::string> warning;
};

/// Least-squares Euclidean motion taking source onto target (Kabsch with the
/// determinant correction when require_proper).
AlignmentResult procrustes_align(const LabeledPointSet& source, const LabeledPointSet& target,
                                 bool require_proper);

struct DeltaSweepRow {
    double delta = 0.0;
    double mean_max_rel_err = 0.0;
    double max_max_rel_err = 0.0;
};

/// For each delta: `trials` random configurations of k points in the unit cube
/// (minimum separation 1e-2), a perturbation scaled so the pairwise distortion
/// is exactly delta, then a random (possibly orientation-reversing) motion.
/// Alignment requires a proper motion when k <= D.
std::vector<DeltaSweepRow> delta_to_eps_sweep(int k, int dim, std::span<const double> delta_grid,
                                              std::size_t trials, std::uint64_t seed);

/// Random configuration used by the sweep.
LabeledPointSet random_configuration(int k, int dim, std::uint64_t seed, double min_separation = 1e-2);

/// Spearman rank correlation (average ranks for ties).
double spearman_correlation(std::span<const double> x, std::span<const double> y);

/// CSV: header line "dim=D", then one point per row with D comma-separated values.
void write_point_set_csv(const LabeledPointSet& e, std::ostream& out);
LabeledPointSet read_point_set_csv(std::istream& in);

}  // namespace distortlab
