#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "distortlab/linalg.hpp"
#include "distortlab/maps.hpp"

namespace distortlab {

/// Vector field sampled on the uniform grid over the cube [-L, L]^D.
///
/// Nodes are numbered row-major over the multi-index (first axis slowest);
/// node coordinates are -L + i_k * h with h = 2L / (points - 1). Values are
/// stored node-major, D components per node.
class GridField {
public:
    GridField(int dim, double half_width, int points, std::vector<double> values);

    int dim() const { return dim_; }
    double half_width() const { return half_width_; }
    int points() const { return points_; }
    double spacing() const { return 2.0 * half_width_ / (points_ - 1); }
    std::size_t node_count() const { return node_count_; }

    std::vector<int> multi_index(std::size_t node) const;
    std::size_t node_at(const std::vector<int>& index) const;
    /// Stride of axis k in node numbering.
    std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }
    Vector coordinates(std::size_t node) const;

    double value(std::size_t node, int component) const {
        return values_[node * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(component)];
    }
    Vector value(std::size_t node) const;
    const std::vector<double>& values() const { return values_; }

private:
    int dim_;
    double half_width_;
    int points_;
    std::size_t node_count_;
    std::vector<std::size_t> strides_;
    std::vector<double> values_;
};

/// Samples f at every node. Requires half_width >= 4 and points >= 2.
GridField sample_grid_field(int dim, double half_width, int points, const VectorFunction& f);

/// Per-node D x D matrices over the grid of a GridField.
struct GridMatrices {
    int dim = 0;
    std::vector<Matrix> at;  // indexed by node
};

/// grad(i, j) = d Omega_i / d x_j: central differences inside, second-order
/// one-sided at the faces. Exact on linear fields. Requires >= 5 points per axis.
GridMatrices grid_gradient(const GridField& field);

/// f_ij = d_j Omega_i + d_i Omega_j, symmetric by construction.
GridMatrices symmetrized_gradient(const GridField& field);

struct AntisymmetricFit {
    Matrix s;
    /// max_ij L2(B(0,1)) norm of grad_ij - s_ij.
    double residual = 0.0;
    /// max_ij L2(B(0,4)) norm of f_ij.
    double hypothesis_norm = 0.0;
    /// residual / hypothesis_norm; 0 on the kernel, where the residual is
    /// rounding noise.
    double constant = 0.0;
    /// hypothesis_norm vanished: the field is in the kernel (an antisymmetric linear map).
    bool exact_kernel = false;
};

/// s = antisymmetric part of the average gradient over nodes inside B(0,1).
/// L2 norms are grid sums over nodes inside the ball weighted by h^D.
AntisymmetricFit antisymmetric_approximation(const GridField& field);

/// Grid-free variant for higher dimensions: the same fit with L2 norms
/// estimated by Monte Carlo over n uniform points of B(0,1) and B(0,4), and
/// gradients from `gradient` (central differences when absent).
AntisymmetricFit antisymmetric_approximation_sampled(
    int dim, const VectorFunction& field, std::size_t n, std::uint64_t seed,
    const std::optional<JacobianFunction>& gradient = std::nullopt);

/// Volume of the unit ball in R^dim.
double unit_ball_volume(int dim);

/// sum_ij of squared L2(B(0,1)) norms of grad_ij - s_ij, for any constant s.
double summed_l2_residual(const GridField& field, const Matrix& s);

/// Max over nodes in B(0,1) (at least two nodes from every face) and all
/// (i, j, k) of |2 d_j d_k Omega_i - (d_j f_ik + d_k f_ij - d_i f_jk)|,
/// with f = symmetrized_gradient(field). Requires >= 9 points per axis.
double third_derivative_identity_check(const GridField& field);

/// Random trigonometric polynomial field of total frequency degree <= degree:
/// Omega_i(x) = sum_{k != 0, |k|_1 <= degree} a_ik cos(k.x) + b_ik sin(k.x),
/// coefficients standard normal scaled by 1 / |k|_1.
VectorFunction random_trig_field(int dim, int degree, std::uint64_t seed);

/// CSV: one header line "dim=D,L=<L>,points=<n>", then one row per node
/// with D indices followed by D values (17 significant digits).
void write_grid_csv(const GridField& field, std::ostream& out);
GridField read_grid_csv(std::istream& in);

/// Binary: the same header line terminated by '\n', then node_count * D
/// IEEE-754 doubles, little-endian, in node-major order.
void write_grid_binary(const GridField& field, std::ostream& out);
GridField read_grid_binary(std::istream& in);

}  // namespace distortlab
