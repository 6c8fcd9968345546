#include "distortlab/pde.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "distortlab/error.hpp"
#include "distortlab/parallel.hpp"
#include "distortlab/random.hpp"

namespace distortlab {

namespace {


double unit_volume_weight(const GridField& field) {
    return std::pow(field.spacing(), field.dim());
}

// d Omega_c / d x_axis at a node.
double axis_derivative(const GridField& field, std::size_t node, int axis, int c,
                       const std::vector<int>& index) {
    const double h = field.spacing();
    const std::size_t st = field.stride(axis);
    const int i = index[static_cast<std::size_t>(axis)];
    const int last = field.points() - 1;
    if (i > 0 && i < last) {
        return (field.value(node + st, c) - field.value(node - st, c)) / (2.0 * h);
    }
    if (i == 0) {
        return (-3.0 * field.value(node, c) + 4.0 * field.value(node + st, c) -
                field.value(node + 2 * st, c)) / (2.0 * h);
    }
    return (3.0 * field.value(node, c) - 4.0 * field.value(node - st, c) +
            field.value(node - 2 * st, c)) / (2.0 * h);
}

std::string header_line(const GridField& f) {
    std::ostringstream out;
    out.precision(17);
    out << "dim=" << f.dim() << ",L=" << f.half_width() << ",points=" << f.points();
    return out.str();
}

struct Header {
    int dim = 0;
    double half_width = 0.0;
    int points = 0;
};

Header parse_header(const std::string& line) {
    Header h;
    bool seen[3] = {false, false, false};
    std::istringstream in(line);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw InvalidInput("grid header: malformed item '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        try {
            if (key == "dim") {
                h.dim = std::stoi(val);
                seen[0] = true;
            } else if (key == "L") {
                h.half_width = std::stod(val);
                seen[1] = true;
            } else if (key == "points") {
                h.points = std::stoi(val);
                seen[2] = true;
            } else {
                throw InvalidInput("grid header: unknown key '" + key + "'");
            }
        } catch (const std::logic_error&) {
            throw InvalidInput("grid header: bad value for '" + key + "'");
        }
    }
    if (!seen[0] || !seen[1] || !seen[2]) throw InvalidInput("grid header: missing dim, L or points");
    return h;
}

std::size_t checked_node_count(int dim, int points) {
    std::size_t count = 1;
    for (int k = 0; k < dim; ++k) {
        count *= static_cast<std::size_t>(points);
        if (count > (std::size_t{1} << 32)) throw InvalidInput("GridField: grid too large");
    }
    return count;
}

}  // namespace

GridField::GridField(int dim, double half_width, int points, std::vector<double> values)
    : dim_(dim), half_width_(half_width), points_(points), node_count_(0), values_(std::move(values)) {
    if (dim < 1) throw InvalidInput("GridField: dim must be >= 1");
    if (!(half_width >= 4.0) || !std::isfinite(half_width)) {
        throw InvalidInput("GridField: half width L must be >= 4 so that B(0,4) fits");
    }
    if (points < 2) throw InvalidInput("GridField: need at least 2 points per axis");
    node_count_ = checked_node_count(dim, points);
    if (values_.size() != node_count_ * static_cast<std::size_t>(dim)) {
        throw InvalidInput("GridField: value array has wrong length");
    }
    for (double v : values_)
        if (!std::isfinite(v)) throw InvalidInput("GridField: non-finite value");
    strides_.assign(static_cast<std::size_t>(dim), 1);
    for (int k = dim - 2; k >= 0; --k) {
        strides_[static_cast<std::size_t>(k)] =
            strides_[static_cast<std::size_t>(k + 1)] * static_cast<std::size_t>(points);
    }
}

std::vector<int> GridField::multi_index(std::size_t node) const {
    std::vector<int> idx(static_cast<std::size_t>(dim_));
    for (int k = 0; k < dim_; ++k) {
        idx[static_cast<std::size_t>(k)] = static_cast<int>(node / strides_[static_cast<std::size_t>(k)]);
        node %= strides_[static_cast<std::size_t>(k)];
    }
    return idx;
}

std::size_t GridField::node_at(const std::vector<int>& index) const {
    std::size_t node = 0;
    for (int k = 0; k < dim_; ++k) {
        node += static_cast<std::size_t>(index[static_cast<std::size_t>(k)]) * strides_[static_cast<std::size_t>(k)];
    }
    return node;
}

Vector GridField::coordinates(std::size_t node) const {
    const std::vector<int> idx = multi_index(node);
    Vector x(dim_);
    const double h = spacing();
    for (int k = 0; k < dim_; ++k) x(k) = -half_width_ + idx[static_cast<std::size_t>(k)] * h;
    return x;
}

Vector GridField::value(std::size_t node) const {
    Vector v(dim_);
    for (int c = 0; c < dim_; ++c) v(c) = value(node, c);
    return v;
}

GridField sample_grid_field(int dim, double half_width, int points, const VectorFunction& f) {
    if (dim < 1 || points < 2) throw InvalidInput("sample_grid_field: bad grid shape");
    const std::size_t nodes = checked_node_count(dim, points);
    std::vector<double> values(nodes * static_cast<std::size_t>(dim));
    const GridField shape(dim, half_width, points, std::vector<double>(values.size(), 0.0));
    parallel_for(nodes, [&](std::size_t node) {
        const Vector v = f(shape.coordinates(node));
        if (v.size() != dim) throw InvalidInput("sample_grid_field: field returned wrong size");
        for (int c = 0; c < dim; ++c) values[node * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] = v(c);
    });
    return GridField(dim, half_width, points, std::move(values));
}

GridMatrices grid_gradient(const GridField& field) {
    if (field.points() < 5) throw InvalidInput("grid_gradient: need at least 5 points per axis");
    const int d = field.dim();
    GridMatrices g{d, std::vector<Matrix>(field.node_count())};
    parallel_for(field.node_count(), [&](std::size_t node) {
        const std::vector<int> idx = field.multi_index(node);
        Matrix m(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = axis_derivative(field, node, j, i, idx);
        g.at[node] = std::move(m);
    });
    return g;
}

GridMatrices symmetrized_gradient(const GridField& field) {
    GridMatrices g = grid_gradient(field);
    // Floating-point addition commutes, so the result is exactly symmetric.
    for (Matrix& m : g.at) m = (m + m.transpose()).eval();
    return g;
}

AntisymmetricFit antisymmetric_approximation(const GridField& field) {
    const GridMatrices grad = grid_gradient(field);
    const int d = field.dim();
    const double w = unit_volume_weight(field);

    Matrix mean = Matrix::Zero(d, d);
    std::size_t inside = 0;
    Matrix hyp_sq = Matrix::Zero(d, d);
    for (std::size_t node = 0; node < field.node_count(); ++node) {
        const double r2 = field.coordinates(node).squaredNorm();
        if (r2 < 1.0) {
            mean += grad.at[node];
            ++inside;
        }
        if (r2 < 16.0) {
            const Matrix f = grad.at[node] + grad.at[node].transpose();
            hyp_sq += f.cwiseAbs2();
        }
    }
    if (inside == 0) throw InvalidInput("antisymmetric_approximation: no grid nodes inside B(0,1)");
    mean /= static_cast<double>(inside);

    AntisymmetricFit fit;
    fit.s = antisymmetric_part(mean);
    Matrix res_sq = Matrix::Zero(d, d);
    for (std::size_t node = 0; node < field.node_count(); ++node) {
        if (field.coordinates(node).squaredNorm() < 1.0) res_sq += (grad.at[node] - fit.s).cwiseAbs2();
    }
    fit.residual = std::sqrt(w * res_sq.maxCoeff());
    fit.hypothesis_norm = std::sqrt(w * hyp_sq.maxCoeff());
    fit.exact_kernel = !(fit.hypothesis_norm > 1e-12 * std::max(1.0, fit.residual));
    fit.constant = fit.exact_kernel ? 0.0 : fit.residual / fit.hypothesis_norm;
    return fit;
}

double unit_ball_volume(int dim) {
    return std::pow(std::acos(-1.0), 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
}

AntisymmetricFit antisymmetric_approximation_sampled(int dim, const VectorFunction& field,
                                                     std::size_t n, std::uint64_t seed,
                                                     const std::optional<JacobianFunction>& gradient) {
    if (n < 1) throw InvalidInput("antisymmetric_approximation_sampled: n must be >= 1");
    auto grad_at = [&](const Vector& x) {
        return gradient ? (*gradient)(x) : finite_difference_jacobian(field, x);
    };
    const BallSample inner = sample_ball(unit_ball(dim), n, derive_seed(seed, 0));
    const BallSample outer = sample_ball(make_ball(Vector::Zero(dim), 4.0), n, derive_seed(seed, 1));

    std::vector<Matrix> g_inner(n);
    std::vector<Matrix> f_outer(n);
    parallel_for(n, [&](std::size_t i) {
        g_inner[i] = grad_at(inner.point(i));
        const Matrix g = grad_at(outer.point(i));
        f_outer[i] = g + g.transpose();
    });

    AntisymmetricFit fit;
    fit.s = antisymmetric_part(sample_mean(g_inner));
    Matrix res_sq = Matrix::Zero(dim, dim);
    for (const Matrix& g : g_inner) res_sq += (g - fit.s).cwiseAbs2();
    Matrix hyp_sq = Matrix::Zero(dim, dim);
    for (const Matrix& f : f_outer) hyp_sq += f.cwiseAbs2();
    const double v1 = unit_ball_volume(dim);
    const double v4 = v1 * std::pow(4.0, dim);
    fit.residual = std::sqrt(v1 * res_sq.maxCoeff() / static_cast<double>(n));
    fit.hypothesis_norm = std::sqrt(v4 * hyp_sq.maxCoeff() / static_cast<double>(n));
    fit.exact_kernel = !(fit.hypothesis_norm > 1e-12 * std::max(1.0, fit.residual));
    fit.constant = fit.exact_kernel ? 0.0 : fit.residual / fit.hypothesis_norm;
    return fit;
}

double summed_l2_residual(const GridField& field, const Matrix& s) {
    const GridMatrices grad = grid_gradient(field);
    double sum = 0.0;
    for (std::size_t node = 0; node < field.node_count(); ++node) {
        if (field.coordinates(node).squaredNorm() < 1.0) sum += (grad.at[node] - s).squaredNorm();
    }
    return sum * unit_volume_weight(field);
}

double third_derivative_identity_check(const GridField& field) {
    if (field.points() < 9) throw InvalidInput("third_derivative_identity_check: need at least 9 points per axis");
    const int d = field.dim();
    const double h = field.spacing();
    const GridMatrices f = symmetrized_gradient(field);
    const int last = field.points() - 1;

    std::vector<double> worst(field.node_count(), 0.0);
    parallel_for(field.node_count(), [&](std::size_t node) {
        const std::vector<int> idx = field.multi_index(node);
        for (int k = 0; k < d; ++k)
            if (idx[static_cast<std::size_t>(k)] < 2 || idx[static_cast<std::size_t>(k)] > last - 2) return;
        if (!(field.coordinates(node).squaredNorm() < 1.0)) return;

        // d f_ab / d x_axis, central.
        auto df = [&](int a, int b, int axis) {
            const std::size_t st = field.stride(axis);
            return (f.at[node + st](a, b) - f.at[node - st](a, b)) / (2.0 * h);
        };
        double m = 0.0;
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                for (int k = 0; k < d; ++k) {
                    const std::size_t sj = field.stride(j);
                    const std::size_t sk = field.stride(k);
                    double second = 0.0;
                    if (j == k) {
                        second = (field.value(node + sj, i) - 2.0 * field.value(node, i) +
                                  field.value(node - sj, i)) / (h * h);
                    } else {
                        second = (field.value(node + sj + sk, i) - field.value(node + sj - sk, i) -
                                  field.value(node - sj + sk, i) + field.value(node - sj - sk, i)) /
                                 (4.0 * h * h);
                    }
                    const double rhs = df(i, k, j) + df(i, j, k) - df(j, k, i);
                    m = std::max(m, std::abs(2.0 * second - rhs));
                }
            }
        }
        worst[node] = m;
    });
    double out = 0.0;
    for (double v : worst) out = std::max(out, v);
    return out;
}

VectorFunction random_trig_field(int dim, int degree, std::uint64_t seed) {
    if (dim < 1 || degree < 1) throw InvalidInput("random_trig_field: bad dim or degree");
    // Enumerate nonzero integer frequency vectors with |k|_1 <= degree.
    std::vector<Vector> freqs;
    std::vector<int> k(static_cast<std::size_t>(dim), -degree);
    for (;;) {
        int l1 = 0;
        for (int v : k) l1 += std::abs(v);
        if (l1 > 0 && l1 <= degree) {
            Vector kv(dim);
            for (int c = 0; c < dim; ++c) kv(c) = k[static_cast<std::size_t>(c)];
            freqs.push_back(kv);
        }
        int pos = dim - 1;
        while (pos >= 0 && k[static_cast<std::size_t>(pos)] == degree) {
            k[static_cast<std::size_t>(pos)] = -degree;
            --pos;
        }
        if (pos < 0) break;
        ++k[static_cast<std::size_t>(pos)];
    }

    Rng rng(derive_seed(seed, 0));
    std::normal_distribution<double> normal;
    Matrix cos_coef(dim, static_cast<Eigen::Index>(freqs.size()));
    Matrix sin_coef(dim, static_cast<Eigen::Index>(freqs.size()));
    for (std::size_t q = 0; q < freqs.size(); ++q) {
        const double scale = 1.0 / freqs[q].lpNorm<1>();
        for (int i = 0; i < dim; ++i) {
            cos_coef(i, static_cast<Eigen::Index>(q)) = scale * normal(rng);
            sin_coef(i, static_cast<Eigen::Index>(q)) = scale * normal(rng);
        }
    }
    return [freqs = std::move(freqs), cos_coef = std::move(cos_coef),
            sin_coef = std::move(sin_coef)](const Vector& x) {
        Vector out = Vector::Zero(x.size());
        for (std::size_t q = 0; q < freqs.size(); ++q) {
            const double phase = freqs[q].dot(x);
            out += std::cos(phase) * cos_coef.col(static_cast<Eigen::Index>(q)) +
                   std::sin(phase) * sin_coef.col(static_cast<Eigen::Index>(q));
        }
        return out;
    };
}

void write_grid_csv(const GridField& field, std::ostream& out) {
    out << header_line(field) << '\n';
    char buf[32];
    for (std::size_t node = 0; node < field.node_count(); ++node) {
        const std::vector<int> idx = field.multi_index(node);
        for (int i : idx) out << i << ',';
        for (int c = 0; c < field.dim(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", field.value(node, c));
            out << buf << (c + 1 < field.dim() ? ',' : '\n');
        }
    }
}

GridField read_grid_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("grid csv: missing header");
    const Header h = parse_header(line);
    const GridField shape(h.dim, h.half_width, h.points,
                          std::vector<double>(checked_node_count(h.dim, h.points) * static_cast<std::size_t>(h.dim), 0.0));
    std::vector<double> values(shape.node_count() * static_cast<std::size_t>(h.dim));
    std::vector<bool> seen(shape.node_count(), false);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (cells.size() != static_cast<std::size_t>(2 * h.dim)) {
            throw InvalidInput("grid csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(2 * h.dim) + " columns");
        }
        std::vector<int> idx(static_cast<std::size_t>(h.dim));
        try {
            for (int k = 0; k < h.dim; ++k) {
                idx[static_cast<std::size_t>(k)] = std::stoi(cells[static_cast<std::size_t>(k)]);
                if (idx[static_cast<std::size_t>(k)] < 0 || idx[static_cast<std::size_t>(k)] >= h.points) {
                    throw InvalidInput("grid csv line " + std::to_string(line_no) + ": index out of range");
                }
            }
            const std::size_t node = shape.node_at(idx);
            for (int c = 0; c < h.dim; ++c) {
                values[node * static_cast<std::size_t>(h.dim) + static_cast<std::size_t>(c)] =
                    std::stod(cells[static_cast<std::size_t>(h.dim + c)]);
            }
            seen[node] = true;
        } catch (const std::logic_error& e) {
            if (dynamic_cast<const InvalidInput*>(&e)) throw;
            throw InvalidInput("grid csv line " + std::to_string(line_no) + ": unparsable number");
        }
    }
    for (bool s : seen)
        if (!s) throw InvalidInput("grid csv: missing nodes");
    return GridField(h.dim, h.half_width, h.points, std::move(values));
}

void write_grid_binary(const GridField& field, std::ostream& out) {
    out << header_line(field) << '\n';
    for (double v : field.values()) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        unsigned char bytes[8];
        for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFF);
        out.write(reinterpret_cast<const char*>(bytes), 8);
    }
}

GridField read_grid_binary(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("grid binary: missing header");
    const Header h = parse_header(line);
    const std::size_t count = checked_node_count(h.dim, h.points) * static_cast<std::size_t>(h.dim);
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw InvalidInput("grid binary: truncated payload");
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
        values[i] = std::bit_cast<double>(bits);
    }
    return GridField(h.dim, h.half_width, h.points, std::move(values));
}

}  // namespace distortlab
