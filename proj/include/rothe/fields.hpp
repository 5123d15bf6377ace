#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rothe/spectral.hpp"

namespace rothe {

/// Raised when an operation needs a spectral preset it was not given
/// (e.g. sine collocation on a non-Dirichlet spectrum).
class unsupported_operation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class SineTransform;

/// Uniform interior nodes x_i = i/(N+1), i = 1..N, on (0,1) together with a
/// DST-I plan of size N. Cheap to copy; the plan is shared.
class CollocationGrid {
public:
    explicit CollocationGrid(std::size_t nodes);

    /// The default grid for J modes: N = 2J nodes.
    static CollocationGrid for_modes(std::size_t modes) { return CollocationGrid(2 * modes); }

    [[nodiscard]] std::size_t size() const noexcept { return nodes_; }
    [[nodiscard]] double node(std::size_t i) const;  ///< i counted from 1
    [[nodiscard]] const SineTransform& transform() const noexcept { return *transform_; }

private:
    std::size_t nodes_;
    std::shared_ptr<const SineTransform> transform_;
};

/// Scalar function R -> R applied pointwise by Nemytskii operators.
///   identity      g(u) = u
///   affine(a, b)  g(u) = a u + b
///   sine(a)       g(u) = a sin(u)
///   tanh(a)       g(u) = a tanh(u)
class ScalarMap {
public:
    enum class Kind { identity, affine, sine, tanh };

    static ScalarMap identity() { return ScalarMap(Kind::identity, 1.0, 0.0); }
    static ScalarMap affine(double slope, double offset) { return ScalarMap(Kind::affine, slope, offset); }
    static ScalarMap zero() { return affine(0.0, 0.0); }
    static ScalarMap constant(double value) { return affine(0.0, value); }
    static ScalarMap sine(double amplitude = 1.0) { return ScalarMap(Kind::sine, amplitude, 0.0); }
    static ScalarMap tanh(double amplitude = 1.0) { return ScalarMap(Kind::tanh, amplitude, 0.0); }

    /// Parses "identity", "zero", "constant:c", "affine:a,b", "sin[:a]", "tanh[:a]".
    static ScalarMap parse(const std::string& text);

    [[nodiscard]] double operator()(double u) const noexcept;
    [[nodiscard]] double lip_constant() const noexcept;
    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] bool is_zero() const noexcept { return kind_ == Kind::affine && a_ == 0.0 && b_ == 0.0; }
    [[nodiscard]] bool is_constant() const noexcept { return kind_ == Kind::affine && a_ == 0.0; }
    [[nodiscard]] std::string describe() const;

    void apply_inplace(std::span<double> values) const noexcept;

private:
    ScalarMap(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

    Kind kind_;
    double a_;
    double b_;
};

/// Grid values u(x_i) = sum_j v^(j) sqrt(2) sin(j pi x_i) of a J-mode function.
/// Throws unsupported_operation unless `op` is the Dirichlet preset and
/// std::invalid_argument when N < J.
std::vector<double> to_grid(const SpectralOperator& op, const SpectralVector& v, const CollocationGrid& grid);

/// Discrete sine analysis v^(j) = sqrt(2)/(N+1) sum_i u_i sin(j pi x_i), j = 1..J.
/// Left inverse of to_grid and the discrete least-squares projection onto J modes.
SpectralVector from_grid(std::span<const double> values, std::size_t modes, const CollocationGrid& grid);

/// f(v)(x) = g(v(x)) by collocation.
SpectralVector nemytskii_f(const SpectralOperator& op, const SpectralVector& v, const ScalarMap& g,
                           const CollocationGrid& grid);

}  // namespace rothe
