#include "rothe/fields.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <fftw3.h>
#include <fmt/format.h>

namespace rothe {

// DST-I (FFTW RODFT00): Y_k = 2 sum_{i=0}^{n-1} X_i sin(pi (i+1)(k+1)/(n+1)).
// The matrix is symmetric, so synthesis and analysis share one plan.
class SineTransform {
public:
    explicit SineTransform(std::size_t n) : n_(n) {
        std::lock_guard lock(planner_mutex());
        double* in = fftw_alloc_real(n);
        double* out = fftw_alloc_real(n);
        plan_ = fftw_plan_r2r_1d(static_cast<int>(n), in, out, FFTW_RODFT00, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(in);
        fftw_free(out);
        if (plan_ == nullptr) throw std::runtime_error("SineTransform: FFTW planning failed");
    }

    SineTransform(const SineTransform&) = delete;
    SineTransform& operator=(const SineTransform&) = delete;

    ~SineTransform() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
    }

    // Executing a plan on new arrays is thread-safe in FFTW.
    void execute(std::vector<double>& in, std::vector<double>& out) const {
        fftw_execute_r2r(plan_, in.data(), out.data());
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

private:
    static std::mutex& planner_mutex() {
        static std::mutex m;
        return m;
    }

    std::size_t n_;
    fftw_plan plan_;
};

CollocationGrid::CollocationGrid(std::size_t nodes) : nodes_(nodes) {
    if (nodes == 0) throw std::invalid_argument("CollocationGrid: N must be >= 1");
    transform_ = std::make_shared<const SineTransform>(nodes);
}

double CollocationGrid::node(std::size_t i) const {
    if (i == 0 || i > nodes_) throw std::out_of_range("CollocationGrid::node");
    return static_cast<double>(i) / static_cast<double>(nodes_ + 1);
}

ScalarMap ScalarMap::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? std::string{} : text.substr(colon + 1);
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size() || !std::isfinite(x)) {
            throw std::invalid_argument(fmt::format("scalar map '{}': '{}' is not a number", text, s));
        }
        return x;
    };
    if (name == "identity" && args.empty()) return identity();
    if (name == "zero" && args.empty()) return zero();
    if (name == "constant") return constant(number(args));
    if (name == "sin") return sine(args.empty() ? 1.0 : number(args));
    if (name == "tanh") return tanh(args.empty() ? 1.0 : number(args));
    if (name == "affine") {
        const auto comma = args.find(',');
        if (comma == std::string::npos) throw std::invalid_argument(fmt::format("scalar map '{}': expected affine:a,b", text));
        return affine(number(args.substr(0, comma)), number(args.substr(comma + 1)));
    }
    throw std::invalid_argument(fmt::format("unknown scalar map '{}'", text));
}

double ScalarMap::operator()(double u) const noexcept {
    switch (kind_) {
        case Kind::identity: return u;
        case Kind::affine: return a_ * u + b_;
        case Kind::sine: return a_ * std::sin(u);
        case Kind::tanh: return a_ * std::tanh(u);
    }
    return u;
}

double ScalarMap::lip_constant() const noexcept {
    switch (kind_) {
        case Kind::identity: return 1.0;
        case Kind::affine:
        case Kind::sine:
        case Kind::tanh: return std::abs(a_);
    }
    return 1.0;
}

std::string ScalarMap::describe() const {
    switch (kind_) {
        case Kind::identity: return "identity";
        case Kind::affine: return fmt::format("affine:{},{}", a_, b_);
        case Kind::sine: return fmt::format("sin:{}", a_);
        case Kind::tanh: return fmt::format("tanh:{}", a_);
    }
    return "unknown";
}

void ScalarMap::apply_inplace(std::span<double> values) const noexcept {
    for (double& u : values) u = (*this)(u);
}

std::vector<double> to_grid(const SpectralOperator& op, const SpectralVector& v, const CollocationGrid& grid) {
    if (op.kind() != SpectrumKind::dirichlet_laplacian_1d) {
        throw unsupported_operation(fmt::format("to_grid: sine collocation needs the Dirichlet preset, got '{}'", op.label()));
    }
    if (v.size() != op.size()) throw std::invalid_argument("to_grid: vector length does not match the operator");
    const std::size_t n = grid.size();
    if (n < v.size()) throw std::invalid_argument(fmt::format("to_grid: N = {} < J = {}", n, v.size()));
    std::vector<double> in(n, 0.0);
    std::copy(v.coeffs.begin(), v.coeffs.end(), in.begin());
    std::vector<double> out(n);
    grid.transform().execute(in, out);
    const double scale = std::numbers::sqrt2 / 2.0;
    for (double& u : out) u *= scale;
    return out;
}

SpectralVector from_grid(std::span<const double> values, std::size_t modes, const CollocationGrid& grid) {
    const std::size_t n = grid.size();
    if (values.size() != n) throw std::invalid_argument("from_grid: value count does not match the grid");
    if (n < modes) throw std::invalid_argument(fmt::format("from_grid: N = {} < J = {}", n, modes));
    std::vector<double> in(values.begin(), values.end());
    std::vector<double> out(n);
    grid.transform().execute(in, out);
    const double scale = std::numbers::sqrt2 / (2.0 * static_cast<double>(n + 1));
    std::vector<double> coeffs(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(modes));
    for (double& c : coeffs) c *= scale;
    return SpectralVector(std::move(coeffs));
}

SpectralVector nemytskii_f(const SpectralOperator& op, const SpectralVector& v, const ScalarMap& g,
                           const CollocationGrid& grid) {
    auto values = to_grid(op, v, grid);
    g.apply_inplace(values);
    return from_grid(values, op.size(), grid);
}

}  // namespace rothe
