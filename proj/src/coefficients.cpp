#include "ellab/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ellab {

int MultiIndex::order() const
{
    int s = 0;
    for (const int e : exponents) {
        s += e;
    }
    return s;
}

std::vector<MultiIndex> multiindices(int d, int m)
{
    if (d < 1 || m < 0) {
        throw InvalidArgument("multiindices: need d >= 1 and m >= 0");
    }
    std::vector<MultiIndex> out;
    std::vector<int> cur(static_cast<std::size_t>(d), 0);
    // Recursive fill of the first coordinate from m down to 0.
    std::function<void(int, int)> rec = [&](int pos, int remaining) {
        if (pos == d - 1) {
            cur[static_cast<std::size_t>(pos)] = remaining;
            out.push_back({cur});
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            cur[static_cast<std::size_t>(pos)] = e;
            rec(pos + 1, remaining - e);
        }
    };
    rec(0, m);
    return out;
}

double slot_weight(const MultiIndex& gamma)
{
    auto factorial = [](int n) {
        double f = 1.0;
        for (int i = 2; i <= n; ++i) {
            f *= i;
        }
        return f;
    };
    double denom = 1.0;
    for (const int e : gamma.exponents) {
        denom *= factorial(e);
    }
    return std::sqrt(factorial(gamma.order()) / denom);
}

int CellGrid::cell_of(Point x) const
{
    const int i = std::clamp(static_cast<int>(std::floor((x.x - lower.x) / width * nx)), 0, nx - 1);
    const int j = std::clamp(static_cast<int>(std::floor((x.y - lower.y) / height * ny)), 0, ny - 1);
    return j * nx + i;
}

Point CellGrid::cell_center(int cell) const
{
    const int i = cell % nx;
    const int j = cell / nx;
    return {lower.x + (i + 0.5) * width / nx, lower.y + (j + 0.5) * height / ny};
}

// ---------------------------------------------------------------------------

CoefficientTensor::CoefficientTensor(int m, int n, Kind kind) : m_(m), n_(n), kind_(kind)
{
    if (m < 1 || n < 1) {
        throw InvalidArgument("CoefficientTensor: need m >= 1 and N >= 1");
    }
    slots_ = static_cast<int>(multiindices(kDim, m).size());
}

CoefficientTensor CoefficientTensor::constant(int m, int n_components, Matrix value)
{
    CoefficientTensor t(m, n_components, Kind::kConstant);
    if (value.rows() != t.width() || value.cols() != t.width()) {
        throw InvalidArgument("CoefficientTensor::constant: matrix must be " + std::to_string(t.width()) + "x" +
                              std::to_string(t.width()));
    }
    t.constant_ = std::move(value);
    return t;
}

CoefficientTensor CoefficientTensor::piecewise(int m, int n_components, CellGrid grid, std::vector<Matrix> values)
{
    CoefficientTensor t(m, n_components, Kind::kPiecewiseConstant);
    if (static_cast<int>(values.size()) != grid.size()) {
        throw InvalidArgument("CoefficientTensor::piecewise: one matrix per cell required");
    }
    for (const auto& v : values) {
        if (v.rows() != t.width() || v.cols() != t.width()) {
            throw InvalidArgument("CoefficientTensor::piecewise: matrix shape mismatch");
        }
    }
    t.grid_ = grid;
    t.cells_ = std::move(values);
    return t;
}

CoefficientTensor CoefficientTensor::callable(int m, int n_components, std::function<Matrix(Point)> fn)
{
    CoefficientTensor t(m, n_components, Kind::kCallable);
    t.fn_ = std::move(fn);
    return t;
}

CoefficientTensor::Matrix CoefficientTensor::at(Point x) const
{
    switch (kind_) {
    case Kind::kConstant:
        return constant_;
    case Kind::kPiecewiseConstant:
        return cells_[static_cast<std::size_t>(grid_.cell_of(x))];
    case Kind::kCallable:
        break;
    }
    Matrix v = fn_(x);
    if (v.rows() != width() || v.cols() != width()) {
        throw InvalidArgument("CoefficientTensor: callable returned a matrix of the wrong shape");
    }
    return v;
}

cplx CoefficientTensor::entry(int j, int k, int alpha, int beta, Point x) const
{
    return at(x)(j * slots_ + alpha, k * slots_ + beta);
}

const CoefficientTensor::Matrix& CoefficientTensor::constant_value() const
{
    if (kind_ != Kind::kConstant) {
        throw InvalidArgument("CoefficientTensor: not a constant tensor");
    }
    return constant_;
}

const CellGrid& CoefficientTensor::cell_grid() const
{
    if (kind_ != Kind::kPiecewiseConstant) {
        throw InvalidArgument("CoefficientTensor: not a piecewise-constant tensor");
    }
    return grid_;
}

const std::vector<CoefficientTensor::Matrix>& CoefficientTensor::cell_values() const
{
    if (kind_ != Kind::kPiecewiseConstant) {
        throw InvalidArgument("CoefficientTensor: not a piecewise-constant tensor");
    }
    return cells_;
}

std::vector<Point> CoefficientTensor::characteristic_points() const
{
    switch (kind_) {
    case Kind::kConstant:
        return {Point{}};
    case Kind::kPiecewiseConstant: {
        std::vector<Point> pts;
        for (int c = 0; c < grid_.size(); ++c) {
            pts.push_back(grid_.cell_center(c));
        }
        return pts;
    }
    case Kind::kCallable:
        break;
    }
    return {};
}

CoefficientTensor CoefficientTensor::scaled(cplx factor) const
{
    switch (kind_) {
    case Kind::kConstant:
        return constant(m_, n_, factor * constant_);
    case Kind::kPiecewiseConstant: {
        std::vector<Matrix> v;
        for (const auto& c : cells_) {
            v.push_back(factor * c);
        }
        return piecewise(m_, n_, grid_, std::move(v));
    }
    case Kind::kCallable:
        break;
    }
    auto fn = fn_;
    return callable(m_, n_, [fn, factor](Point x) -> Matrix { return factor * fn(x); });
}

namespace {

bool same_grid(const CellGrid& a, const CellGrid& b)
{
    return a.lower == b.lower && a.width == b.width && a.height == b.height && a.nx == b.nx && a.ny == b.ny;
}

CoefficientTensor combine(const CoefficientTensor& a, const CoefficientTensor& b, double sign)
{
    using K = CoefficientTensor::Kind;
    if (a.m() != b.m() || a.n_components() != b.n_components()) {
        throw InvalidArgument("CoefficientTensor: shape mismatch in sum");
    }
    if (a.kind() == K::kConstant && b.kind() == K::kConstant) {
        return CoefficientTensor::constant(a.m(), a.n_components(), a.constant_value() + sign * b.constant_value());
    }
    const bool pa = a.kind() == K::kPiecewiseConstant;
    const bool pb = b.kind() == K::kPiecewiseConstant;
    if ((pa || a.is_constant()) && (pb || b.is_constant()) &&
        (!pa || !pb || same_grid(a.cell_grid(), b.cell_grid()))) {
        const CellGrid grid = pa ? a.cell_grid() : b.cell_grid();
        std::vector<CoefficientTensor::Matrix> v;
        for (int c = 0; c < grid.size(); ++c) {
            const Point x = grid.cell_center(c);
            v.push_back(a.at(x) + sign * b.at(x));
        }
        return CoefficientTensor::piecewise(a.m(), a.n_components(), grid, std::move(v));
    }
    return CoefficientTensor::callable(a.m(), a.n_components(), [a, b, sign](Point x) -> CoefficientTensor::Matrix {
        return a.at(x) + sign * b.at(x);
    });
}

} // namespace

CoefficientTensor operator+(const CoefficientTensor& a, const CoefficientTensor& b) { return combine(a, b, 1.0); }

CoefficientTensor operator-(const CoefficientTensor& a, const CoefficientTensor& b) { return combine(a, b, -1.0); }

// ---------------------------------------------------------------------------

CoefficientTensor adjoint_tensor(const CoefficientTensor& a)
{
    using K = CoefficientTensor::Kind;
    switch (a.kind()) {
    case K::kConstant:
        return CoefficientTensor::constant(a.m(), a.n_components(), a.constant_value().adjoint());
    case K::kPiecewiseConstant: {
        std::vector<CoefficientTensor::Matrix> v;
        for (const auto& c : a.cell_values()) {
            v.push_back(c.adjoint());
        }
        return CoefficientTensor::piecewise(a.m(), a.n_components(), a.cell_grid(), std::move(v));
    }
    case K::kCallable:
        break;
    }
    return CoefficientTensor::callable(a.m(), a.n_components(),
                                       [a](Point x) -> CoefficientTensor::Matrix { return a.at(x).adjoint(); });
}

CoefficientTensor identity_tensor(int m, int n_components)
{
    const int w = n_components * static_cast<int>(multiindices(kDim, m).size());
    return CoefficientTensor::constant(m, n_components, CoefficientTensor::Matrix::Identity(w, w));
}

CoefficientTensor::Matrix biharmonic_rho_matrix(double rho, int d)
{
    if (d < 2) {
        throw InvalidArgument("biharmonic_rho_tensor: need d >= 2");
    }
    const auto idx = multiindices(d, 2);
    const auto w = static_cast<Eigen::Index>(idx.size());
    // Weighted Hessian slots: pure second derivatives carry weight 1, so the
    // trace (Laplacian) is the sum of the pure slots.
    Eigen::VectorXcd trace = Eigen::VectorXcd::Zero(w);
    for (Eigen::Index a = 0; a < w; ++a) {
        const auto& e = idx[static_cast<std::size_t>(a)].exponents;
        if (std::count(e.begin(), e.end(), 2) == 1) {
            trace(a) = 1.0;
        }
    }
    return rho * trace * trace.transpose() + (1.0 - rho) * CoefficientTensor::Matrix::Identity(w, w);
}

CoefficientTensor biharmonic_rho_tensor(double rho, int d)
{
    if (d != kDim) {
        throw InvalidArgument("biharmonic_rho_tensor: tensors are applied in d = 2; use biharmonic_rho_matrix");
    }
    return CoefficientTensor::constant(2, 1, biharmonic_rho_matrix(rho, d));
}

CoefficientTensor diag_real_tindep(int n_components)
{
    const int n = n_components;
    return CoefficientTensor::callable(1, n, [n](Point x) -> CoefficientTensor::Matrix {
        CoefficientTensor::Matrix a = CoefficientTensor::Matrix::Zero(2 * n, 2 * n);
        for (int k = 0; k < n; ++k) {
            a(2 * k, 2 * k) = 1.5 + 0.5 * std::sin(2.0 * std::numbers::pi * x.x);
            a(2 * k + 1, 2 * k + 1) = 1.0 + 0.25 * std::cos(2.0 * std::numbers::pi * x.x);
        }
        return a;
    });
}

namespace {

CoefficientTensor::Matrix gaussian_matrix(int w, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    CoefficientTensor::Matrix m(w, w);
    for (int j = 0; j < w; ++j) {
        for (int i = 0; i < w; ++i) {
            const double re = g(rng);
            const double im = g(rng);
            m(i, j) = cplx(re, im) / std::sqrt(2.0);
        }
    }
    return m;
}

double op_norm(const CoefficientTensor::Matrix& m)
{
    Eigen::JacobiSVD<CoefficientTensor::Matrix> svd(m);
    return svd.singularValues()(0);
}

} // namespace

CoefficientTensor random_constant_tensor(int m, int n_components, double scale, std::mt19937_64& rng)
{
    const int w = n_components * static_cast<int>(multiindices(kDim, m).size());
    CoefficientTensor::Matrix a = CoefficientTensor::Matrix::Identity(w, w) + scale * gaussian_matrix(w, rng);
    return CoefficientTensor::constant(m, n_components, std::move(a));
}

CoefficientTensor random_unit_piecewise(int m, int n_components, CellGrid grid, std::mt19937_64& rng)
{
    const int w = n_components * static_cast<int>(multiindices(kDim, m).size());
    std::vector<CoefficientTensor::Matrix> v;
    for (int c = 0; c < grid.size(); ++c) {
        CoefficientTensor::Matrix g = gaussian_matrix(w, rng);
        v.push_back(g / op_norm(g));
    }
    return CoefficientTensor::piecewise(m, n_components, grid, std::move(v));
}

double sup_distance(const CoefficientTensor& a, const CoefficientTensor& b, std::span<const Point> samples)
{
    if (a.m() != b.m() || a.n_components() != b.n_components()) {
        throw InvalidArgument("sup_distance: tensors have different (m, N)");
    }
    double eps = 0.0;
    for (const Point x : samples) {
        eps = std::max(eps, op_norm(a.at(x) - b.at(x)));
    }
    return eps;
}

double sup_norm(const CoefficientTensor& a, std::span<const Point> samples)
{
    double s = 0.0;
    for (const Point x : samples) {
        s = std::max(s, op_norm(a.at(x)));
    }
    return s;
}

} // namespace ellab
