#pragma once

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ellab/common.hpp"

namespace ellab {

struct MultiIndex {
    std::vector<int> exponents;

    int order() const;
    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

/// All multiindices of length d and order m, in descending lexicographic
/// order: for d=2, m=2 this is (2,0), (1,1), (0,2).
std::vector<MultiIndex> multiindices(int d, int m);

/// sqrt(m! / gamma!). Gradient arrays store sqrt(m!/gamma!) * d^gamma u, so
/// that the plain Euclidean norm of the array equals the Frobenius norm of
/// the full m-th derivative tensor. For m = 1 every weight is 1.
double slot_weight(const MultiIndex& gamma);

/// Uniform grid of cells carrying a piecewise-constant tensor. Points outside
/// the grid use the nearest cell.
struct CellGrid {
    Point lower;
    double width = 1.0;
    double height = 1.0;
    int nx = 1;
    int ny = 1;

    int cell_of(Point x) const;
    Point cell_center(int cell) const;
    int size() const { return nx * ny; }
};

/// Coefficients A^{jk}_{alpha beta}(x) of a divergence-form operator of order
/// 2m acting on N-component functions. At every point the tensor is a square
/// complex matrix of size N * slots, with row (j, alpha) and column (k, beta)
/// at index j * slots + alpha and k * slots + beta. The matrix acts on
/// weighted gradient arrays (see slot_weight).
class CoefficientTensor {
public:
    using Matrix = Eigen::MatrixXcd;
    enum class Kind { kConstant, kPiecewiseConstant, kCallable };

    static CoefficientTensor constant(int m, int n_components, Matrix value);
    static CoefficientTensor piecewise(int m, int n_components, CellGrid grid, std::vector<Matrix> values);
    static CoefficientTensor callable(int m, int n_components, std::function<Matrix(Point)> fn);

    int m() const { return m_; }
    int n_components() const { return n_; }
    int slots() const { return slots_; }
    /// N * slots: length of a gradient array.
    int width() const { return n_ * slots_; }
    Kind kind() const { return kind_; }
    bool is_constant() const { return kind_ == Kind::kConstant; }

    Matrix at(Point x) const;
    cplx entry(int j, int k, int alpha, int beta, Point x) const;

    const Matrix& constant_value() const;
    const CellGrid& cell_grid() const;
    const std::vector<Matrix>& cell_values() const;

    /// Points at which the tensor takes all of its values (cell centers for
    /// piecewise tensors, the origin for constants, empty for callables).
    std::vector<Point> characteristic_points() const;

    CoefficientTensor scaled(cplx factor) const;
    friend CoefficientTensor operator+(const CoefficientTensor& a, const CoefficientTensor& b);
    friend CoefficientTensor operator-(const CoefficientTensor& a, const CoefficientTensor& b);

private:
    CoefficientTensor(int m, int n, Kind kind);

    int m_ = 1;
    int n_ = 1;
    int slots_ = 1;
    Kind kind_ = Kind::kConstant;
    Matrix constant_;
    CellGrid grid_;
    std::vector<Matrix> cells_;
    std::function<Matrix(Point)> fn_;
};

/// (A*)^{jk}_{alpha beta}(x) = conj(A^{kj}_{beta alpha}(x)), i.e. the
/// conjugate transpose of the point matrix.
CoefficientTensor adjoint_tensor(const CoefficientTensor& a);

CoefficientTensor identity_tensor(int m, int n_components);

/// Constant m = 2, N = 1 tensor with
///   <H, A_rho G> = rho * conj(tr H) * tr G + (1 - rho) * <H, G>_Frobenius
/// on weighted Hessian arrays.
CoefficientTensor biharmonic_rho_tensor(double rho, int d = kDim);

/// Point matrix of A_rho on weighted Hessian arrays in any dimension d >= 2.
CoefficientTensor::Matrix biharmonic_rho_matrix(double rho, int d);

/// Real diagonal coefficients that depend on x only (not on y): a preset for
/// operators constant in the vertical direction.
CoefficientTensor diag_real_tindep(int n_components = 1);

/// Random constant tensor I + scale * G with G complex Gaussian.
CoefficientTensor random_constant_tensor(int m, int n_components, double scale, std::mt19937_64& rng);

/// Random piecewise-constant tensor whose operator norm equals 1 in every
/// cell.
CoefficientTensor random_unit_piecewise(int m, int n_components, CellGrid grid, std::mt19937_64& rng);

/// Largest operator norm (largest singular value) of A(x) - B(x) over the
/// sample points. Throws InvalidArgument on shape mismatch.
double sup_distance(const CoefficientTensor& a, const CoefficientTensor& b, std::span<const Point> samples);

/// Largest operator norm of A(x) over the sample points.
double sup_norm(const CoefficientTensor& a, std::span<const Point> samples);

} // namespace ellab
