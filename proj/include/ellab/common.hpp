#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ellab {

using cplx = std::complex<double>;

/// Spatial dimension of every mesh and grid in the library. Exponent
/// formulas take `d` as a parameter so that they read the same in any
/// dimension.
inline constexpr int kDim = 2;

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Point a, Point b) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// Number of worker threads used by parallel loops (default 1).
void set_num_threads(int n);
int num_threads();

/// Runs body(i) for i in [0, n). Work is split into contiguous blocks, and
/// every index is processed exactly once. Callers write results into
/// slot i so that output never depends on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Pairwise (tree) summation in a fixed order. The result depends only on the
/// input order, never on the thread count.
double pairwise_sum(std::span<const double> values);
cplx pairwise_sum(std::span<const cplx> values);

} // namespace ellab
