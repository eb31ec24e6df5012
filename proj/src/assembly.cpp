#include "ellab/assembly.hpp"

#include <ostream>

namespace ellab {

namespace {

void check_shape(const FESpace& space, const CoefficientTensor& a)
{
    if (a.m() != space.m() || a.n_components() != space.n_components()) {
        throw InvalidArgument("coefficient tensor does not match the space (m, N)");
    }
}

} // namespace

GradientArray apply_tensor(const CoefficientTensor& a, const GradientArray& h)
{
    if (a.width() != h.width()) {
        throw InvalidArgument("apply_tensor: width mismatch");
    }
    GradientArray out(h.samples(), h.width());
    const auto& samples = *h.samples();
    const int w = h.width();
    auto apply = [&](const CoefficientTensor::Matrix& mat, std::size_t i) {
        const auto in = h.at(i);
        auto res = out.at(i);
        for (int r = 0; r < w; ++r) {
            cplx s = 0.0;
            for (int c = 0; c < w; ++c) {
                s += mat(r, c) * in[static_cast<std::size_t>(c)];
            }
            res[static_cast<std::size_t>(r)] = s;
        }
    };
    if (a.is_constant()) {
        const auto& mat = a.constant_value();
        parallel_for(samples.size(), [&](std::size_t i) { apply(mat, i); });
    } else {
        parallel_for(samples.size(), [&](std::size_t i) { apply(a.at(samples.point(i)), i); });
    }
    return out;
}

SparseMatrix assemble_stiffness(const FESpace& space, const CoefficientTensor& a)
{
    check_shape(space, a);
    const auto& samples = *space.samples();
    const int n = space.n_components();
    const int sl = space.slots();
    const int w = space.width();
    const std::size_t ncell = space.mesh().cell_count();
    std::vector<std::vector<Eigen::Triplet<cplx>>> local(ncell);

    parallel_for(ncell, [&](std::size_t c) {
        LocalBasis lb;
        const int nl = space.family() == ElementFamily::kP1 ? 3 : 16;
        const int size = nl * n;
        Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(size, size);
        Eigen::MatrixXd g(w, size);  // columns: local (l, comp) gradient arrays
        for (std::size_t i = samples.cell_begin(c); i < samples.cell_begin(c + 1); ++i) {
            space.eval(c, samples.point(i), lb);
            g.setZero();
            for (int l = 0; l < nl; ++l) {
                for (int comp = 0; comp < n; ++comp) {
                    for (int s = 0; s < sl; ++s) {
                        g(comp * sl + s, l * n + comp) = lb.grad[static_cast<std::size_t>(l)][static_cast<std::size_t>(s)];
                    }
                }
            }
            const Eigen::MatrixXcd ai = a.is_constant() ? a.constant_value() : a.at(samples.point(i));
            k.noalias() += samples.weight(i) * (g.transpose().cast<cplx>() * (ai * g.cast<cplx>()));
        }
        auto& trip = local[c];
        trip.reserve(static_cast<std::size_t>(size * size));
        for (int r = 0; r < size; ++r) {
            const int gr = lb.scalar_dof[static_cast<std::size_t>(r / n)] * n + r % n;
            for (int col = 0; col < size; ++col) {
                const int gc = lb.scalar_dof[static_cast<std::size_t>(col / n)] * n + col % n;
                trip.emplace_back(gr, gc, k(r, col));
            }
        }
    });
    std::vector<Eigen::Triplet<cplx>> all;
    for (auto& t : local) {
        all.insert(all.end(), t.begin(), t.end());
    }
    const auto nd = static_cast<Eigen::Index>(space.ndofs());
    SparseMatrix s(nd, nd);
    s.setFromTriplets(all.begin(), all.end());
    s.makeCompressed();
    return s;
}

SparseMatrix assemble_gram(const FESpace& space)
{
    return assemble_stiffness(space, identity_tensor(space.m(), space.n_components()));
}

Vector assemble_load(const FESpace& space, const GradientArray& h)
{
    if (h.samples() != space.samples() || h.width() != space.width()) {
        throw InvalidArgument("assemble_load: data not sampled on the space quadrature");
    }
    const auto& samples = *space.samples();
    const int n = space.n_components();
    const int sl = space.slots();
    const std::size_t ncell = space.mesh().cell_count();
    const int nl = space.family() == ElementFamily::kP1 ? 3 : 16;
    std::vector<std::vector<cplx>> local(ncell, std::vector<cplx>(static_cast<std::size_t>(nl * n)));
    std::vector<std::array<int, LocalBasis::kMaxLocal>> dofs(ncell);

    parallel_for(ncell, [&](std::size_t c) {
        LocalBasis lb;
        auto& b = local[c];
        for (std::size_t i = samples.cell_begin(c); i < samples.cell_begin(c + 1); ++i) {
            space.eval(c, samples.point(i), lb);
            const auto hv = h.at(i);
            const double wt = samples.weight(i);
            for (int l = 0; l < nl; ++l) {
                for (int comp = 0; comp < n; ++comp) {
                    cplx s = 0.0;
                    for (int a = 0; a < sl; ++a) {
                        s += lb.grad[static_cast<std::size_t>(l)][static_cast<std::size_t>(a)] *
                             hv[static_cast<std::size_t>(comp * sl + a)];
                    }
                    b[static_cast<std::size_t>(l * n + comp)] += wt * s;
                }
            }
        }
        dofs[c] = lb.scalar_dof;
    });
    Vector out = Vector::Zero(static_cast<Eigen::Index>(space.ndofs()));
    for (std::size_t c = 0; c < ncell; ++c) {
        for (int l = 0; l < nl; ++l) {
            for (int comp = 0; comp < n; ++comp) {
                out[dofs[c][static_cast<std::size_t>(l)] * n + comp] += local[c][static_cast<std::size_t>(l * n + comp)];
            }
        }
    }
    return out;
}

cplx pairing(const GradientArray& f, const GradientArray& g)
{
    if (!f.compatible(g)) {
        throw InvalidArgument("pairing: shape or sampling mismatch");
    }
    const auto& samples = *f.samples();
    std::vector<cplx> terms(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto a = f.at(i);
        const auto b = g.at(i);
        cplx s = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            s += std::conj(a[k]) * b[k];
        }
        terms[i] = samples.weight(i) * s;
    }
    return pairwise_sum(terms);
}

Vector boundary_load(const FESpace& space, const BoundaryFunction& g, int order)
{
    const Mesh& mesh = space.mesh();
    const BoundaryQuadrature q = boundary_quadrature(mesh, order);
    const int n = space.n_components();
    Vector out = Vector::Zero(static_cast<Eigen::Index>(space.ndofs()));
    LocalBasis lb;
    for (std::size_t k = 0; k < q.points.size(); ++k) {
        // Nudge toward the interior to find the owning cell.
        const Point x = q.points[k];
        const Point inward = x - 1e-9 * mesh.h() * q.normals[k];
        const int c = mesh.locate(inward);
        if (c < 0) {
            throw NumericalError("boundary_load: boundary point not located in the mesh");
        }
        space.eval(static_cast<std::size_t>(c), x, lb);
        for (int comp = 0; comp < n; ++comp) {
            const Jet gv = g(x, q.normals[k], comp);
            for (int l = 0; l < lb.count; ++l) {
                const auto L = static_cast<std::size_t>(l);
                const cplx term = space.m() == 1 ? lb.value[L] * gv.v : lb.d1[L][0] * gv.dx + lb.d1[L][1] * gv.dy;
                out[lb.scalar_dof[L] * n + comp] += q.weights[k] * term;
            }
        }
    }
    return out;
}

void write_coordinate(std::ostream& out, const SparseMatrix& s)
{
    out.precision(17);
    for (int k = 0; k < s.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(s, k); it; ++it) {
            out << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
        }
    }
}

void write_coordinate(std::ostream& out, const Vector& v)
{
    out.precision(17);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out << i << ' ' << v[i].real() << ' ' << v[i].imag() << '\n';
    }
}

} // namespace ellab
