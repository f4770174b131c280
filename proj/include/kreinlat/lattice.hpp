#pragma once

#include "core.hpp"

#include <Eigen/Eigenvalues>

namespace kreinlat {

enum class Boundary { periodic, dirichlet };

struct Grid {
    int n = 0;
    double length = 0.0;
    double spacing = 0.0;
    Boundary boundary = Boundary::periodic;

    double x(int j) const { return -0.5 * length + j * spacing; }
    RVector coordinates() const {
        RVector xs(n);
        for (int j = 0; j < n; ++j) xs(j) = x(j);
        return xs;
    }
    // number of links j -> j+1 present
    int links() const { return boundary == Boundary::periodic ? n : n - 1; }
};

inline Grid build_grid(int n, double length, Boundary boundary = Boundary::periodic) {
    if (n < 8) throw InvalidArgument("grid needs n >= 8, got " + std::to_string(n));
    if (!(length > 0.0) || !std::isfinite(length)) throw InvalidArgument("grid length must be positive");
    return Grid{n, length, length / n, boundary};
}

struct PotentialSpec {
    RVector V, A, m;
    // Optional link field A_{j+1/2}; when empty it is the midpoint average of A.
    RVector A_link;

    static PotentialSpec constant(const Grid& g, double v, double a, double mass) {
        PotentialSpec p;
        p.V = RVector::Constant(g.n, v);
        p.A = RVector::Constant(g.n, a);
        p.m = RVector::Constant(g.n, mass);
        return p;
    }

    void validate(const Grid& g) const {
        if (V.size() != g.n || A.size() != g.n || m.size() != g.n)
            throw DimensionMismatch("potential arrays must have n entries");
        if (A_link.size() != 0 && A_link.size() != g.n)
            throw DimensionMismatch("link field must have n entries");
        if (!V.allFinite() || !A.allFinite() || !m.allFinite() || !A_link.allFinite())
            throw InvalidArgument("potential entries must be finite");
        if ((m.array() < 0.0).any()) throw InvalidArgument("mass must be non-negative");
    }

    double link_field(const Grid& g, int j) const {
        if (A_link.size() == g.n) return A_link(j);
        return 0.5 * (A(j) + A((j + 1) % g.n));
    }
};

// V(x) = V0 exp(-x^2 / w^2)
inline RVector gaussian_well(const Grid& g, double V0, double w) {
    if (!(w > 0.0)) throw InvalidArgument("gaussian_well width must be positive");
    RVector v(g.n);
    for (int j = 0; j < g.n; ++j) {
        double x = g.x(j);
        v(j) = V0 * std::exp(-x * x / (w * w));
    }
    return v;
}

// Link variable U_j = exp(-i A_{j+1/2} h) on the bond j -> j+1.
inline cplx link_phase(const Grid& g, const PotentialSpec& p, int j) {
    return std::exp(-I_unit * (p.link_field(g, j) * g.spacing));
}

// Central covariant difference (U_j psi_{j+1} - conj(U_{j-1}) psi_{j-1}) / 2h. Anti-Hermitian.
inline CMatrix covariant_central_difference(const Grid& g, const PotentialSpec& p) {
    CMatrix d = CMatrix::Zero(g.n, g.n);
    for (int j = 0; j < g.links(); ++j) {
        int k = (j + 1) % g.n;
        cplx u = link_phase(g, p, j);
        d(j, k) += u / (2.0 * g.spacing);
        d(k, j) -= std::conj(u) / (2.0 * g.spacing);
    }
    return d;
}

struct EpsilonPair {
    CMatrix eps2;
    CMatrix eps;
    CMatrix eps_inv;
    RVector eps2_eigenvalues;  // ascending
    double mu = 0.0;
};

inline CMatrix magnetic_laplacian(const Grid& g, const PotentialSpec& p) {
    const double h2 = g.spacing * g.spacing;
    CMatrix e = CMatrix::Zero(g.n, g.n);
    for (int j = 0; j < g.n; ++j) e(j, j) = 2.0 / h2 + p.m(j) * p.m(j);
    for (int j = 0; j < g.links(); ++j) {
        int k = (j + 1) % g.n;
        cplx u = link_phase(g, p, j);
        e(j, k) -= u / h2;
        e(k, j) -= std::conj(u) / h2;
    }
    return e;
}

inline EpsilonPair discretize_schrodinger(const Grid& g, const PotentialSpec& p, const Tolerances& tol = {}) {
    p.validate(g);
    EpsilonPair out;
    out.eps2 = magnetic_laplacian(g, p);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(out.eps2);
    const RVector& w = es.eigenvalues();
    const double scale = std::max(std::abs(w(0)), std::abs(w(w.size() - 1)));
    if (w(0) <= tol.tol_eig * scale)
        throw NotPositive("eps^2 is not positive definite (min eigenvalue " + std::to_string(w(0)) + ")");
    const CMatrix& q = es.eigenvectors();
    RVector s = w.array().sqrt();
    out.eps = q * s.cast<cplx>().asDiagonal() * q.adjoint();
    out.eps_inv = q * s.cwiseInverse().cast<cplx>().asDiagonal() * q.adjoint();
    out.eps2_eigenvalues = w;
    out.mu = std::sqrt(w(0));
    return out;
}

}  // namespace kreinlat
