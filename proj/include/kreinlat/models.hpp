#pragma once

#include "krein.hpp"
#include "lattice.hpp"

namespace kreinlat {

// h = -i sigma_1 (x) D_A - V - m sigma_3, spinor components stored as [upper (n), lower (n)].
struct DiracModel {
    Grid grid;
    PotentialSpec pot;
    DenseOperator h;
    DenseOperator gamma0;  // -i beta, beta = sigma_3
};

inline DiracModel build_dirac(const Grid& g, const PotentialSpec& p) {
    p.validate(g);
    const CMatrix d = covariant_central_difference(g, p);
    const CMatrix mi = -I_unit * d;
    CMatrix vm = CMatrix::Zero(g.n, g.n), vp = CMatrix::Zero(g.n, g.n);
    for (int j = 0; j < g.n; ++j) {
        vm(j, j) = -p.V(j) - p.m(j);
        vp(j, j) = -p.V(j) + p.m(j);
    }
    DiracModel model{g, p, {blocks(vm, mi, mi, vp), Space::dirac_spinor}, {}};
    CMatrix g0 = CMatrix::Zero(2 * g.n, 2 * g.n);
    g0.diagonal().head(g.n).setConstant(-I_unit);
    g0.diagonal().tail(g.n).setConstant(I_unit);
    model.gamma0 = {g0, Space::dirac_spinor};
    return model;
}

struct KGModel {
    Grid grid;
    PotentialSpec pot;
    DenseOperator b;  // [[V, I], [eps^2, V]]
    KreinStructure K;
    EpsilonPair eps_pair;
    DenseOperator energy_form;  // eps (1 - c* c) eps
    CMatrix c;                  // V eps^{-1}
    double c_norm = 0.0;
    double c_threshold_distance = 0.0;  // min |1 - s^2| over singular values s of c

    Eigen::Index half() const { return grid.n; }
};

inline KGModel build_kg(const Grid& g, const PotentialSpec& p, const Tolerances& tol = {}) {
    KGModel m;
    m.grid = g;
    m.pot = p;
    m.eps_pair = discretize_schrodinger(g, p, tol);
    const Eigen::Index n = g.n;
    CMatrix v = p.V.cast<cplx>().asDiagonal();
    CMatrix id = CMatrix::Identity(n, n);
    m.b = {blocks(v, id, m.eps_pair.eps2, v), Space::krein_doubled};
    m.K = KreinStructure::block_swap(n);
    m.c = v * m.eps_pair.eps_inv;
    Eigen::BDCSVD<CMatrix> svd(m.c);
    const auto& s = svd.singularValues();
    m.c_norm = s(0);
    m.c_threshold_distance = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < s.size(); ++i)
        m.c_threshold_distance = std::min(m.c_threshold_distance, std::abs(1.0 - s(i) * s(i)));
    const CMatrix& e = m.eps_pair.eps;
    CMatrix ef = e * (id - m.c.adjoint() * m.c) * e;
    m.energy_form = {0.5 * (ef + ef.adjoint()), Space::plain};
    const double bn = op_norm(m.b.m);
    const double dev = op_norm(krein_adjoint(m.b.m, m.K) - m.b.m);
    if (dev > tol.tol_mat * bn) throw ConstructionFailed("assembled b is not Krein self-adjoint");
    return m;
}

// T = [[I, 0], [V, I]]
inline CMatrix similarity_T(const KGModel& m) {
    const Eigen::Index n = m.half();
    CMatrix id = CMatrix::Identity(n, n);
    return blocks(id, CMatrix::Zero(n, n), m.pot.V.cast<cplx>().asDiagonal(), id);
}

// a = [[0, I], [eps^2 - V^2, 2V]]
inline CMatrix similarity_partner(const KGModel& m) {
    const Eigen::Index n = m.half();
    CMatrix id = CMatrix::Identity(n, n);
    CMatrix v = m.pot.V.cast<cplx>().asDiagonal();
    return blocks(CMatrix::Zero(n, n), id, m.eps_pair.eps2 - v * v, 2.0 * v);
}

// b' = [[-V, I], [eps^2, -V]]
inline CMatrix primed_operator(const KGModel& m) {
    const Eigen::Index n = m.half();
    CMatrix v = m.pot.V.cast<cplx>().asDiagonal();
    return blocks(-v, CMatrix::Identity(n, n), m.eps_pair.eps2, -v);
}

// Blocks of (b' - w)(b + w) against q(w) = eps^2 - (V + w)^2.
struct FactorizationResidual {
    double diag_dev = 0.0;         // ||block_11 - q|| + ||block_22 - q||
    double upper_dev = 0.0;        // ||block_12||
    double lower_dev = 0.0;        // ||block_21 - [eps^2, V]||
    double lower_block_norm = 0.0; // ||block_21||, nonzero unless V is constant
};

inline FactorizationResidual factorization_residual(const KGModel& m, double w) {
    const Eigen::Index n = m.half();
    const Eigen::Index dim = 2 * n;
    CMatrix id2 = CMatrix::Identity(dim, dim);
    CMatrix prod = (primed_operator(m) - w * id2) * (m.b.m + w * id2);
    CMatrix v = m.pot.V.cast<cplx>().asDiagonal();
    CMatrix vw = v + w * CMatrix::Identity(n, n);
    CMatrix qw = m.eps_pair.eps2 - vw * vw;
    CMatrix comm = m.eps_pair.eps2 * v - v * m.eps_pair.eps2;
    FactorizationResidual r;
    r.diag_dev = (prod.topLeftCorner(n, n) - qw).norm() + (prod.bottomRightCorner(n, n) - qw).norm();
    r.upper_dev = prod.topRightCorner(n, n).norm();
    r.lower_dev = (prod.bottomLeftCorner(n, n) - comm).norm();
    r.lower_block_norm = prod.bottomLeftCorner(n, n).norm();
    return r;
}

enum class Criticality { subcritical, overcritical_regular, overcritical_complex };

inline const char* to_string(Criticality c) {
    switch (c) {
    case Criticality::subcritical: return "subcritical";
    case Criticality::overcritical_regular: return "overcritical_regular";
    case Criticality::overcritical_complex: return "overcritical_complex";
    }
    return "?";
}

struct CriticalityVerdict {
    Criticality kind = Criticality::subcritical;
    std::optional<double> gap_alpha;
    std::string split;  // which c0/c1 split justified gap_alpha
    double energy_form_min = 0.0;
    std::vector<double> critical_points;
    int complex_pairs = 0;
    double min_abs_eigenvalue = 0.0;
};

inline bool potential_decays(const KGModel& m) {
    const auto& v = m.pot.V;
    const double peak = v.cwiseAbs().maxCoeff();
    if (peak == 0.0) return true;
    const int n = static_cast<int>(v.size());
    return std::max(std::abs(v(0)), std::abs(v(n - 1))) < 1e-3 * peak;
}

inline CriticalityVerdict classify_criticality(const KGModel& m, const SpectrumReport& rep, const Tolerances& tol = {}) {
    CriticalityVerdict v;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m.energy_form.m, Eigen::EigenvaluesOnly);
    v.energy_form_min = es.eigenvalues()(0);
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    const bool positive = v.energy_form_min > tol.tol_eig * scale;
    v.critical_points = rep.critical_points();
    v.complex_pairs = static_cast<int>(rep.complex_pairs.size());
    v.min_abs_eigenvalue = rep.min_abs_eigenvalue();
    if (v.min_abs_eigenvalue <= rep.decomposition->gap_min())
        throw HypothesisViolated("b has an eigenvalue at 0; such scenarios are not supported");
    if (m.c_threshold_distance < 1e-6)
        throw HypothesisViolated("1 is (numerically) an eigenvalue of c* c");
    const double mu = m.eps_pair.mu;
    if (positive) {
        if (rep.has_complex() || !v.critical_points.empty())
            throw InconsistentClassification("positive energy form but non-real or critical spectrum");
        v.kind = Criticality::subcritical;
        if (m.c_norm < 1.0) {
            v.gap_alpha = (1.0 - m.c_norm) * mu;
            v.split = "c0 = c (bounded)";
        } else if (potential_decays(m)) {
            v.gap_alpha = mu;
            v.split = "c0 = 0, c1 = c (decaying)";
        }
        return v;
    }
    v.kind = rep.has_complex() ? Criticality::overcritical_complex : Criticality::overcritical_regular;
    if (potential_decays(m)) {
        v.gap_alpha = mu;
        v.split = "c0 = 0, c1 = c (decaying)";
    }
    return v;
}

}  // namespace kreinlat
