#pragma once

// Quasi-free state data for the Klein-Gordon field: sigma, mu, the dominating test on the
// real subspace K_R = {(x, i y) : x, y real}, Weyl expectations and the ground/maximal verdicts.

#include "diagnostics.hpp"

namespace kreinlat {

struct StateData {
    IntervalUnion J;
    CMatrix sigma;    // -i G
    CMatrix mu;       // G (2 P - 1) / 2
    CMatrix j;        // i (2 P - 1)
    RMatrix sigma_R;  // on K_R coordinates r = (x, y)
    RMatrix mu_R;
    bool dominating = false;
    bool dominating_predicted = false;  // J in [0, inf) and no critical point in J-bar
    bool ground = false;
    int degeneracy_dim = 0;
    double mu_R_min_eig = 0.0;
    double cs_worst_ratio = 0.0;  // max |sigma|^2 / (4 mu mu) over sampled pairs
    std::optional<std::pair<RVector, RVector>> violating_pair;
};

// v = E r with E = diag(I, i I)
inline CVector embed_real(const RVector& r) {
    const Eigen::Index n = r.size() / 2;
    CVector v(r.size());
    v.head(n) = r.head(n).cast<cplx>();
    v.tail(n) = I_unit * r.tail(n).cast<cplx>();
    return v;
}

inline CMatrix real_embedding(Eigen::Index dim) {
    CMatrix e = CMatrix::Identity(dim, dim);
    e.bottomRightCorner(dim / 2, dim / 2) *= I_unit;
    return e;
}

inline StateData build_state(const KGModel& m, const SpectrumReport& rep, const IntervalUnion& J,
                             std::mt19937_64& rng, int pairs = 500, const Tolerances& tol = {}) {
    const auto& d = *rep.decomposition;
    StateData s;
    s.J = J;
    const CMatrix p = spectral_projection(d, J);
    const Eigen::Index dim = p.rows();
    const CMatrix id = CMatrix::Identity(dim, dim);
    const CMatrix& g = m.K.G;
    s.sigma = -I_unit * g;
    s.j = I_unit * (2.0 * p - id);
    s.mu = 0.5 * g * (2.0 * p - id);
    const CMatrix e = real_embedding(dim);
    s.sigma_R = (e.adjoint() * s.sigma * e).real();
    RMatrix mr = (e.adjoint() * s.mu * e).real();
    s.mu_R = 0.5 * (mr + mr.transpose());

    // predicted verdict
    bool in_half_line = J.intersect(IntervalUnion::at_least(0.0)) == J;
    bool avoids_critical = true;
    for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
        const auto& ev = rep.eigenvalues[i];
        if (ev.is_critical && J.contains(ev.value.real())) avoids_critical = false;
    }
    s.dominating_predicted = in_half_line && avoids_critical;

    // direct verdict
    Eigen::SelfAdjointEigenSolver<RMatrix> es(s.mu_R);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    s.mu_R_min_eig = es.eigenvalues()(0);
    bool ok = s.mu_R_min_eig >= -tol.pos_tol * scale;
    if (!ok) s.violating_pair = std::make_pair(RVector(es.eigenvectors().col(0)), RVector(es.eigenvectors().col(0)));
    int null_dim = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()(i)) < 1e-8 * scale) ++null_dim;
    s.degeneracy_dim = null_dim;

    auto cs_ratio = [&](const RVector& u, const RVector& v) {
        const double sg = u.dot(s.sigma_R * v);
        const double den = 4.0 * u.dot(s.mu_R * u) * v.dot(s.mu_R * v);
        if (sg * sg <= tol.pos_tol * scale * scale) return 0.0;
        return den > 0.0 ? sg * sg / den : std::numeric_limits<double>::infinity();
    };
    std::normal_distribution<double> N01;
    for (int i = 0; i < pairs; ++i) {
        RVector u(dim), v(dim);
        for (Eigen::Index k = 0; k < dim; ++k) u(k) = N01(rng);
        for (Eigen::Index k = 0; k < dim; ++k) v(k) = N01(rng);
        const double r = cs_ratio(u, v);
        s.cs_worst_ratio = std::max(s.cs_worst_ratio, r);
        if (r > 1.0 + 1e-9 && ok) {
            ok = false;
            s.violating_pair = std::make_pair(u, v);
        }
    }
    // targeted pair: a negative direction a + i b of mu_R + (i/2) sigma_R gives sigma(a,b) > mu(a,a) + mu(b,b)
    CMatrix h = s.mu_R.cast<cplx>() + 0.5 * I_unit * s.sigma_R.cast<cplx>();
    Eigen::SelfAdjointEigenSolver<CMatrix> hs(0.5 * (h + h.adjoint()));
    if (hs.eigenvalues()(0) < -tol.pos_tol * scale) {
        const CVector w = hs.eigenvectors().col(0);
        const RVector a = w.real(), b = w.imag();
        const double r = cs_ratio(a, b);
        s.cs_worst_ratio = std::max(s.cs_worst_ratio, r);
        if (r > 1.0 + 1e-9 && ok) {
            ok = false;
            s.violating_pair = std::make_pair(a, b);
        }
    }
    s.dominating = ok;
    return s;
}

inline double weyl_expectation(const StateData& s, const RVector& r) {
    if (!s.dominating) throw NotAState("mu is not dominating; exp(-mu(v,v)/2) does not define a state");
    if (r.size() != s.mu_R.rows()) throw DimensionMismatch("vector does not live on K_R");
    return std::exp(-0.5 * r.dot(s.mu_R * r));
}

struct GroundStateReport {
    bool ground = false;
    double min_eig = 0.0;  // of b sgn(b)
    double threshold = 0.0;
    bool one_particle_definite = false;  // G sgn(b) positive definite
};

inline GroundStateReport ground_state_check(const KGModel& m, const SpectrumReport& rep, double gap_threshold,
                                            const Tolerances& tol = {}) {
    if (!rep.critical_points().empty() || rep.has_complex())
        throw HypothesisViolated("ground state criterion needs a real spectrum without critical points");
    if (!(gap_threshold > 0.0)) throw InvalidArgument("gap threshold must be positive");
    const auto& d = *rep.decomposition;
    const CMatrix p = spectral_projection(d, IntervalUnion::at_least(0.0));
    const Eigen::Index dim = p.rows();
    const CMatrix sgn = 2.0 * p - CMatrix::Identity(dim, dim);
    const CMatrix bs = m.b.m * sgn;
    GroundStateReport g;
    g.threshold = gap_threshold;
    Eigen::ComplexEigenSolver<CMatrix> es(bs, false);
    double worst = std::numeric_limits<double>::infinity();
    double worst_im = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        worst = std::min(worst, es.eigenvalues()(i).real());
        worst_im = std::max(worst_im, std::abs(es.eigenvalues()(i).imag()));
    }
    g.min_eig = worst;
    const CMatrix gs = m.K.G * sgn;
    g.one_particle_definite = hermitian_min_eig(gs) > tol.inertia_rel;
    g.ground = worst >= gap_threshold - 1e-8 && worst_im <= tol.tol_eig * std::max(1.0, d.spectral_radius()) &&
               g.one_particle_definite;
    return g;
}

enum class StateCase { ground_state, maximal_nonground, none };

inline const char* to_string(StateCase c) {
    switch (c) {
    case StateCase::ground_state: return "ground_state";
    case StateCase::maximal_nonground: return "maximal_nonground";
    case StateCase::none: return "none";
    }
    return "?";
}

struct MaximalSearchResult {
    std::optional<IntervalUnion> J_max;
    StateCase state_case = StateCase::none;
    std::string note;
};

// Critical points are cut out with radius half the distance to the nearest other real eigenvalue.
inline MaximalSearchResult maximal_state_search(const SpectrumReport& rep) {
    MaximalSearchResult r;
    const auto& d = *rep.decomposition;
    const auto crit = rep.critical_points();
    if (crit.empty() && !rep.has_complex()) {
        r.J_max = IntervalUnion::at_least(0.0);
        r.state_case = StateCase::ground_state;
        r.note = "no critical points and real spectrum";
        return r;
    }
    std::vector<std::pair<double, double>> holes;
    for (double c : crit) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& b : d.blocks())
            if (b.real && std::abs(b.center.real() - c) > 0.0) nearest = std::min(nearest, std::abs(b.center.real() - c));
        if (c > 0.0) nearest = std::min(nearest, c);
        holes.emplace_back(c, 0.5 * nearest);
    }
    r.J_max = IntervalUnion::at_least(0.0).puncture(holes);
    r.state_case = StateCase::maximal_nonground;
    r.note = "critical points removed; every critical point is regular in finite dimension, so the "
             "no-maximal-state case cannot occur";
    return r;
}

}  // namespace kreinlat
