#pragma once

#include "spectral.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kreinlat {

struct KreinStructure {
    CMatrix G;
    CMatrix G_inv;
    Eigen::Index dim = 0;

    KreinStructure() = default;
    explicit KreinStructure(CMatrix g, const Tolerances& tol = {}) : G(std::move(g)), dim(G.rows()) {
        if (G.rows() != G.cols()) throw DimensionMismatch("Gram operator must be square");
        if (!is_hermitian(G, tol.tol_mat)) throw InvalidArgument("Gram operator must be Hermitian");
        Eigen::BDCSVD<CMatrix> svd(G);
        const auto& s = svd.singularValues();
        if (s(s.size() - 1) <= tol.tol_inv * std::max(1.0, s(0)))
            throw InvalidArgument("Gram operator must be invertible");
        G_inv = G.inverse();
    }

    static KreinStructure hilbert(Eigen::Index n) { return KreinStructure(CMatrix::Identity(n, n)); }

    // [[0, I], [I, 0]]
    static KreinStructure block_swap(Eigen::Index half) {
        CMatrix z = CMatrix::Zero(half, half), id = CMatrix::Identity(half, half);
        return KreinStructure(blocks(z, id, id, z));
    }

    cplx form(const CVector& u, const CVector& v) const { return u.dot(G * v); }
};

inline void check_dims(const CMatrix& a, const KreinStructure& k) {
    if (a.rows() != a.cols() || a.rows() != k.dim)
        throw DimensionMismatch("operator dimension " + std::to_string(a.rows()) + " does not match Krein space " +
                                std::to_string(k.dim));
}

inline CMatrix krein_adjoint(const CMatrix& a, const KreinStructure& k) {
    check_dims(a, k);
    return k.G_inv * a.adjoint() * k.G;
}

inline bool is_krein_positive(const CMatrix& a, const KreinStructure& k, double tol) {
    check_dims(a, k);
    return hermitian_min_eig(k.G * a) >= -tol;
}

// ---------------------------------------------------------------- intervals

class IntervalUnion {
public:
    using Interval = std::pair<double, double>;
    static constexpr double inf = std::numeric_limits<double>::infinity();

    IntervalUnion() = default;
    explicit IntervalUnion(std::vector<Interval> iv) : iv_(std::move(iv)) { normalize(); }

    static IntervalUnion empty() { return {}; }
    static IntervalUnion real_line() { return IntervalUnion({{-inf, inf}}); }
    static IntervalUnion at_least(double a) { return IntervalUnion({{a, inf}}); }
    static IntervalUnion below(double a) { return IntervalUnion({{-inf, a}}); }

    const std::vector<Interval>& intervals() const { return iv_; }
    bool is_empty() const { return iv_.empty(); }

    bool contains(double x) const {
        for (const auto& [lo, hi] : iv_)
            if (x >= lo && x <= hi) return true;
        return false;
    }

    double distance_to_boundary(double x) const {
        double d = inf;
        for (const auto& [lo, hi] : iv_) {
            if (std::isfinite(lo)) d = std::min(d, std::abs(x - lo));
            if (std::isfinite(hi)) d = std::min(d, std::abs(x - hi));
        }
        return d;
    }

    IntervalUnion intersect(const IntervalUnion& o) const {
        std::vector<Interval> out;
        for (const auto& a : iv_)
            for (const auto& b : o.iv_) {
                double lo = std::max(a.first, b.first), hi = std::min(a.second, b.second);
                if (lo < hi) out.emplace_back(lo, hi);
            }
        return IntervalUnion(std::move(out));
    }

    IntervalUnion complement() const {
        std::vector<Interval> out;
        double cur = -inf;
        for (const auto& [lo, hi] : iv_) {
            if (cur < lo) out.emplace_back(cur, lo);
            cur = hi;
        }
        if (cur < inf) out.emplace_back(cur, inf);
        return IntervalUnion(std::move(out));
    }

    // Remove open neighborhoods (c - r, c + r).
    IntervalUnion puncture(const std::vector<std::pair<double, double>>& holes) const {
        std::vector<Interval> cut;
        for (const auto& [c, r] : holes) cut.emplace_back(c - r, c + r);
        return intersect(IntervalUnion(std::move(cut)).complement());
    }

    double lower_edge() const { return iv_.empty() ? inf : iv_.front().first; }
    double upper_edge() const { return iv_.empty() ? -inf : iv_.back().second; }

    bool operator==(const IntervalUnion& o) const { return iv_ == o.iv_; }

    std::string str() const {
        if (iv_.empty()) return "{}";
        std::string s;
        auto num = [](double v) {
            if (v == inf) return std::string("inf");
            if (v == -inf) return std::string("-inf");
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6g", v);
            return std::string(buf);
        };
        for (const auto& [lo, hi] : iv_) {
            if (!s.empty()) s += " u ";
            s += "[" + num(lo) + ", " + num(hi) + "]";
        }
        return s;
    }

private:
    void normalize() {
        for (const auto& [lo, hi] : iv_)
            if (std::isnan(lo) || std::isnan(hi)) throw InvalidArgument("interval endpoint is NaN");
        std::vector<Interval> in;
        for (const auto& p : iv_)
            if (p.first < p.second) in.push_back(p);
        std::sort(in.begin(), in.end());
        std::vector<Interval> out;
        for (const auto& p : in) {
            if (!out.empty() && p.first <= out.back().second)
                out.back().second = std::max(out.back().second, p.second);
            else
                out.push_back(p);
        }
        iv_ = std::move(out);
    }

    std::vector<Interval> iv_;
};

// ---------------------------------------------------------------- spectrum classification

enum class SignType { positive, negative, mixed, neutral };

inline const char* to_string(SignType s) {
    switch (s) {
    case SignType::positive: return "positive";
    case SignType::negative: return "negative";
    case SignType::mixed: return "mixed";
    case SignType::neutral: return "neutral";
    }
    return "?";
}

// none: critical = mixed or defective (pure inertia).
// frequency: additionally flags definite eigenvalues whose type disagrees with sgn(lambda),
// the finite-dimensional signature of the Klein paradox for b.
enum class SignReference { none, frequency };

struct EigenEntry {
    cplx value;
    int multiplicity = 1;
    SignType sign_type = SignType::positive;
    bool is_critical = false;
    bool jordan_defective = false;
    bool type_inverted = false;
    double gram_min = 0.0, gram_max = 0.0;  // inertia data of the restricted form
};

struct SpectrumReport {
    std::vector<EigenEntry> eigenvalues;  // one per cluster, index = block index
    std::vector<std::vector<int>> clusters;
    std::vector<std::pair<int, int>> complex_pairs;  // (Im > 0, Im < 0)
    std::shared_ptr<const SpectralDecomposition> decomposition;
    KreinStructure krein;
    SignReference reference = SignReference::none;

    std::vector<double> critical_points() const {
        std::vector<double> c;
        for (const auto& e : eigenvalues)
            if (e.is_critical) c.push_back(e.value.real());
        return c;
    }
    bool has_complex() const { return !complex_pairs.empty(); }
    double min_abs_eigenvalue() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& e : eigenvalues) m = std::min(m, std::abs(e.value));
        return m;
    }
};

inline SpectrumReport classify_spectrum(const CMatrix& a, const KreinStructure& k,
                                        SignReference ref = SignReference::none, const Tolerances& tol = {}) {
    check_dims(a, k);
    auto dec = std::make_shared<const SpectralDecomposition>(SpectralDecomposition::compute(a, tol));
    SpectrumReport rep;
    rep.decomposition = dec;
    rep.krein = k;
    rep.reference = ref;
    const double gnorm = op_norm(k.G);
    const double thr = tol.inertia_rel * gnorm;
    for (const auto& b : dec->blocks()) {
        EigenEntry e;
        e.value = b.center;
        e.multiplicity = b.size();
        rep.clusters.push_back(b.members);
        CMatrix gram = b.X.adjoint() * k.G * b.X;
        Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (gram + gram.adjoint()), Eigen::EigenvaluesOnly);
        e.gram_min = es.eigenvalues()(0);
        e.gram_max = es.eigenvalues()(es.eigenvalues().size() - 1);
        e.jordan_defective = dec->defective(b);
        if (!b.real) {
            e.sign_type = SignType::neutral;
        } else {
            if (e.gram_min > thr)
                e.sign_type = SignType::positive;
            else if (e.gram_max < -thr)
                e.sign_type = SignType::negative;
            else
                e.sign_type = SignType::mixed;
            if (ref == SignReference::frequency) {
                const double lam = b.center.real();
                e.type_inverted = (e.sign_type == SignType::negative && lam > 0.0) ||
                                  (e.sign_type == SignType::positive && lam < 0.0);
            }
            e.is_critical = e.sign_type == SignType::mixed || e.jordan_defective || e.type_inverted;
        }
        rep.eigenvalues.push_back(e);
    }
    // conjugate pairing
    const auto& bl = dec->blocks();
    const double pair_tol = std::max(1e3 * dec->gap_min(), tol.tol_eig * std::max(1.0, dec->spectral_radius()));
    std::vector<bool> used(bl.size(), false);
    for (std::size_t i = 0; i < bl.size(); ++i) {
        if (bl[i].real || bl[i].center.imag() < 0.0) continue;
        int best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < bl.size(); ++j) {
            if (bl[j].real || used[j] || bl[j].center.imag() > 0.0) continue;
            double d = std::abs(bl[j].center - std::conj(bl[i].center));
            if (d < bd) { bd = d; best = static_cast<int>(j); }
        }
        if (best < 0 || bd > pair_tol || bl[best].size() != bl[i].size())
            throw InconsistentClassification("unpaired non-real eigenvalue; the operator is not Krein self-adjoint");
        used[i] = used[best] = true;
        rep.complex_pairs.emplace_back(static_cast<int>(i), best);
    }
    for (std::size_t i = 0; i < bl.size(); ++i)
        if (!bl[i].real && !used[i])
            throw InconsistentClassification("unpaired non-real eigenvalue; the operator is not Krein self-adjoint");
    return rep;
}

// Riesz projection for a set of raw eigenvalue indices (see SpectralDecomposition::eigenvalues).
inline CMatrix riesz_projection(const CMatrix& a, const std::vector<int>& cluster, const Tolerances& tol = {}) {
    return SpectralDecomposition::compute(a, tol).riesz_projection(cluster);
}

inline CMatrix complex_part_projection(const SpectralDecomposition& d) {
    return d.sum_projections([](const SpectralBlock& b) { return !b.real; });
}
inline CMatrix complex_part_projection(const CMatrix& a, const Tolerances& tol = {}) {
    return complex_part_projection(SpectralDecomposition::compute(a, tol));
}

// ---------------------------------------------------------------- definitizing polynomials

// p(x) = lead * prod (x - r_i) * prod |x - z_j|^2, with r_i real roots and z_j non-real.
struct RealPolynomial {
    double lead = 1.0;
    std::vector<double> real_roots;
    std::vector<cplx> conjugate_roots;  // each contributes (x - z)(x - conj z)

    int degree() const { return static_cast<int>(real_roots.size() + 2 * conjugate_roots.size()); }

    double operator()(double x) const {
        double v = lead;
        for (double r : real_roots) v *= (x - r);
        for (const cplx& z : conjugate_roots) v *= std::norm(cplx(x, 0.0) - z);
        return v;
    }

    // p(M) for a square matrix by the factored form
    CMatrix apply(const CMatrix& m) const {
        const auto n = m.rows();
        CMatrix id = CMatrix::Identity(n, n);
        CMatrix out = lead * id;
        for (double r : real_roots) out = out * (m - r * id);
        for (const cplx& z : conjugate_roots) out = out * ((m - z * id) * (m - std::conj(z) * id));
        return out;
    }

    // ascending real coefficients
    std::vector<double> coefficients() const {
        std::vector<cplx> c{cplx(lead)};
        auto mul = [&](cplx root) {
            std::vector<cplx> n(c.size() + 1, 0.0);
            for (std::size_t i = 0; i < c.size(); ++i) {
                n[i + 1] += c[i];
                n[i] -= root * c[i];
            }
            c.swap(n);
        };
        for (double r : real_roots) mul(r);
        for (const cplx& z : conjugate_roots) {
            mul(z);
            mul(std::conj(z));
        }
        std::vector<double> out;
        for (const auto& v : c) out.push_back(v.real());
        return out;
    }
};

// p(A) through the spectral blocks: sum_b X_b p(M_b) Zh_b.
inline CMatrix polynomial_of(const SpectralDecomposition& d, const RealPolynomial& p) {
    CMatrix out = CMatrix::Zero(d.dim(), d.dim());
    for (const auto& b : d.blocks()) out += b.X * p.apply(b.M) * b.Zh;
    return out;
}

inline RealPolynomial definitizing_polynomial(const SpectrumReport& rep, const Tolerances& tol = {}) {
    const auto& d = *rep.decomposition;
    RealPolynomial p;
    struct Pt {
        double x;
        int sign;
    };
    std::vector<Pt> definite;
    for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
        const auto& e = rep.eigenvalues[i];
        const auto& b = d.blocks()[i];
        if (!b.real) {
            if (e.value.imag() > 0.0)
                for (int r = 0; r < b.size(); ++r) p.conjugate_roots.push_back(e.value);
            continue;
        }
        if (e.is_critical) {
            // even order at least the block size kills the whole block
            const int order = 2 * ((b.size() + 1) / 2);
            for (int r = 0; r < order; ++r) p.real_roots.push_back(e.value.real());
            continue;
        }
        definite.push_back({e.value.real(), e.sign_type == SignType::positive ? 1 : -1});
    }
    std::sort(definite.begin(), definite.end(), [](const Pt& a, const Pt& b) { return a.x < b.x; });
    for (std::size_t i = 1; i < definite.size(); ++i) {
        if (definite[i].sign == definite[i - 1].sign) continue;
        const double lo = definite[i - 1].x, hi = definite[i].x;
        // prefer a root at 0 so the subcritical answer is p(x) = x
        p.real_roots.push_back(lo < 0.0 && hi > 0.0 ? 0.0 : 0.5 * (lo + hi));
    }
    if (!definite.empty()) {
        const double v = p(definite.back().x);
        if ((v > 0) != (definite.back().sign > 0)) p.lead = -1.0;
    }
    // normalise so that max |p| over the spectrum is 1
    double scale = 0.0;
    for (const auto& e : rep.eigenvalues)
        if (e.value.imag() == 0.0) scale = std::max(scale, std::abs(p(e.value.real())));
    if (scale > 0.0) p.lead /= scale;
    CMatrix pa = polynomial_of(d, p);
    const double ref = std::max(op_norm(rep.krein.G * pa), 1e-300);
    if (!is_krein_positive(pa, rep.krein, tol.inertia_rel * ref))
        throw ConstructionFailed("definitizing polynomial failed the a-posteriori positivity check");
    return p;
}

}  // namespace kreinlat
