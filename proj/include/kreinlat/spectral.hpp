#pragma once

// Eigenvalue clusters and their Riesz projections for dense matrices.
// Works for defective and non-normal matrices: each cluster is moved to the top of
// the complex Schur form by Givens swaps and split off with a triangular Sylvester solve.

#include "core.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <numeric>
#include <vector>

namespace kreinlat {

struct SpectralBlock {
    std::vector<int> members;  // indices into SpectralDecomposition::eigenvalues
    cplx center;               // mean of the members (real part only if real)
    bool real = true;
    CMatrix X;   // n x k, orthonormal basis of the invariant subspace
    CMatrix Zh;  // k x n, P = X * Zh
    CMatrix M;   // k x k, A X = X M
    double spread = 0.0;

    int size() const { return static_cast<int>(members.size()); }
    CMatrix projection() const { return X * Zh; }
};

namespace detail {

// LAPACK zlartg: [c s; -conj(s) c] [f; g] = [r; 0]
inline void givens(cplx f, cplx g, double& c, cplx& s) {
    const double af = std::abs(f), ag = std::abs(g);
    if (ag == 0.0) { c = 1.0; s = 0.0; return; }
    if (af == 0.0) { c = 0.0; s = std::conj(g) / ag; return; }
    const double nrm = std::hypot(af, ag);
    c = af / nrm;
    s = (f / af) * std::conj(g) / nrm;
}

// x <- c x + s y ; y <- c y - conj(s) x
template <class A, class B>
inline void rot(A&& x, B&& y, double c, cplx s) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        cplx xi = x(i), yi = y(i);
        x(i) = c * xi + s * yi;
        y(i) = c * yi - std::conj(s) * xi;
    }
}

// Swap diagonal entries k and k+1 of upper triangular t, updating q (ztrexc step).
inline void schur_swap(CMatrix& t, CMatrix& q, Eigen::Index k) {
    const Eigen::Index n = t.rows();
    const cplx t11 = t(k, k), t22 = t(k + 1, k + 1);
    double c;
    cplx s;
    givens(t(k, k + 1), t22 - t11, c, s);
    if (k + 2 < n) rot(t.row(k).tail(n - k - 2), t.row(k + 1).tail(n - k - 2), c, s);
    if (k > 0) rot(t.col(k).head(k), t.col(k + 1).head(k), c, std::conj(s));
    t(k, k) = t22;
    t(k + 1, k + 1) = t11;
    rot(q.col(k), q.col(k + 1), c, std::conj(s));
}

// Solve T11 Y - Y T22 = C for upper triangular T11, T22.
inline CMatrix triangular_sylvester(const CMatrix& t11, const CMatrix& t22, const CMatrix& c) {
    const Eigen::Index k = t11.rows(), m = t22.rows();
    CMatrix y(k, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        CVector rhs = c.col(j);
        if (j > 0) rhs += y.leftCols(j) * t22.col(j).head(j);
        CMatrix shifted = t11;
        shifted.diagonal().array() -= t22(j, j);
        y.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
    }
    return y;
}

}  // namespace detail

class SpectralDecomposition {
public:
    SpectralDecomposition() = default;

    // Hermitian input takes the orthonormal eigenvector route.
    static SpectralDecomposition compute(const CMatrix& a, const Tolerances& tol = {}) {
        if (a.rows() != a.cols()) throw DimensionMismatch("spectral decomposition needs a square matrix");
        SpectralDecomposition d;
        d.n_ = a.rows();
        d.tol_ = tol;
        if (is_hermitian(a, tol.tol_mat))
            d.init_hermitian(a);
        else
            d.init_general(a);
        return d;
    }

    Eigen::Index dim() const { return n_; }
    bool hermitian() const { return hermitian_; }
    const std::vector<cplx>& eigenvalues() const { return eig_; }
    const std::vector<bool>& is_real() const { return real_; }
    const std::vector<SpectralBlock>& blocks() const { return blocks_; }
    double spectral_radius() const { return radius_; }
    double gap_min() const { return tol_.gap_min_rel * std::max(radius_, 1e-300); }
    double im_threshold() const { return tol_.im_threshold_rel * std::max(radius_, 1e-300); }
    const Tolerances& tolerances() const { return tol_; }
    // which block each eigenvalue belongs to
    int block_of(int eig_index) const { return owner_[eig_index]; }

    // Riesz projection onto an arbitrary union of eigenvalue indices. The union must be a
    // union of clusters separated from the rest by more than gap_min.
    CMatrix riesz_projection(const std::vector<int>& indices) const {
        std::vector<bool> chosen(eig_.size(), false);
        for (int i : indices) {
            if (i < 0 || i >= static_cast<int>(eig_.size())) throw InvalidArgument("eigenvalue index out of range");
            chosen[i] = true;
        }
        double sep = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < eig_.size(); ++i)
            for (std::size_t j = 0; j < eig_.size(); ++j)
                if (chosen[i] && !chosen[j]) sep = std::min(sep, std::abs(eig_[i] - eig_[j]));
        if (sep <= gap_min())
            throw ClusterNotIsolated("requested cluster is within gap_min of the remaining spectrum");
        CMatrix p = CMatrix::Zero(n_, n_);
        for (const auto& b : blocks_)
            if (chosen[b.members.front()]) p += b.projection();
        return p;
    }

    template <class Pred>
    CMatrix sum_projections(Pred&& keep) const {
        CMatrix p = CMatrix::Zero(n_, n_);
        for (const auto& b : blocks_)
            if (keep(b)) p += b.projection();
        return p;
    }

    // Factored form of sum over selected blocks of exp(i t M_b) P_b, returned as (L, R)
    // with the sum equal to L * R. R is the stacked Zh rows.
    template <class Pred>
    void evolution_factors(double t, Pred&& keep, CMatrix& left, CMatrix& right) const {
        Eigen::Index k = 0;
        for (const auto& b : blocks_)
            if (keep(b)) k += b.size();
        left.resize(n_, k);
        right.resize(k, n_);
        Eigen::Index off = 0;
        for (const auto& b : blocks_) {
            if (!keep(b)) continue;
            const int s = b.size();
            left.middleCols(off, s) = b.X * block_exponential(b, t);
            right.middleRows(off, s) = b.Zh;
            off += s;
        }
    }

    template <class Pred>
    CMatrix evolve(double t, Pred&& keep) const {
        CMatrix l, r;
        evolution_factors(t, keep, l, r);
        return l * r;
    }
    CMatrix evolve(double t) const {
        return evolve(t, [](const SpectralBlock&) { return true; });
    }

    // exp(i t M_b), guarded against overflow from growing modes.
    static CMatrix block_exponential(const SpectralBlock& b, double t) {
        const double growth = -b.center.imag() * t;
        if (growth > 690.0) throw Overflow("exp(i lambda t) exceeds 1e300 for a non-real mode");
        if (b.size() == 1) return CMatrix::Constant(1, 1, std::exp(I_unit * b.M(0, 0) * t));
        // shift by the center so the nilpotent part stays small
        CMatrix nm = b.M;
        nm.diagonal().array() -= b.center;
        CMatrix e = (I_unit * t * nm).exp();
        return std::exp(I_unit * b.center * t) * e;
    }

    // Jordan structure: P (A - c) P restricted to the block, with a threshold that ignores the
    // spread of a near-degenerate semisimple cluster.
    bool defective(const SpectralBlock& b) const {
        if (b.size() == 1) return false;
        CMatrix nm = b.M;
        nm.diagonal().array() -= b.center;
        const double thr = std::max(100.0 * b.spread, tol_.tol_eig * std::max(radius_, 1.0));
        return op_norm(nm) > thr;
    }

private:
    void classify_realness() {
        radius_ = 0.0;
        for (const auto& z : eig_) radius_ = std::max(radius_, std::abs(z));
        const double thr = im_threshold();
        real_.assign(eig_.size(), true);
        for (std::size_t i = 0; i < eig_.size(); ++i) {
            const double im = std::abs(eig_[i].imag());
            if (im > thr)
                real_[i] = false;
            else if (im >= 0.1 * thr)
                throw AmbiguousRealness("eigenvalue " + std::to_string(eig_[i].real()) + "+" +
                                        std::to_string(eig_[i].imag()) + "i lies in the realness dead band");
        }
    }

    // Single-linkage clusters; real and non-real eigenvalues never share a cluster.
    std::vector<std::vector<int>> cluster_indices() const {
        const int m = static_cast<int>(eig_.size());
        std::vector<int> parent(m);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int i) {
            while (parent[i] != i) i = parent[i] = parent[parent[i]];
            return i;
        };
        const double g = gap_min();
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                if (real_[i] != real_[j]) continue;
                cplx zi = real_[i] ? cplx(eig_[i].real(), 0) : eig_[i];
                cplx zj = real_[j] ? cplx(eig_[j].real(), 0) : eig_[j];
                if (std::abs(zi - zj) <= g) parent[find(i)] = find(j);
            }
        std::vector<std::vector<int>> out;
        std::vector<int> slot(m, -1);
        for (int i = 0; i < m; ++i) {
            int r = find(i);
            if (slot[r] < 0) {
                slot[r] = static_cast<int>(out.size());
                out.emplace_back();
            }
            out[slot[r]].push_back(i);
        }
        // deterministic order: by real part, then imaginary part
        std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
            const cplx za = eig_[a.front()], zb = eig_[b.front()];
            if (za.real() != zb.real()) return za.real() < zb.real();
            return za.imag() < zb.imag();
        });
        return out;
    }

    void finish_block(SpectralBlock& b) {
        cplx c = 0.0;
        for (int i : b.members) c += eig_[i];
        c /= static_cast<double>(b.members.size());
        b.real = real_[b.members.front()];
        if (b.real) c = cplx(c.real(), 0.0);
        b.center = c;
        b.spread = 0.0;
        for (int i : b.members) b.spread = std::max(b.spread, std::abs(eig_[i] - c));
    }

    void index_owners() {
        owner_.assign(eig_.size(), -1);
        for (std::size_t bi = 0; bi < blocks_.size(); ++bi)
            for (int i : blocks_[bi].members) owner_[i] = static_cast<int>(bi);
    }

    void init_hermitian(const CMatrix& a) {
        hermitian_ = true;
        Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (a + a.adjoint()));
        eig_.resize(n_);
        for (Eigen::Index i = 0; i < n_; ++i) eig_[i] = es.eigenvalues()(i);
        classify_realness();
        for (auto& members : cluster_indices()) {
            SpectralBlock b;
            b.members = members;
            const int k = static_cast<int>(members.size());
            b.X.resize(n_, k);
            b.M = CMatrix::Zero(k, k);
            for (int c = 0; c < k; ++c) {
                b.X.col(c) = es.eigenvectors().col(members[c]);
                b.M(c, c) = eig_[members[c]];
            }
            b.Zh = b.X.adjoint();
            finish_block(b);
            blocks_.push_back(std::move(b));
        }
        index_owners();
    }

    void init_general(const CMatrix& a) {
        hermitian_ = false;
        Eigen::ComplexSchur<CMatrix> schur(a);
        if (schur.info() != Eigen::Success) throw ConstructionFailed("Schur decomposition did not converge");
        const CMatrix& t0 = schur.matrixT();
        const CMatrix& q0 = schur.matrixU();
        eig_.resize(n_);
        for (Eigen::Index i = 0; i < n_; ++i) eig_[i] = t0(i, i);
        classify_realness();
        for (auto& members : cluster_indices()) {
            SpectralBlock b;
            b.members = members;
            const Eigen::Index k = static_cast<Eigen::Index>(members.size());
            CMatrix t = t0, q = q0;
            // eigenvalue index == initial diagonal position; bubble members to the top
            std::vector<int> pos(members.begin(), members.end());
            std::sort(pos.begin(), pos.end());
            for (Eigen::Index target = 0; target < k; ++target)
                for (Eigen::Index p = pos[target]; p > target; --p) detail::schur_swap(t, q, p - 1);
            const Eigen::Index rest = n_ - k;
            b.X = q.leftCols(k);
            b.M = t.topLeftCorner(k, k).triangularView<Eigen::Upper>();
            CMatrix upper(k, n_);
            upper.leftCols(k).setIdentity();
            if (rest > 0) {
                CMatrix t22 = t.bottomRightCorner(rest, rest).triangularView<Eigen::Upper>();
                upper.rightCols(rest) =
                    detail::triangular_sylvester(b.M, t22, t.topRightCorner(k, rest));
            }
            b.Zh = upper * q.adjoint();
            finish_block(b);
            blocks_.push_back(std::move(b));
        }
        index_owners();
    }

    Eigen::Index n_ = 0;
    bool hermitian_ = false;
    Tolerances tol_;
    double radius_ = 0.0;
    std::vector<cplx> eig_;
    std::vector<bool> real_;
    std::vector<SpectralBlock> blocks_;
    std::vector<int> owner_;
};

}  // namespace kreinlat
