#pragma once

// Smooth functional calculus: almost-analytic extensions, the Davies (Helffer-Sjostrand)
// integral by midpoint quadrature, and exact interval projections from Riesz sums.

#include "jet.hpp"
#include "krein.hpp"

#include <functional>
#include <optional>

namespace kreinlat {

// ---------------------------------------------------------------- smooth functions

struct SmoothFunction {
    std::string name;
    std::function<Jet(const Jet&)> jet;     // real-line function in Taylor arithmetic
    std::function<cplx(cplx)> holomorphic;  // optional entire extension
    std::optional<std::pair<double, double>> support;  // compact or effective support

    double operator()(double x) const { return jet(Jet(0, x))[0]; }
    Jet taylor(double x, int order) const { return jet(Jet::variable(order, x)); }
};

namespace detail {

// Smooth step: 0 for u <= 0, 1 for u >= 1.
inline Jet smooth_step(const Jet& u) {
    const double u0 = u[0];
    if (u0 <= 0.0) return Jet(u.order(), 0.0);
    if (u0 >= 1.0) return Jet(u.order(), 1.0);
    Jet a = exp(-1.0 / u), b = exp(-1.0 / (1.0 - u));
    return a / (a + b);
}

// Value and first derivative of smooth_step without Taylor arithmetic (hot quadrature loop).
inline void smooth_step_d1(double u, double& v, double& dv) {
    if (u <= 0.0 || u >= 1.0) {
        v = u <= 0.0 ? 0.0 : 1.0;
        dv = 0.0;
        return;
    }
    const double a = std::exp(-1.0 / u), b = std::exp(-1.0 / (1.0 - u));
    const double s = a + b;
    v = a / s;
    dv = a * b * (1.0 / (u * u) + 1.0 / ((1.0 - u) * (1.0 - u))) / (s * s);
}

}  // namespace detail

// Canonical cutoff chi: 1 on |s| <= 1/2, 0 on |s| >= 1.
inline Jet chi_profile(const Jet& s) {
    Jet a = s[0] < 0.0 ? -s : s;
    return detail::smooth_step(2.0 - 2.0 * a);
}

inline void chi_profile_d1(double s, double& v, double& dv) {
    detail::smooth_step_d1(2.0 - 2.0 * std::abs(s), v, dv);
    dv *= s < 0.0 ? 2.0 : -2.0;
}

namespace fn {

inline SmoothFunction gaussian(double center = 0.0, double width = 1.0, double amplitude = 1.0) {
    SmoothFunction f;
    f.name = "gaussian";
    f.jet = [=](const Jet& x) {
        Jet u = (x - center) / width;
        return amplitude * exp(-(u * u));
    };
    f.holomorphic = [=](cplx z) {
        cplx u = (z - center) / width;
        return amplitude * std::exp(-u * u);
    };
    f.support = std::make_pair(center - 6.5 * width, center + 6.5 * width);
    return f;
}

inline SmoothFunction sech2(double center = 0.0, double width = 1.0, double amplitude = 1.0) {
    SmoothFunction f;
    f.name = "sech2";
    f.jet = [=](const Jet& x) {
        Jet u = (x - center) / width;
        Jet e = exp(u[0] > 0 ? -u : u);  // stable for large |u|
        Jet d = 1.0 + e * e;
        return amplitude * 4.0 * (e * e) / (d * d);
    };
    f.support = std::make_pair(center - 19.0 * width, center + 19.0 * width);
    return f;
}

// (1 + cos(pi (x - c) / a)) / 2 on |x - c| < a. Only C^1 at the edges.
inline SmoothFunction raised_cosine(double center = 0.0, double half_width = 1.0, double amplitude = 1.0) {
    SmoothFunction f;
    f.name = "raised_cosine";
    f.jet = [=](const Jet& x) {
        if (std::abs(x[0] - center) >= half_width) return Jet(x.order(), 0.0);
        return amplitude * 0.5 * (1.0 + cos((pi / half_width) * (x - center)));
    };
    f.support = std::make_pair(center - half_width, center + half_width);
    return f;
}

// C-infinity bump exp(1 - 1/(1 - u^2)), u = (x - c)/a, value 1 at the center.
inline SmoothFunction bump(double center = 0.0, double half_width = 1.0, double amplitude = 1.0) {
    SmoothFunction f;
    f.name = "bump";
    f.jet = [=](const Jet& x) {
        Jet u = (x - center) / half_width;
        if (std::abs(u[0]) >= 1.0) return Jet(x.order(), 0.0);
        return amplitude * exp(1.0 - 1.0 / (1.0 - u * u));
    };
    f.support = std::make_pair(center - half_width, center + half_width);
    return f;
}

inline SmoothFunction product(const SmoothFunction& a, const SmoothFunction& b) {
    SmoothFunction f;
    f.name = a.name + "*" + b.name;
    f.jet = [a, b](const Jet& x) { return a.jet(x) * b.jet(x); };
    if (a.holomorphic && b.holomorphic) f.holomorphic = [a, b](cplx z) { return a.holomorphic(z) * b.holomorphic(z); };
    if (a.support && b.support) {
        double lo = std::max(a.support->first, b.support->first), hi = std::min(a.support->second, b.support->second);
        f.support = std::make_pair(lo, std::max(lo, hi));
    } else {
        f.support = a.support ? a.support : b.support;
    }
    return f;
}

}  // namespace fn

// ---------------------------------------------------------------- Davies quadrature

struct AlmostAnalyticExtension {
    enum class Kind {
        taylor,       // sum_{r<=N} f^(r)(x) (iy)^r / r! * chi(y / (delta <x>))
        holomorphic,  // f(z) chi(y / (delta <x>)) Psi(x), for entire f
    };
    SmoothFunction f;
    int N = 3;
    double delta = 0.5;
    Kind kind = Kind::taylor;

    // d f~ / d zbar at z = x + iy, for the given delta. psi/dpsi are the real-axis cutoff
    // and its derivative (holomorphic kind only).
    cplx dbar(double x, double y, double delta_used, const Jet* fx, double psi = 1.0, double dpsi = 0.0) const {
        const double bx = bracket(x);
        const double w = delta_used * bx;
        const double s = y / w;
        if (std::abs(s) >= 1.0) return 0.0;
        double ch, dch;
        chi_profile_d1(s, ch, dch);
        const double dsdx = -y * x / (delta_used * bx * bx * bx);
        const double dsdy = 1.0 / w;
        const cplx dchi = 0.5 * dch * cplx(dsdx, dsdy);
        if (kind == Kind::holomorphic) {
            if (dch == 0.0 && dpsi == 0.0) return 0.0;
            const cplx g = f.holomorphic(cplx(x, y));
            return g * (dchi * psi + ch * 0.5 * dpsi);
        }
        const cplx iy(0.0, y);
        cplx p = 0.0, pw = 1.0;
        for (int r = 0; r <= N; ++r) {
            p += (*fx)[r] * pw;
            if (r < N) pw *= iy;
        }
        // pw == (iy)^N here
        const cplx t1 = 0.5 * (N + 1) * (*fx)[N + 1] * pw * ch;
        return t1 + p * dchi;
    }
};

enum class ResolventMode { automatic, schur, eigenbasis };

struct QuadratureSpec {
    int re_points = 64;
    int im_points = 64;
    double eps_band = -1.0;  // < 0: 1e-3 <spectral radius>; 0: no band, y nodes uniform across the axis
    ResolventMode mode = ResolventMode::automatic;
    double cond_limit = 1e6;  // eigenbasis only below this eigenvector condition number

    void validate() const {
        if (re_points < 32 || im_points < 32) throw InvalidArgument("quadrature needs at least 32 points per axis");
        if (im_points % 2 != 0) throw InvalidArgument("im_points must be even (split between half planes)");
    }
};

struct DaviesResult {
    CMatrix value;
    double delta_used = 0.0;
    double eps_band = 0.0;
    double x_lo = 0.0, x_hi = 0.0;
    long nodes = 0;
    bool eigenbasis = false;
};

namespace detail {

// acc += w (z - T)^{-1} for upper triangular T; returns ||(z - T)^{-1}||_F
inline double add_triangular_resolvent(const CMatrix& t, cplx z, cplx w, CMatrix& acc, CMatrix& u) {
    const Eigen::Index n = t.rows();
    double fro = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        u(j, j) = 1.0 / (z - t(j, j));
        for (Eigen::Index i = j - 1; i >= 0; --i) {
            cplx s = 0.0;
            for (Eigen::Index k = i + 1; k <= j; ++k) s += t(i, k) * u(k, j);
            u(i, j) = s / (z - t(i, i));
        }
        for (Eigen::Index i = 0; i <= j; ++i) {
            acc(i, j) += w * u(i, j);
            fro += std::norm(u(i, j));
        }
    }
    return std::sqrt(fro);
}

}  // namespace detail

// f(A) = -(1/pi) Int dbar f~(z) (z - A)^{-1} dx dy
inline DaviesResult davies_apply(const CMatrix& a, const AlmostAnalyticExtension& ext, const QuadratureSpec& q = {},
                                 const Tolerances& tol = {}) {
    if (a.rows() != a.cols()) throw DimensionMismatch("davies_apply needs a square matrix");
    q.validate();
    using Kind = AlmostAnalyticExtension::Kind;
    if (ext.kind == Kind::holomorphic && !ext.f.holomorphic)
        throw InvalidArgument("function " + ext.f.name + " has no holomorphic extension");
    if (ext.N < 1 || ext.delta <= 0.0) throw InvalidArgument("extension needs N >= 1 and delta > 0");
    const Eigen::Index n = a.rows();

    Eigen::ComplexSchur<CMatrix> schur(a);
    const CMatrix& t = schur.matrixT();
    std::vector<cplx> lam(n);
    double radius = 0.0, re_lo = 0.0, re_hi = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        lam[i] = t(i, i);
        radius = std::max(radius, std::abs(lam[i]));
    }
    const double im_thr = tol.im_threshold_rel * std::max(radius, 1e-300);
    bool first = true;
    double delta = ext.delta;
    for (const cplx& z : lam) {
        if (std::abs(z.imag()) <= im_thr) {
            re_lo = first ? z.real() : std::min(re_lo, z.real());
            re_hi = first ? z.real() : std::max(re_hi, z.real());
            first = false;
        } else {
            // keep non-real eigenvalues outside supp chi_0 so they contribute nothing
            const double ratio = std::abs(z.imag()) / bracket(z.real());
            if (ratio <= delta) delta = 0.5 * ratio;
        }
    }

    DaviesResult res;
    res.delta_used = delta;
    res.eps_band = q.eps_band >= 0.0 ? q.eps_band : 1e-3 * bracket(radius);

    // real-axis range and cutoff
    double x_lo, x_hi;
    double plat_lo = 0.0, plat_hi = 0.0, ramp = 1.0;
    if (ext.kind == Kind::holomorphic) {
        plat_lo = (first ? -1.0 : re_lo) - 0.5;
        plat_hi = (first ? 1.0 : re_hi) + 0.5;
        x_lo = plat_lo - ramp;
        x_hi = plat_hi + ramp;
    } else if (ext.f.support) {
        x_lo = ext.f.support->first;
        x_hi = ext.f.support->second;
    } else {
        x_lo = (first ? -1.0 : re_lo) - 3.0;
        x_hi = (first ? 1.0 : re_hi) + 3.0;
    }
    res.x_lo = x_lo;
    res.x_hi = x_hi;
    auto cutoff = [&](double x, double& psi, double& dpsi) {
        // Psi = 1 on the plateau, smooth ramps of width `ramp` on both sides
        Jet xl = Jet::variable(1, x);
        Jet up = detail::smooth_step((xl - (plat_lo - ramp)) / ramp);
        Jet dn = detail::smooth_step(((plat_hi + ramp) - xl) / ramp);
        Jet p = up * dn;
        psi = p[0];
        dpsi = p[1];
    };

    // resolvent route
    bool use_eig = q.mode == ResolventMode::eigenbasis;
    CMatrix vecs, vinv;
    std::vector<double> val_re, val_im;
    if (q.mode == ResolventMode::automatic || q.mode == ResolventMode::eigenbasis) {
        Eigen::ComplexEigenSolver<CMatrix> es(a);
        vecs = es.eigenvectors();
        Eigen::BDCSVD<CMatrix> svd(vecs);
        const auto& sv = svd.singularValues();
        const double cond = sv(0) / sv(sv.size() - 1);
        if (q.mode == ResolventMode::eigenbasis && !(cond < 1e12))
            throw ConstructionFailed("eigenvector basis is numerically singular");
        use_eig = q.mode == ResolventMode::eigenbasis || cond < q.cond_limit;
        if (use_eig) {
            vinv = vecs.inverse();
            for (Eigen::Index i = 0; i < n; ++i) {
                val_re.push_back(es.eigenvalues()(i).real());
                val_im.push_back(es.eigenvalues()(i).imag());
            }
        }
    }
    res.eigenbasis = use_eig;

    std::vector<double> acc_re(use_eig ? n : 0, 0.0), acc_im(use_eig ? n : 0, 0.0);
    CMatrix acc, work;
    if (!use_eig) {
        acc = CMatrix::Zero(n, n);
        work = CMatrix::Zero(n, n);
    }
    const double blow = 1.0 / tol.eps_resolvent;
    auto add_node = [&](cplx z, cplx w) {
        if (w == 0.0) return;
        ++res.nodes;
        if (use_eig) {
            // w / (z - lambda) on split real arrays so the loop vectorizes
            double closest = std::numeric_limits<double>::infinity();
            const double zr = z.real(), zi = z.imag(), wr = w.real(), wi = w.imag();
            for (Eigen::Index i = 0; i < n; ++i) {
                const double dr = zr - val_re[i], di = zi - val_im[i];
                const double m2 = dr * dr + di * di;
                closest = std::min(closest, m2);
                const double inv = 1.0 / m2;
                acc_re[i] += (wr * dr + wi * di) * inv;
                acc_im[i] += (wi * dr - wr * di) * inv;
            }
            if (1.0 / std::sqrt(closest) > blow) throw ResolventBlowup("quadrature node collides with the spectrum");
        } else {
            double nrm = detail::add_triangular_resolvent(t, z, w, acc, work);
            if (nrm > blow) throw ResolventBlowup("quadrature node collides with the spectrum");
        }
    };

    const int nx = q.re_points, ny = q.im_points / 2;
    const double dx = (x_hi - x_lo) / nx;
    const double eps = ext.kind == Kind::taylor ? res.eps_band : 0.0;
    for (int ix = 0; ix < nx; ++ix) {
        const double x = x_lo + (ix + 0.5) * dx;
        Jet fx(0, 0.0);
        double psi = 1.0, dpsi = 0.0;
        if (ext.kind == Kind::taylor) {
            fx = ext.f.taylor(x, ext.N + 1);
            bool any = false;
            for (int r = 0; r <= ext.N + 1; ++r) any = any || fx[r] != 0.0;
            if (!any) continue;
        } else {
            cutoff(x, psi, dpsi);
            if (psi == 0.0 && dpsi == 0.0) continue;
        }
        const double ymax = delta * bracket(x);
        if (ymax <= eps) continue;
        const double dy = (ymax - eps) / ny;
        for (int side = -1; side <= 1; side += 2) {
            for (int iy = 0; iy < ny; ++iy) {
                const double y = side * (eps + (iy + 0.5) * dy);
                const cplx d = ext.dbar(x, y, delta, &fx, psi, dpsi);
                add_node(cplx(x, y), -d * (dx * dy) / pi);
            }
            if (eps > 0.0) {
                // band |Im z| < eps: the integrand vanishes like |y|^N there
                const double y = side * eps;
                const cplx d = ext.dbar(x, y, delta, &fx, psi, dpsi);
                add_node(cplx(x, y), -d * (dx * eps / (ext.N + 1)) / pi);
            }
        }
    }

    if (use_eig) {
        CVector dv(n);
        for (Eigen::Index i = 0; i < n; ++i) dv(i) = cplx(acc_re[i], acc_im[i]);
        res.value = vecs * dv.asDiagonal() * vinv;
    } else {
        res.value = schur.matrixU() * acc.triangularView<Eigen::Upper>() * schur.matrixU().adjoint();
    }
    return res;
}

// Oracle: sum over real clusters of X f(M) Zh, where f(M) uses the Taylor series at the center.
inline CMatrix spectral_function(const SpectralDecomposition& d, const SmoothFunction& f) {
    CMatrix out = CMatrix::Zero(d.dim(), d.dim());
    for (const auto& b : d.blocks()) {
        if (!b.real) continue;
        const int k = b.size();
        Jet tj = f.taylor(b.center.real(), k);
        CMatrix nm = b.M;
        nm.diagonal().array() -= b.center;
        CMatrix fm = CMatrix::Zero(k, k), pw = CMatrix::Identity(k, k);
        for (int r = 0; r <= k; ++r) {
            fm += tj[r] * pw;
            pw = pw * nm;
        }
        out += b.X * fm * b.Zh;
    }
    return out;
}

// ---------------------------------------------------------------- interval projections

inline void check_admissible(const SpectralDecomposition& d, const IntervalUnion& j) {
    const double g = d.gap_min();
    for (std::size_t i = 0; i < d.eigenvalues().size(); ++i) {
        if (!d.is_real()[i]) continue;
        const double x = d.eigenvalues()[i].real();
        if (j.distance_to_boundary(x) <= g)
            throw NotAdmissible("eigenvalue " + std::to_string(x) + " lies on the boundary of J = " + j.str());
    }
}

inline bool block_in(const SpectralBlock& b, const IntervalUnion& j) { return b.real && j.contains(b.center.real()); }

inline CMatrix spectral_projection(const SpectralDecomposition& d, const IntervalUnion& j) {
    check_admissible(d, j);
    return d.sum_projections([&](const SpectralBlock& b) { return block_in(b, j); });
}
inline CMatrix spectral_projection(const CMatrix& a, const KreinStructure& k, const IntervalUnion& j,
                                   const Tolerances& tol = {}) {
    check_dims(a, k);
    return spectral_projection(SpectralDecomposition::compute(a, tol), j);
}

struct ProjectionAlgebraReport {
    double adjoint_dev = 0.0;       // ||1_J^dagger - 1_J|| over J and J'
    double product_dev = 0.0;       // ||1_J 1_J' - 1_{J cap J'}||
    double annihilation_dev = -1.0;  // ||f(A) 1_J|| for supp f disjoint from J-bar (-1: not tested)
    double absorption_dev = -1.0;    // ||f(A) 1_J - f(A)|| for supp f inside J-bar
    double max_dev() const {
        return std::max({adjoint_dev, product_dev, annihilation_dev, absorption_dev});
    }
};

struct FunctionProbe {
    AlmostAnalyticExtension ext;
    QuadratureSpec quad;
};

// Deviations are relative to max(1, norm of the reference operator).
inline ProjectionAlgebraReport projection_algebra_check(const CMatrix& a, const KreinStructure& k,
                                                        const SpectralDecomposition& d, const IntervalUnion& j,
                                                        const IntervalUnion& j2,
                                                        const std::optional<FunctionProbe>& absorb = std::nullopt,
                                                        const std::optional<FunctionProbe>& annihilate = std::nullopt,
                                                        const Tolerances& tol = {}) {
    ProjectionAlgebraReport r;
    auto rel = [](const CMatrix& diff, const CMatrix& ref) { return op_norm(diff) / std::max(1.0, op_norm(ref)); };
    const CMatrix p1 = spectral_projection(d, j), p2 = spectral_projection(d, j2);
    const CMatrix p12 = spectral_projection(d, j.intersect(j2));
    r.adjoint_dev = std::max(rel(krein_adjoint(p1, k) - p1, p1), rel(krein_adjoint(p2, k) - p2, p2));
    r.product_dev = std::max(rel(p1 * p2 - p12, p12), rel(p2 * p1 - p12, p12));
    auto supp = [](const FunctionProbe& fp) {
        if (!fp.ext.f.support) throw InvalidArgument("probe function needs a declared support");
        return IntervalUnion({*fp.ext.f.support});
    };
    if (absorb) {
        const IntervalUnion s = supp(*absorb);
        if (!(s.intersect(j) == s)) throw InvalidArgument("absorption probe support is not inside J");
        CMatrix fa = davies_apply(a, absorb->ext, absorb->quad, tol).value;
        r.absorption_dev = rel(fa * p1 - fa, fa);
    }
    if (annihilate) {
        const IntervalUnion s = supp(*annihilate);
        if (!s.intersect(j).is_empty()) throw InvalidArgument("annihilation probe support meets J");
        CMatrix fa = davies_apply(a, annihilate->ext, annihilate->quad, tol).value;
        r.annihilation_dev = rel(fa * p1, fa);
    }
    return r;
}

}  // namespace kreinlat
