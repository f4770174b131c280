#pragma once

// Time evolution and two-point kernels from the spectral blocks of the generator.
// Frames are S(t) = prefactor * (sum over modes of exp(i t M) P) * W, with W = G (KG) or
// gamma0 (Dirac) on the right, so that S(t) * cauchy_weight = T_t.

#include "funcalc.hpp"
#include "models.hpp"

#include <memory>

namespace kreinlat {

struct Dynamics {
    enum class Kind { kg, dirac } kind = Kind::kg;
    CMatrix generator;      // b or h
    CMatrix weight;         // G or gamma0
    cplx prefactor;         // -i (KG) or -1 (Dirac)
    CMatrix cauchy_weight;  // sigma0 = iG or gamma0
    CMatrix form;           // positivity form: G (KG) or identity (Dirac)
    KreinStructure K;       // Krein structure of the generator
    std::shared_ptr<const SpectralDecomposition> modes;
    Tolerances tol;

    Eigen::Index dim() const { return generator.rows(); }
    // (prefactor * weight)^{-1}: S(t) times this is the plain evolution sum
    CMatrix kernel_unweight() const { return (prefactor * weight).inverse(); }
};

inline Dynamics make_dynamics(const KGModel& m, const Tolerances& tol = {}) {
    Dynamics d;
    d.kind = Dynamics::Kind::kg;
    d.generator = m.b.m;
    d.weight = m.K.G;
    d.prefactor = -I_unit;
    d.cauchy_weight = I_unit * m.K.G;
    d.form = m.K.G;
    d.K = m.K;
    d.modes = std::make_shared<const SpectralDecomposition>(SpectralDecomposition::compute(m.b.m, tol));
    d.tol = tol;
    return d;
}

inline Dynamics make_dynamics(const DiracModel& m, const Tolerances& tol = {}) {
    Dynamics d;
    d.kind = Dynamics::Kind::dirac;
    d.generator = m.h.m;
    d.weight = m.gamma0.m;
    d.prefactor = -1.0;
    d.cauchy_weight = m.gamma0.m;
    d.form = CMatrix::Identity(m.h.m.rows(), m.h.m.rows());
    d.K = KreinStructure::hilbert(m.h.m.rows());
    d.modes = std::make_shared<const SpectralDecomposition>(SpectralDecomposition::compute(m.h.m, tol));
    d.tol = tol;
    return d;
}

// Share an existing decomposition instead of recomputing it.
inline Dynamics make_dynamics(const KGModel& m, std::shared_ptr<const SpectralDecomposition> dec,
                              const Tolerances& tol = {}) {
    Dynamics d;
    d.kind = Dynamics::Kind::kg;
    d.generator = m.b.m;
    d.weight = m.K.G;
    d.prefactor = -I_unit;
    d.cauchy_weight = I_unit * m.K.G;
    d.form = m.K.G;
    d.K = m.K;
    d.modes = std::move(dec);
    d.tol = tol;
    return d;
}

struct ModeDecomposition {
    struct Mode {
        cplx lambda;
        CMatrix P;
    };
    std::vector<Mode> real_modes, complex_modes;
    double completeness_residual = 0.0;
};

inline ModeDecomposition mode_decomposition(const SpectralDecomposition& d) {
    ModeDecomposition md;
    CMatrix sum = CMatrix::Zero(d.dim(), d.dim());
    for (const auto& b : d.blocks()) {
        CMatrix p = b.projection();
        sum += p;
        (b.real ? md.real_modes : md.complex_modes).push_back({b.center, std::move(p)});
    }
    md.completeness_residual = (sum - CMatrix::Identity(d.dim(), d.dim())).norm();
    return md;
}

inline CMatrix evolve(const Dynamics& d, double t) { return d.modes->evolve(t); }

// ---------------------------------------------------------------- kernel series

enum class KernelKind { S, S_plus, S_minus, S_zero };

inline const char* to_string(KernelKind k) {
    switch (k) {
    case KernelKind::S: return "S";
    case KernelKind::S_plus: return "S_plus";
    case KernelKind::S_minus: return "S_minus";
    case KernelKind::S_zero: return "S_zero";
    }
    return "?";
}

struct KernelSeries {
    std::vector<double> times;
    std::vector<CMatrix> frames;
    KernelKind kind = KernelKind::S;
    std::string model_ref;

    double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
    Eigen::Index dim() const { return frames.empty() ? 0 : frames.front().rows(); }
};

// t_k = -T + k dt, dt = 2T/N, k = 0..N-1 (contains t = 0 when N is even)
inline std::vector<double> symmetric_time_grid(double t_max, int n_steps) {
    if (!(t_max > 0.0) || n_steps < 2) throw InvalidArgument("time grid needs t_max > 0 and n_steps >= 2");
    std::vector<double> t(n_steps);
    const double dt = 2.0 * t_max / n_steps;
    for (int k = 0; k < n_steps; ++k) t[k] = -t_max + k * dt;
    return t;
}

inline void check_uniform(const std::vector<double>& t) {
    if (t.size() < 2) return;
    const double dt = t[1] - t[0];
    for (std::size_t k = 1; k < t.size(); ++k)
        if (std::abs((t[k] - t[k - 1]) - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
            throw InvalidArgument("kernel time grid must be uniform");
}

// One kernel kind from a block selector.
template <class Pred>
inline KernelSeries kernel_series(const Dynamics& d, const std::vector<double>& times, KernelKind kind, Pred&& keep) {
    check_uniform(times);
    KernelSeries s;
    s.kind = kind;
    s.times = times;
    s.frames.reserve(times.size());
    // right factor Zh * W is shared by all frames
    CMatrix l, r;
    d.modes->evolution_factors(0.0, keep, l, r);
    const CMatrix rw = d.prefactor * (r * d.weight);
    for (double t : times) {
        d.modes->evolution_factors(t, keep, l, r);
        s.frames.push_back(l * rw);
    }
    return s;
}

struct KernelSet {
    KernelSeries S, S_plus, S_minus, S_zero;
};

inline KernelSet two_point_kernels(const Dynamics& d, const IntervalUnion& J, const std::vector<double>& times) {
    check_admissible(*d.modes, J);
    KernelSet k;
    k.S = kernel_series(d, times, KernelKind::S, [](const SpectralBlock&) { return true; });
    k.S_plus = kernel_series(d, times, KernelKind::S_plus, [&](const SpectralBlock& b) { return block_in(b, J); });
    k.S_minus =
        kernel_series(d, times, KernelKind::S_minus, [&](const SpectralBlock& b) { return b.real && !block_in(b, J); });
    k.S_zero = kernel_series(d, times, KernelKind::S_zero, [](const SpectralBlock& b) { return !b.real; });
    return k;
}

// max over frames of ||S - S+ - S- - S0||_F / ||S||_F
inline double decomposition_residual(const KernelSet& k) {
    double worst = 0.0;
    for (std::size_t i = 0; i < k.S.frames.size(); ++i) {
        const CMatrix diff = k.S.frames[i] - k.S_plus.frames[i] - k.S_minus.frames[i] - k.S_zero.frames[i];
        worst = std::max(worst, diff.norm() / std::max(k.S.frames[i].norm(), 1e-300));
    }
    return worst;
}

// Left residual ||i (K(t+h) - K(t-h)) / 2h + gen K(t)||_F / ||K(t)||_F.
template <class Pred>
inline double bisolution_residual(const Dynamics& d, Pred&& keep, double t, double h) {
    auto frame = [&](double s) {
        CMatrix l, r;
        d.modes->evolution_factors(s, keep, l, r);
        return CMatrix(d.prefactor * (l * (r * d.weight)));
    };
    const CMatrix kp = frame(t + h), km = frame(t - h), k0 = frame(t);
    const CMatrix res = I_unit * (kp - km) / (2.0 * h) + d.generator * k0;
    return res.norm() / std::max(k0.norm(), 1e-300);
}

// Right (primed variable) residual: -i dK/dt - K W^{-1} gen W = 0.
template <class Pred>
inline double bisolution_residual_right(const Dynamics& d, Pred&& keep, double t, double h) {
    auto frame = [&](double s) {
        CMatrix l, r;
        d.modes->evolution_factors(s, keep, l, r);
        return CMatrix(d.prefactor * (l * (r * d.weight)));
    };
    const CMatrix kp = frame(t + h), km = frame(t - h), k0 = frame(t);
    const CMatrix wg = d.weight.inverse() * d.generator * d.weight;
    const CMatrix res = -I_unit * (kp - km) / (2.0 * h) - k0 * wg;
    return res.norm() / std::max(k0.norm(), 1e-300);
}

// ---------------------------------------------------------------- Cauchy problem

struct Trajectory {
    std::vector<double> times;
    std::vector<CVector> rk4, kernel;
    double divergence = 0.0;  // max_k ||rk4 - kernel|| / max(1, ||kernel||)
};

inline Trajectory cauchy_solve(const Dynamics& d, const CVector& initial, const std::vector<double>& times,
                               double dt_rk = 1e-3) {
    if (initial.size() != d.dim()) throw DimensionMismatch("initial data has the wrong dimension");
    const double rho = d.modes->spectral_radius();
    if (dt_rk * rho > 2.5)
        throw StepTooLarge("RK4 step " + std::to_string(dt_rk) + " violates dt * rho(b) <= 2.5");
    Trajectory tr;
    tr.times = times;
    const CMatrix ig = I_unit * d.generator;
    auto rhs = [&](const CVector& y) { return CVector(ig * y); };
    CVector y = initial;
    double t = 0.0;
    const CMatrix unweighted_data = d.cauchy_weight;
    for (double target : times) {
        if (target < t - 1e-12) throw InvalidArgument("cauchy_solve needs non-decreasing times from 0");
        const long steps = std::lround((target - t) / dt_rk);
        const double h = steps > 0 ? (target - t) / steps : 0.0;
        for (long s = 0; s < steps; ++s) {
            CVector k1 = rhs(y), k2 = rhs(y + 0.5 * h * k1), k3 = rhs(y + 0.5 * h * k2), k4 = rhs(y + h * k3);
            y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        t = target;
        tr.rk4.push_back(y);
        // kernel route: phi(t) = S(t) sigma0 theta
        CMatrix l, r;
        d.modes->evolution_factors(target, [](const SpectralBlock&) { return true; }, l, r);
        const CMatrix frame = d.prefactor * (l * (r * d.weight));
        tr.kernel.push_back(frame * (unweighted_data * initial));
        tr.divergence = std::max(tr.divergence,
                                 (tr.rk4.back() - tr.kernel.back()).norm() / std::max(1.0, tr.kernel.back().norm()));
    }
    return tr;
}

// ---------------------------------------------------------------- group versus calculus

// F^{-1} f (lambda) = (2 pi)^{-1/2} Int f(t) exp(i lambda t) dt by Gauss-Legendre on supp f.
inline SmoothFunction inverse_fourier(const SmoothFunction& f, int nodes = 160) {
    if (!f.support) throw InvalidArgument("inverse_fourier needs a compactly supported f");
    const double a = f.support->first, b = f.support->second;
    // Golub-Welsch nodes for Legendre
    RMatrix jm = RMatrix::Zero(nodes, nodes);
    for (int k = 1; k < nodes; ++k) {
        const double beta = k / std::sqrt(4.0 * k * k - 1.0);
        jm(k, k - 1) = jm(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<RMatrix> es(jm);
    auto t = std::make_shared<std::vector<double>>(nodes);
    auto w = std::make_shared<std::vector<double>>(nodes);
    for (int k = 0; k < nodes; ++k) {
        const double x = es.eigenvalues()(k);
        const double v = es.eigenvectors()(0, k);
        (*t)[k] = 0.5 * (a + b) + 0.5 * (b - a) * x;
        (*w)[k] = (b - a) * v * v * f((*t)[k]) / std::sqrt(2.0 * pi);  // 2 v^2 * (b-a)/2
    }
    SmoothFunction g;
    g.name = "invF[" + f.name + "]";
    g.holomorphic = [t, w](cplx z) {
        cplx s = 0.0;
        for (std::size_t k = 0; k < t->size(); ++k) s += (*w)[k] * std::exp(I_unit * z * (*t)[k]);
        return s;
    };
    // real part of the Taylor coefficients c_r = Int f (it)^r / r! e^{ixt}
    g.jet = [t, w](const Jet& x) {
        Jet out(x.order(), 0.0);
        std::vector<cplx> c(x.order() + 1, 0.0);
        for (std::size_t k = 0; k < t->size(); ++k) {
            cplx term = (*w)[k] * std::exp(I_unit * x[0] * (*t)[k]);
            for (int r = 0; r <= x.order(); ++r) {
                c[r] += term;
                term *= I_unit * (*t)[k] / static_cast<double>(r + 1);
            }
        }
        // compose with the input jet: only the identity jet is supported
        for (int r = 0; r <= x.order(); ++r) out[r] = c[r].real();
        return out;
    };
    return g;
}

struct GroupCalculusOptions {
    double dt = 0.01;         // trapezoid step for the time integral
    double delta = 0.1;       // extension width (shrunk automatically around complex modes)
    double dx_per_delta = 0.1;  // x spacing as a fraction of delta_used
    int im_points = 64;
};

struct GroupCalculusResult {
    double residual = 0.0;  // operator norm
    double lhs_norm = 0.0;
    double delta_used = 0.0;
    int re_points = 0;
};

inline GroupCalculusResult group_vs_calculus_check(const Dynamics& d, const SmoothFunction& f,
                                                   const GroupCalculusOptions& opt = {}) {
    if (!f.support) throw InvalidArgument("group_vs_calculus_check needs a compactly supported window");
    const double a = f.support->first, b = f.support->second;
    const int steps = static_cast<int>(std::lround((b - a) / opt.dt));
    const double h = (b - a) / steps;
    const auto real_only = [](const SpectralBlock& blk) { return blk.real; };
    CMatrix lhs = CMatrix::Zero(d.dim(), d.dim());
    bool any = false;
    for (int k = 0; k <= steps; ++k) {
        const double t = a + k * h;
        const double wt = (k == 0 || k == steps) ? 0.5 * h : h;
        const double ft = f(t);
        if (ft == 0.0) continue;
        any = true;
        lhs += (wt * ft) * d.modes->evolve(t, real_only);
    }
    lhs /= std::sqrt(2.0 * pi);
    GroupCalculusResult out;
    out.lhs_norm = op_norm(lhs);
    if (!any) {
        out.residual = 0.0;
        return out;
    }
    AlmostAnalyticExtension ext;
    ext.f = inverse_fourier(f);
    ext.kind = AlmostAnalyticExtension::Kind::holomorphic;
    ext.delta = opt.delta;
    // pick re_points from the delta that will actually be used
    double delta_used = opt.delta, lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto& blk : d.modes->blocks()) {
        if (blk.real) {
            lo = first ? blk.center.real() : std::min(lo, blk.center.real());
            hi = first ? blk.center.real() : std::max(hi, blk.center.real());
            first = false;
        } else {
            const double ratio = std::abs(blk.center.imag()) / bracket(blk.center.real());
            if (ratio <= delta_used) delta_used = 0.5 * ratio;
        }
    }
    const double range = (hi - lo) + 3.0;
    QuadratureSpec q;
    q.im_points = opt.im_points;
    q.re_points = std::max(64, static_cast<int>(std::ceil(range / (opt.dx_per_delta * delta_used))));
    DaviesResult r = davies_apply(d.generator, ext, q, d.tol);
    out.residual = op_norm(lhs - r.value);
    out.delta_used = r.delta_used;
    out.re_points = q.re_points;
    return out;
}

// Gram-type matrix F * sum_{k,l} conj(f_k) f_l X((l - k) tau), X(s) = S_+(s) (prefactor W)^{-1}.
// Positive semidefinite whenever the selected modes are of positive type.
template <class Pred>
inline CMatrix lag_positivity_matrix(const Dynamics& d, Pred&& keep, const std::vector<cplx>& f, double tau) {
    const int L = static_cast<int>(f.size());
    const CMatrix unweight = d.kernel_unweight();
    CMatrix sum = CMatrix::Zero(d.dim(), d.dim());
    for (int lag = -(L - 1); lag <= L - 1; ++lag) {
        cplx c = 0.0;
        for (int k = 0; k < L; ++k) {
            const int l = k + lag;
            if (l >= 0 && l < L) c += std::conj(f[k]) * f[l];
        }
        CMatrix lm, rm;
        d.modes->evolution_factors(lag * tau, keep, lm, rm);
        const CMatrix frame = d.prefactor * (lm * (rm * d.weight));
        sum += c * (frame * unweight);
    }
    return d.form * sum;
}

}  // namespace kreinlat
