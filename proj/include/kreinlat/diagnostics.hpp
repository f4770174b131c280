#pragma once

// Frequency-side checks on kernel series: windowed time FFT support test, operator- and
// test-function-level positivity, and a heuristic decay scan.

#include "propagator.hpp"

#include <fftw3.h>

#include <random>

namespace kreinlat {

enum class Window { hann, rectangular };

inline const char* to_string(Window w) { return w == Window::hann ? "hann" : "rectangular"; }

inline std::vector<double> window_samples(Window w, int n) {
    std::vector<double> v(n, 1.0);
    if (w == Window::hann)
        for (int k = 0; k < n; ++k) v[k] = 0.5 * (1.0 - std::cos(2.0 * pi * k / n));  // periodic Hann
    return v;
}

// Main-lobe half width in bins.
inline double window_lobe_bins(Window w) { return w == Window::hann ? 2.0 : 1.0; }

// Batched FFT of every matrix entry along t. Output row j holds frequency bin j
// (FFTW order), columns are entries. e^{i lambda t} lands at +lambda.
struct SeriesSpectrum {
    std::vector<double> freq;  // FFTW order
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> data;  // N x dim^2
};

inline SeriesSpectrum transform_series(const KernelSeries& s, Window w) {
    const int n = static_cast<int>(s.frames.size());
    if (n < 2) throw InvalidArgument("kernel series needs at least two frames");
    const Eigen::Index m = s.dim() * s.dim();
    const double dt = s.dt();
    const auto win = window_samples(w, n);
    SeriesSpectrum out;
    out.data.resize(n, m);
    for (int k = 0; k < n; ++k) {
        const CMatrix& f = s.frames[k];
        for (Eigen::Index e = 0; e < m; ++e) out.data(k, e) = win[k] * f.data()[e];
    }
    auto* buf = reinterpret_cast<fftw_complex*>(out.data.data());
    int len[1] = {n};
    fftw_plan plan = fftw_plan_many_dft(1, len, static_cast<int>(m), buf, nullptr, static_cast<int>(m), 1, buf, nullptr,
                                        static_cast<int>(m), 1, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    out.freq.resize(n);
    const double dw = 2.0 * pi / (n * dt);
    for (int j = 0; j < n; ++j) out.freq[j] = (j < (n + 1) / 2 ? j : j - n) * dw;
    return out;
}

struct SpectralSupportReport {
    std::vector<double> freq_grid;      // ascending
    std::vector<double> power_profile;  // Frobenius mass per frequency
    double alpha_hat = 0.0;  // lowest frequency with significant power
    double beta_hat = 0.0;   // minus the highest such frequency
    double leakage = 0.0;
    double resolution = 0.0;  // 2 pi / (N dt)
    double w_res = 0.0;       // window resolution bandwidth
    Window window = Window::hann;
    bool pass = false;
};

inline SpectralSupportReport fft_support_check(const KernelSeries& s, const IntervalUnion& expected,
                                               Window w = Window::hann, double leak_tol = 1e-4) {
    const int n = static_cast<int>(s.frames.size());
    SpectralSupportReport r;
    r.window = w;
    r.resolution = 2.0 * pi / (n * s.dt());
    r.w_res = window_lobe_bins(w) * r.resolution;
    const double edge = expected.lower_edge();
    if (std::isfinite(edge) && edge > 0.0 && edge < 4.0 * r.resolution)
        throw WindowTooShort("expected gap " + std::to_string(edge) + " is below 4 x frequency resolution " +
                             std::to_string(r.resolution));
    const SeriesSpectrum sp = transform_series(s, w);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return sp.freq[a] < sp.freq[b]; });
    std::vector<std::pair<double, double>> widened;
    for (const auto& [lo, hi] : expected.intervals()) widened.emplace_back(lo - r.w_res, hi + r.w_res);
    const IntervalUnion allowed(widened);
    double total = 0.0, outside = 0.0, peak = 0.0;
    for (int j : order) {
        const double p = sp.data.row(j).squaredNorm();
        r.freq_grid.push_back(sp.freq[j]);
        r.power_profile.push_back(p);
        total += p;
        peak = std::max(peak, p);
        if (!allowed.contains(sp.freq[j])) outside += p;
    }
    r.leakage = total > 0.0 ? outside / total : 0.0;
    r.alpha_hat = r.beta_hat = 0.0;
    if (peak > 0.0) {
        bool found = false;
        for (std::size_t i = 0; i < r.freq_grid.size(); ++i) {
            if (r.power_profile[i] < 1e-8 * peak) continue;
            if (!found) r.alpha_hat = r.freq_grid[i];
            r.beta_hat = -r.freq_grid[i];
            found = true;
        }
    }
    r.pass = r.leakage <= leak_tol;
    return r;
}

// ||F(S) - sum F(parts)|| / ||F(S)||
inline double fft_linearity_residual(const KernelSet& k, Window w = Window::hann) {
    const auto s = transform_series(k.S, w);
    auto diff = s.data;
    diff -= transform_series(k.S_plus, w).data;
    diff -= transform_series(k.S_minus, w).data;
    diff -= transform_series(k.S_zero, w).data;
    return diff.norm() / std::max(s.data.norm(), 1e-300);
}

// ---------------------------------------------------------------- positivity

struct PositivityReport {
    double min_eig = 0.0;        // Hermitian part of form * 1_J
    double test_min_rel = 0.0;   // worst min eigenvalue of the sampled-f matrices, relative to their norm
    bool operator_positive = true;
    bool test_positive = true;
    bool agree = true;
    int draws = 0;
};

// f_0 = 1, f_l = 2^{-l} u_l with |u_l| <= 1: |sum f_l e^{i l theta}| >= 1/8 everywhere.
inline std::vector<cplx> dominant_test_sequence(std::mt19937_64& rng, int length = 4) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<cplx> f(length);
    f[0] = 1.0;
    for (int l = 1; l < length; ++l) {
        const double r = std::sqrt(U(rng)), th = 2.0 * pi * U(rng);
        f[l] = std::ldexp(1.0, -l) * std::polar(r, th);
    }
    return f;
}

inline PositivityReport positivity_check(const Dynamics& d, const IntervalUnion& J, std::mt19937_64& rng,
                                         int draws = 3, double tau = 0.3) {
    PositivityReport r;
    const CMatrix p = spectral_projection(*d.modes, J);
    const CMatrix gp = d.form * p;
    r.min_eig = hermitian_min_eig(gp);
    const double scale = std::max(1.0, op_norm(gp));
    r.operator_positive = r.min_eig >= -d.tol.pos_tol * scale;
    r.draws = draws;
    r.test_min_rel = std::numeric_limits<double>::infinity();
    const auto keep = [&](const SpectralBlock& b) { return block_in(b, J); };
    for (int i = 0; i < draws; ++i) {
        const auto f = dominant_test_sequence(rng);
        const CMatrix m = lag_positivity_matrix(d, keep, f, tau);
        const double nrm = op_norm(m);
        const double rel = nrm > 0.0 ? hermitian_min_eig(m) / nrm : 0.0;
        r.test_min_rel = std::min(r.test_min_rel, rel);
    }
    if (draws == 0) r.test_min_rel = 0.0;
    r.test_positive = r.test_min_rel >= -1e3 * d.tol.pos_tol;
    r.agree = r.operator_positive == r.test_positive;
    return r;
}

// Random admissible J: one to three intervals with endpoints strictly inside spectral gaps.
inline IntervalUnion random_admissible_interval(const SpectralDecomposition& d, std::mt19937_64& rng) {
    std::vector<double> xs;
    for (const auto& b : d.blocks())
        if (b.real) xs.push_back(b.center.real());
    std::sort(xs.begin(), xs.end());
    std::uniform_real_distribution<double> U(0.0, 1.0);
    // candidate endpoints: points inside the gaps (including the outer ones), away from eigenvalues
    auto point_in_gap = [&](int g) {
        double lo, hi;
        if (xs.empty()) return 2.0 * U(rng) - 1.0;
        if (g == 0) {
            lo = xs.front() - 1.0;
            hi = xs.front();
        } else if (g == static_cast<int>(xs.size())) {
            lo = xs.back();
            hi = xs.back() + 1.0;
        } else {
            lo = xs[g - 1];
            hi = xs[g];
        }
        return lo + (0.1 + 0.8 * U(rng)) * (hi - lo);
    };
    // only gaps wide enough that an endpoint keeps clear of gap_min (near-degenerate pairs are skipped)
    std::vector<int> wide;
    for (int g = 0; g <= static_cast<int>(xs.size()); ++g)
        if (g == 0 || g == static_cast<int>(xs.size()) || xs[g] - xs[g - 1] > 100.0 * d.gap_min()) wide.push_back(g);
    std::uniform_int_distribution<std::size_t> G(0, wide.size() - 1);
    std::uniform_int_distribution<int> K(1, 3);
    std::vector<std::pair<double, double>> iv;
    const int count = K(rng);
    for (int i = 0; i < count; ++i) {
        int g1 = wide[G(rng)], g2 = wide[G(rng)];
        if (g1 > g2) std::swap(g1, g2);
        double lo = point_in_gap(g1), hi = point_in_gap(g2);
        if (g1 == g2 && lo > hi) std::swap(lo, hi);
        if (U(rng) < 0.15) lo = -IntervalUnion::inf;
        if (U(rng) < 0.15) hi = IntervalUnion::inf;
        if (lo < hi) iv.emplace_back(lo, hi);
    }
    IntervalUnion j(iv);
    check_admissible(d, j);
    return j;
}

// ---------------------------------------------------------------- decay scan (heuristic)

struct DecayPoint {
    double t = 0.0;
    int row = 0, col = 0;
};

struct DecayDirection {
    DecayPoint point;
    int direction = 1;     // +1 or -1 frequency side
    double order = 0.0;    // estimated polynomial decay order over the band (99: below floor)
    double relative_power = 0.0;  // band maximum relative to the global maximum
    bool regular = false;
};

struct DecayScanReport {
    std::vector<DecayDirection> results;
    double band_lo = 0.0, band_hi = 0.0;
    double order_threshold = 4.0;
};

// For each point: Gaussian-localize the entry around t, FFT, and compare the tail envelope
// E(w) = max_{w' >= w} |F| at band_hi/8 and band_hi/2. The order is the implied power of w.
inline DecayScanReport decay_scan(const KernelSeries& s, const std::vector<DecayPoint>& points, double band_hi = -1.0,
                                  double order_threshold = 4.0, double floor_rel = 1e-9) {
    DecayScanReport rep;
    const int n = static_cast<int>(s.frames.size());
    const double dt = s.dt();
    const double nyquist = pi / dt;
    rep.band_hi = band_hi > 0.0 ? std::min(band_hi, 0.9 * nyquist) : 0.5 * nyquist;
    rep.band_lo = rep.band_hi / 8.0;
    rep.order_threshold = order_threshold;
    const double span = s.times.back() - s.times.front();
    std::vector<cplx> buf(n);
    fftw_plan plan = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(buf.data()),
                                      reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD, FFTW_ESTIMATE);
    const double dw = 2.0 * pi / (n * dt);
    for (const auto& pt : points) {
        const double width = span / 12.0;
        for (int k = 0; k < n; ++k) {
            const double u = (s.times[k] - pt.t) / width;
            buf[k] = std::exp(-0.5 * u * u) * s.frames[k](pt.row, pt.col);
        }
        fftw_execute(plan);
        std::vector<double> amp(n);
        double global = 0.0;
        for (int j = 0; j < n; ++j) {
            amp[j] = std::abs(buf[j]);
            global = std::max(global, amp[j]);
        }
        for (int dir : {1, -1}) {
            // tail envelope E(w) = max over |w'| >= w on this side
            auto envelope = [&](double w0) {
                double e = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double f = (j < (n + 1) / 2 ? j : j - n) * dw * dir;
                    if (f >= w0 && f <= rep.band_hi) e = std::max(e, amp[j]);
                }
                return e;
            };
            DecayDirection r;
            r.point = pt;
            r.direction = dir;
            const double e_lo = envelope(rep.band_lo), e_hi = envelope(0.5 * rep.band_hi);
            r.relative_power = global > 0.0 ? e_lo / global : 0.0;
            if (global == 0.0 || e_hi <= floor_rel * global) {
                r.order = 99.0;
            } else {
                r.order = std::log(std::max(e_lo, 1e-300) / e_hi) / std::log(4.0);
            }
            r.regular = r.order >= order_threshold;
            rep.results.push_back(r);
        }
    }
    fftw_destroy_plan(plan);
    return rep;
}

}  // namespace kreinlat
