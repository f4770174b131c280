#pragma once

// Truncated Taylor arithmetic. A Jet holds c_r = f^{(r)}(x0) / r! for r <= order,
// so smooth built-in functions give exact derivatives without finite differences.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace kreinlat {

class Jet {
public:
    Jet(int order, double value) : c_(order + 1, 0.0) { c_[0] = value; }

    static Jet variable(int order, double x0) {
        Jet j(order, x0);
        if (order >= 1) j.c_[1] = 1.0;
        return j;
    }

    int order() const { return static_cast<int>(c_.size()) - 1; }
    double operator[](int r) const { return c_[r]; }
    double& operator[](int r) { return c_[r]; }
    const std::vector<double>& coeffs() const { return c_; }

    // r-th derivative at the expansion point
    double derivative(int r) const {
        double f = 1.0;
        for (int k = 2; k <= r; ++k) f *= k;
        return c_[r] * f;
    }

    Jet& operator+=(const Jet& o) {
        for (std::size_t r = 0; r < c_.size(); ++r) c_[r] += o.c_[r];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (std::size_t r = 0; r < c_.size(); ++r) c_[r] -= o.c_[r];
        return *this;
    }
    Jet& operator+=(double s) { c_[0] += s; return *this; }
    Jet& operator*=(double s) {
        for (double& v : c_) v *= s;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a += -s; }
    friend Jet operator-(double s, const Jet& a) { return (-a) + s; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }
    Jet operator-() const {
        Jet r = *this;
        return r *= -1.0;
    }

    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r(a.order(), 0.0);
        for (int k = 0; k <= a.order(); ++k) {
            double s = 0.0;
            for (int i = 0; i <= k; ++i) s += a.c_[i] * b.c_[k - i];
            r.c_[k] = s;
        }
        return r;
    }

    friend Jet operator/(const Jet& a, const Jet& b) {
        if (b.c_[0] == 0.0) throw std::domain_error("jet division by zero");
        Jet r(a.order(), 0.0);
        for (int k = 0; k <= a.order(); ++k) {
            double s = a.c_[k];
            for (int i = 1; i <= k; ++i) s -= b.c_[i] * r.c_[k - i];
            r.c_[k] = s / b.c_[0];
        }
        return r;
    }
    friend Jet operator/(double s, const Jet& b) { return Jet(b.order(), s) / b; }

    friend Jet exp(const Jet& a) {
        Jet r(a.order(), std::exp(a.c_[0]));
        // r' = a' r
        for (int k = 1; k <= a.order(); ++k) {
            double s = 0.0;
            for (int i = 1; i <= k; ++i) s += i * a.c_[i] * r.c_[k - i];
            r.c_[k] = s / k;
        }
        return r;
    }

    friend void sincos(const Jet& a, Jet& s, Jet& c) {
        s = Jet(a.order(), std::sin(a.c_[0]));
        c = Jet(a.order(), std::cos(a.c_[0]));
        for (int k = 1; k <= a.order(); ++k) {
            double ss = 0.0, cc = 0.0;
            for (int i = 1; i <= k; ++i) {
                ss += i * a.c_[i] * c.c_[k - i];
                cc -= i * a.c_[i] * s.c_[k - i];
            }
            s.c_[k] = ss / k;
            c.c_[k] = cc / k;
        }
    }
    friend Jet sin(const Jet& a) {
        Jet s(0, 0.0), c(0, 0.0);
        sincos(a, s, c);
        return s;
    }
    friend Jet cos(const Jet& a) {
        Jet s(0, 0.0), c(0, 0.0);
        sincos(a, s, c);
        return c;
    }

    friend Jet sqrt(const Jet& a) {
        if (a.c_[0] <= 0.0) throw std::domain_error("jet sqrt at non-positive point");
        Jet r(a.order(), std::sqrt(a.c_[0]));
        for (int k = 1; k <= a.order(); ++k) {
            double s = a.c_[k];
            for (int i = 1; i < k; ++i) s -= r.c_[i] * r.c_[k - i];
            r.c_[k] = s / (2.0 * r.c_[0]);
        }
        return r;
    }

private:
    std::vector<double> c_;
};

}  // namespace kreinlat
