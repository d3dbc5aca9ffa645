#pragma once
#include <cmath>

namespace corptax {

// Forward-mode scalar with a single derivative lane. Residual functions are
// templated on the scalar type, so seeding dot = 1 on one input slot and
// evaluating yields one Jacobian column exactly (no finite-difference error).
struct Dual {
    double val = 0.0;
    double dot = 0.0;

    Dual() = default;
    Dual(double v) : val(v) {}
    Dual(double v, double d) : val(v), dot(d) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.val + b.val, a.dot + b.dot}; }
inline Dual operator-(Dual a, Dual b) { return {a.val - b.val, a.dot - b.dot}; }
inline Dual operator-(Dual a) { return {-a.val, -a.dot}; }
inline Dual operator*(Dual a, Dual b) { return {a.val * b.val, a.dot * b.val + a.val * b.dot}; }
inline Dual operator/(Dual a, Dual b)
{
    const double inv = 1.0 / b.val;
    const double v = a.val * inv;
    return {v, (a.dot - v * b.dot) * inv};
}

inline Dual operator+(Dual a, double b) { return {a.val + b, a.dot}; }
inline Dual operator+(double a, Dual b) { return {a + b.val, b.dot}; }
inline Dual operator-(Dual a, double b) { return {a.val - b, a.dot}; }
inline Dual operator-(double a, Dual b) { return {a - b.val, -b.dot}; }
inline Dual operator*(Dual a, double b) { return {a.val * b, a.dot * b}; }
inline Dual operator*(double a, Dual b) { return {a * b.val, a * b.dot}; }
inline Dual operator/(Dual a, double b) { return {a.val / b, a.dot / b}; }
inline Dual operator/(double a, Dual b)
{
    const double inv = 1.0 / b.val;
    const double v = a * inv;
    return {v, -v * b.dot * inv};
}

inline Dual& operator+=(Dual& a, Dual b) { a = a + b; return a; }
inline Dual& operator-=(Dual& a, Dual b) { a = a - b; return a; }

// Exponent is always a parameter (capital shares, curvatures), never a state,
// so pow(Dual, double) is the only form the residuals need. e = 0 and e = 1
// are guarded: the generic derivative e*x^(e-1) produces inf*0 at x = 0.
inline Dual pow(Dual x, double e)
{
    if (e == 0.0) return {1.0, 0.0};
    if (e == 1.0) return x;
    const double v = std::pow(x.val, e);
    return {v, e * std::pow(x.val, e - 1.0) * x.dot};
}

inline Dual log(Dual x) { return {std::log(x.val), x.dot / x.val}; }
inline Dual exp(Dual x) { const double v = std::exp(x.val); return {v, v * x.dot}; }
inline Dual sqrt(Dual x) { const double v = std::sqrt(x.val); return {v, 0.5 * x.dot / v}; }

// value(x): the point part of either scalar type, for positivity checks
// inside templated code.
inline double value(double x) { return x; }
inline double value(Dual x) { return x.val; }

} // namespace corptax
