#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "igo/error.hpp"
#include "igo/matrix.hpp"

namespace igo {

/// Every tolerance used by the numerical kernel lives here so golden-number
/// reproduction can be tightened in one place.
struct NumericsSettings {
    double mu_singularity_eps = 1e-12;   // |z| at or below this counts as the z = 0 pole
    double dd_separation_rel = 1e-6;     // node separation threshold, relative to max |z|
    int root_grid_intervals = 2048;      // default bracketing grid for extremum search
    double root_bisect_rel = 1e-10;      // bisection width target, relative to interval length
    double condition_cap = 1e14;         // solve_linear rejects worse-conditioned systems
    double fixed_point_agree_rel = 1e-8; // matrix form vs divided-difference form
};

// ---------------------------------------------------------------------------
// Linear solves (partial-pivot LU, dimension <= 4)
// ---------------------------------------------------------------------------

namespace detail {

template <int N>
struct LuFactors {
    SmallMatrix<N> lu;
    std::array<int, N> perm{};
    bool singular = false;
};

template <int N>
LuFactors<N> lu_factor(const SmallMatrix<N>& m) {
    LuFactors<N> f;
    f.lu = m;
    for (int i = 0; i < N; ++i) f.perm[i] = i;
    for (int k = 0; k < N; ++k) {
        int piv = k;
        double best = std::abs(f.lu(k, k));
        for (int i = k + 1; i < N; ++i) {
            if (std::abs(f.lu(i, k)) > best) {
                best = std::abs(f.lu(i, k));
                piv = i;
            }
        }
        if (best == 0.0) {
            f.singular = true;
            return f;
        }
        if (piv != k) {
            std::swap(f.perm[k], f.perm[piv]);
            for (int j = 0; j < N; ++j) std::swap(f.lu(k, j), f.lu(piv, j));
        }
        for (int i = k + 1; i < N; ++i) {
            f.lu(i, k) /= f.lu(k, k);
            const double lik = f.lu(i, k);
            for (int j = k + 1; j < N; ++j) f.lu(i, j) -= lik * f.lu(k, j);
        }
    }
    return f;
}

template <int N>
Vector<N> lu_solve(const LuFactors<N>& f, const Vector<N>& b) {
    Vector<N> x;
    for (int i = 0; i < N; ++i) x[i] = b[f.perm[i]];
    for (int i = 1; i < N; ++i)
        for (int j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
    for (int i = N - 1; i >= 0; --i) {
        for (int j = i + 1; j < N; ++j) x[i] -= f.lu(i, j) * x[j];
        x[i] /= f.lu(i, i);
    }
    return x;
}

// Solve M X = R column by column. Used internally by the Pade evaluation,
// where conditioning is guaranteed by the scaling step.
template <int N>
SmallMatrix<N> lu_solve_matrix(const LuFactors<N>& f, const SmallMatrix<N>& r) {
    SmallMatrix<N> x;
    for (int j = 0; j < N; ++j) {
        const Vector<N> c = lu_solve(f, r.col(j));
        for (int i = 0; i < N; ++i) x(i, j) = c[i];
    }
    return x;
}

}  // namespace detail

/// Solves M x = b with partial pivoting. Rejects singular or severely
/// ill-conditioned systems (1-norm condition estimate above the cap).
template <int N>
Vector<N> solve_linear(const SmallMatrix<N>& m, const Vector<N>& b,
                       const NumericsSettings& ns = {}) {
    if (!m.all_finite() || !b.all_finite()) raise(Errc::domain, "solve_linear: non-finite input");
    const auto f = detail::lu_factor(m);
    if (f.singular) raise(Errc::singularity, "solve_linear: singular system");
    const SmallMatrix<N> inv = detail::lu_solve_matrix(f, SmallMatrix<N>::identity());
    const double cond = m.norm_1() * inv.norm_1();
    if (!(cond < ns.condition_cap))
        raise(Errc::singularity,
              "solve_linear: condition estimate " + std::to_string(cond) + " above cap");
    return detail::lu_solve(f, b);
}

// ---------------------------------------------------------------------------
// Matrix exponential (scaling and squaring, Pade approximants up to order 13)
// ---------------------------------------------------------------------------

namespace detail {

template <int N>
SmallMatrix<N> pade_combine(const SmallMatrix<N>& u, const SmallMatrix<N>& v) {
    const auto f = lu_factor(v - u);
    // (V - U) is dominated by its constant term after scaling; a singular
    // factorization here means the input was not scaled properly.
    if (f.singular) raise(Errc::internal, "mat_exp: Pade denominator singular");
    return lu_solve_matrix(f, v + u);
}

template <int N>
SmallMatrix<N> expm_pade3(const SmallMatrix<N>& a) {
    static constexpr double b[] = {120.0, 60.0, 12.0, 1.0};
    const SmallMatrix<N> i = SmallMatrix<N>::identity();
    const SmallMatrix<N> a2 = a * a;
    return pade_combine(a * (b[3] * a2 + b[1] * i), b[2] * a2 + b[0] * i);
}

template <int N>
SmallMatrix<N> expm_pade5(const SmallMatrix<N>& a) {
    static constexpr double b[] = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
    const SmallMatrix<N> i = SmallMatrix<N>::identity();
    const SmallMatrix<N> a2 = a * a;
    const SmallMatrix<N> a4 = a2 * a2;
    return pade_combine(a * (b[5] * a4 + b[3] * a2 + b[1] * i), b[4] * a4 + b[2] * a2 + b[0] * i);
}

template <int N>
SmallMatrix<N> expm_pade7(const SmallMatrix<N>& a) {
    static constexpr double b[] = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                   25200.0,    1512.0,    56.0,      1.0};
    const SmallMatrix<N> i = SmallMatrix<N>::identity();
    const SmallMatrix<N> a2 = a * a;
    const SmallMatrix<N> a4 = a2 * a2;
    const SmallMatrix<N> a6 = a4 * a2;
    return pade_combine(a * (b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * i),
                        b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * i);
}

template <int N>
SmallMatrix<N> expm_pade9(const SmallMatrix<N>& a) {
    static constexpr double b[] = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                   30270240.0,    2162160.0,    110880.0,     3960.0,
                                   90.0,          1.0};
    const SmallMatrix<N> i = SmallMatrix<N>::identity();
    const SmallMatrix<N> a2 = a * a;
    const SmallMatrix<N> a4 = a2 * a2;
    const SmallMatrix<N> a6 = a4 * a2;
    const SmallMatrix<N> a8 = a6 * a2;
    return pade_combine(a * (b[9] * a8 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * i),
                        b[8] * a8 + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * i);
}

template <int N>
SmallMatrix<N> expm_pade13(const SmallMatrix<N>& a) {
    static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                   1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                   670442572800.0,      33522128640.0,       1323241920.0,
                                   40840800.0,          960960.0,            16380.0,
                                   182.0,               1.0};
    const SmallMatrix<N> i = SmallMatrix<N>::identity();
    const SmallMatrix<N> a2 = a * a;
    const SmallMatrix<N> a4 = a2 * a2;
    const SmallMatrix<N> a6 = a4 * a2;
    const SmallMatrix<N> u =
        a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 +
             b[1] * i);
    const SmallMatrix<N> v =
        a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * i;
    return pade_combine(u, v);
}

}  // namespace detail

/// e^{Mt} by scaling and squaring with the classic Pade order ladder
/// (orders 3/5/7/9 below their norm thresholds, order 13 with scaling above).
template <int N>
SmallMatrix<N> mat_exp(const SmallMatrix<N>& m, double t = 1.0) {
    if (!m.all_finite() || !std::isfinite(t)) raise(Errc::domain, "mat_exp: non-finite input");
    const SmallMatrix<N> a = m * t;
    const double nrm = a.norm_1();

    constexpr double theta3 = 1.495585217958292e-2;
    constexpr double theta5 = 2.539398330063230e-1;
    constexpr double theta7 = 9.504178996162932e-1;
    constexpr double theta9 = 2.097847961257068e0;
    constexpr double theta13 = 5.371920351148152e0;

    if (nrm <= theta3) return detail::expm_pade3(a);
    if (nrm <= theta5) return detail::expm_pade5(a);
    if (nrm <= theta7) return detail::expm_pade7(a);
    if (nrm <= theta9) return detail::expm_pade9(a);

    int s = 0;
    if (nrm > theta13) s = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
    SmallMatrix<N> r = detail::expm_pade13(std::ldexp(1.0, -s) * a);
    for (int k = 0; k < s; ++k) r = r * r;
    return r;
}

// ---------------------------------------------------------------------------
// Eigenvalues (characteristic polynomial route, dimension <= 4)
// ---------------------------------------------------------------------------

namespace detail {

// Monic characteristic polynomial coefficients c[0..N] with c[N] = 1,
// p(x) = sum c[k] x^k, via the Faddeev-LeVerrier recursion.
template <int N>
std::array<double, N + 1> char_poly(const SmallMatrix<N>& m) {
    std::array<double, N + 1> c{};
    c[N] = 1.0;
    SmallMatrix<N> mk = m;
    for (int k = 1; k <= N; ++k) {
        if (k > 1) mk = m * (mk + c[N - k + 1] * SmallMatrix<N>::identity());
        c[N - k] = -mk.trace() / k;
    }
    return c;
}

inline std::complex<double> poly_eval(std::span<const double> c, std::complex<double> z) {
    std::complex<double> p = 0.0;
    for (int k = static_cast<int>(c.size()) - 1; k >= 0; --k) p = p * z + c[static_cast<std::size_t>(k)];
    return p;
}

inline std::complex<double> poly_deriv_eval(std::span<const double> c, std::complex<double> z) {
    std::complex<double> p = 0.0;
    for (int k = static_cast<int>(c.size()) - 1; k >= 1; --k)
        p = p * z + static_cast<double>(k) * c[static_cast<std::size_t>(k)];
    return p;
}

// A couple of guarded Newton steps tighten each root of the computed
// polynomial to machine precision; skipped near critical points.
inline void newton_polish(std::span<const double> c, std::complex<double>& z) {
    for (int it = 0; it < 3; ++it) {
        const std::complex<double> dp = poly_deriv_eval(c, z);
        if (std::abs(dp) < 1e-300) return;
        const std::complex<double> step = poly_eval(c, z) / dp;
        if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) return;
        z -= step;
    }
}

// Roots of x^2 + bx + c, numerically stable quadratic formula.
inline void solve_quadratic(double b, double c, std::complex<double>& r1,
                            std::complex<double>& r2) {
    const double disc = b * b - 4.0 * c;
    if (disc >= 0.0) {
        const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
        r1 = q;
        r2 = (q != 0.0) ? c / q : 0.0;
    } else {
        const double re = -0.5 * b;
        const double im = 0.5 * std::sqrt(-disc);
        r1 = {re, im};
        r2 = {re, -im};
    }
}

// Roots of x^3 + bx^2 + cx + d (trigonometric form for three real roots,
// Cardano otherwise).
inline std::array<std::complex<double>, 3> solve_cubic(double b, double c, double d) {
    const double p = c - b * b / 3.0;
    const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    const double shift = -b / 3.0;
    std::array<std::complex<double>, 3> r;

    const double half_q_sq = 0.25 * q * q;
    const double third_p_cu = p * p * p / 27.0;
    const double disc = half_q_sq + third_p_cu;  // > 0: one real root

    if (disc > 0.0) {
        const double s = std::sqrt(disc);
        const double u = std::cbrt(q > 0.0 ? -0.5 * q - s : -0.5 * q + s);
        const double v = (u != 0.0) ? -p / (3.0 * u) : 0.0;
        r[0] = shift + u + v;
        r[1] = {shift - 0.5 * (u + v), 0.5 * std::sqrt(3.0) * (u - v)};
        r[2] = std::conj(r[1]);
    } else if (p == 0.0) {
        r[0] = r[1] = r[2] = shift;  // triple root
    } else {
        const double rho = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * q / (p * rho), -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        constexpr double two_thirds_pi = 2.0943951023931953;
        for (int k = 0; k < 3; ++k) r[k] = shift + rho * std::cos(theta - two_thirds_pi * k);
    }
    return r;
}

// Durand-Kerner iteration for the quartic case.
inline std::array<std::complex<double>, 4> solve_quartic(std::span<const double> c) {
    double radius = 0.0;
    for (int k = 0; k < 4; ++k) radius = std::max(radius, std::abs(c[static_cast<std::size_t>(k)]));
    radius = 1.0 + radius;
    std::array<std::complex<double>, 4> z;
    const std::complex<double> seed{0.4, 0.9};
    z[0] = radius * seed;
    for (int k = 1; k < 4; ++k) z[k] = z[k - 1] * seed;
    for (int it = 0; it < 256; ++it) {
        double moved = 0.0;
        for (int i = 0; i < 4; ++i) {
            std::complex<double> denom = 1.0;
            for (int j = 0; j < 4; ++j)
                if (j != i) denom *= z[i] - z[j];
            if (std::abs(denom) < 1e-300) continue;
            const std::complex<double> step = poly_eval(c, z[i]) / denom;
            z[i] -= step;
            moved = std::max(moved, std::abs(step));
        }
        if (moved < 1e-15 * radius) break;
    }
    return z;
}

}  // namespace detail

/// Eigenvalues with multiplicity, sorted by descending modulus. Triangular
/// inputs short-circuit to their diagonal.
template <int N>
std::array<std::complex<double>, N> eigenvalues(const SmallMatrix<N>& m) {
    if (!m.all_finite()) raise(Errc::domain, "eigenvalues: non-finite input");
    std::array<std::complex<double>, N> ev;

    if (m.lower_triangular() || m.upper_triangular()) {
        for (int i = 0; i < N; ++i) ev[i] = m(i, i);
    } else {
        const auto c = detail::char_poly(m);
        if constexpr (N == 1) {
            ev[0] = -c[0];
        } else if constexpr (N == 2) {
            detail::solve_quadratic(c[1], c[0], ev[0], ev[1]);
        } else if constexpr (N == 3) {
            const auto r = detail::solve_cubic(c[2], c[1], c[0]);
            for (int i = 0; i < 3; ++i) ev[i] = r[static_cast<std::size_t>(i)];
        } else {
            const auto r = detail::solve_quartic(std::span<const double>(c.data(), c.size()));
            for (int i = 0; i < 4; ++i) ev[i] = r[static_cast<std::size_t>(i)];
        }
        for (auto& z : ev) detail::newton_polish(std::span<const double>(c.data(), c.size()), z);
        // Real matrices have conjugate-symmetric spectra; drop the stray
        // imaginary dust the polish leaves on essentially-real roots.
        for (auto& z : ev)
            if (std::abs(z.imag()) <= 1e-12 * std::max(1.0, std::abs(z.real()))) z = z.real();
    }

    std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
        if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return ev;
}

template <int N>
double spectral_radius(const std::array<std::complex<double>, N>& ev) {
    double r = 0.0;
    for (const auto& z : ev) r = std::max(r, std::abs(z));
    return r;
}

// ---------------------------------------------------------------------------
// The scalar function mu(z) = e^z / (1 - e^z) and its divided differences
// ---------------------------------------------------------------------------

/// mu(z) = e^z/(1 - e^z) = 1/expm1(-z); has a pole at z = 0.
inline double mu(double z, const NumericsSettings& ns = {}) {
    if (!std::isfinite(z)) raise(Errc::domain, "mu: non-finite argument");
    if (std::abs(z) <= ns.mu_singularity_eps)
        raise(Errc::singularity, "mu: argument within singularity tolerance of z = 0");
    return 1.0 / std::expm1(-z);
}

/// mu'(z), written in terms of m = mu(z) to stay stable for large |z|.
inline double mu_prime(double z, const NumericsSettings& ns = {}) {
    const double m = mu(z, ns);
    return m * (1.0 + m);
}

inline double mu_second(double z, const NumericsSettings& ns = {}) {
    const double m = mu(z, ns);
    return m * (1.0 + m) * (1.0 + 2.0 * m);
}

/// k-th divided difference f[z_0, ..., z_k] by the recursive triangle scheme.
/// Nodes closer than the separation tolerance are rejected; callers with an
/// analytic derivative should use a confluent form instead (see
/// mu_divided_difference).
template <class F>
double divided_difference(F&& f, std::span<const double> points, const NumericsSettings& ns = {}) {
    const std::size_t n = points.size();
    if (n == 0) raise(Errc::domain, "divided_difference: no points");
    double zmax = 0.0;
    for (double z : points) {
        if (!std::isfinite(z)) raise(Errc::domain, "divided_difference: non-finite point");
        zmax = std::max(zmax, std::abs(z));
    }
    const double sep = ns.dd_separation_rel * std::max(zmax, 1e-300);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(points[i] - points[j]) <= sep)
                raise(Errc::degenerate_points, "divided_difference: coincident points");

    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = f(points[i]);
    for (std::size_t level = 1; level < n; ++level)
        for (std::size_t i = 0; i + level < n; ++i)
            d[i] = (d[i + 1] - d[i]) / (points[i + level] - points[i]);
    return d[0];
}

/// Divided differences of mu with a confluent fallback: nodes closer than the
/// separation tolerance are merged through the analytic derivatives
/// (mean-value form), which keeps near-coincident time constants usable.
/// Supports up to three nodes, the orders the fixed-point formulas need.
inline double mu_divided_difference(std::span<const double> points,
                                    const NumericsSettings& ns = {}) {
    const std::size_t n = points.size();
    if (n == 0 || n > 3) raise(Errc::domain, "mu_divided_difference: supports 1..3 points");
    double zmax = 0.0;
    for (double z : points) zmax = std::max(zmax, std::abs(z));
    const double sep = ns.dd_separation_rel * std::max(zmax, 1e-300);

    std::array<double, 3> z{};
    std::copy(points.begin(), points.end(), z.begin());
    std::sort(z.begin(), z.begin() + n);

    const auto first = [&](double za, double zb) {
        if (std::abs(zb - za) <= sep) return mu_prime(0.5 * (za + zb), ns);
        return (mu(zb, ns) - mu(za, ns)) / (zb - za);
    };

    if (n == 1) return mu(z[0], ns);
    if (n == 2) return first(z[0], z[1]);
    if (std::abs(z[2] - z[0]) <= sep) return 0.5 * mu_second((z[0] + z[1] + z[2]) / 3.0, ns);
    return (first(z[1], z[2]) - first(z[0], z[1])) / (z[2] - z[0]);
}

// ---------------------------------------------------------------------------
// Bracketed root finding
// ---------------------------------------------------------------------------

struct RootSet {
    std::vector<double> roots;   // ascending
    double bracket_width = 0.0;  // final bisection interval width
    double max_residual = 0.0;   // max |f| over the returned roots
};

/// Sign-change bracketing on a uniform grid followed by bisection. Roots
/// where f touches zero without changing sign are not guaranteed to be found.
/// When `node_values` is non-empty it must hold grid_n + 1 samples of f at
/// the grid nodes; bracketing then uses them instead of re-evaluating f,
/// which lets callers supply values from a cheaper recurrence. Bisection
/// always evaluates f directly, so a node value that disagrees with f in the
/// last bits only shifts which near-zero crossing the bracket converges to.
template <class F>
RootSet find_roots(F&& f, double lo, double hi, int grid_n, double tol,
                   std::span<const double> node_values = {}) {
    if (!(lo < hi)) raise(Errc::domain, "find_roots: requires lo < hi");
    if (grid_n < 2) raise(Errc::domain, "find_roots: requires grid_n >= 2");
    if (!(tol > 0.0)) raise(Errc::domain, "find_roots: requires tol > 0");
    if (!node_values.empty() && node_values.size() != static_cast<size_t>(grid_n) + 1)
        raise(Errc::domain, "find_roots: node_values must hold grid_n + 1 samples");

    RootSet out;
    out.bracket_width = tol;
    const double h = (hi - lo) / grid_n;
    double x0 = lo;
    double f0 = node_values.empty() ? f(x0) : node_values[0];
    for (int i = 0; i < grid_n; ++i) {
        const double x1 = (i + 1 == grid_n) ? hi : lo + (i + 1) * h;
        const double f1 = node_values.empty() ? f(x1) : node_values[static_cast<size_t>(i) + 1];
        if (f0 == 0.0) {
            out.roots.push_back(x0);
        } else if (f1 != 0.0 && std::signbit(f0) != std::signbit(f1)) {
            double a = x0, b = x1, fa = f0;
            while (b - a > tol) {
                const double mid = 0.5 * (a + b);
                const double fm = f(mid);
                if (fm == 0.0) {
                    a = b = mid;
                    break;
                }
                if (std::signbit(fm) == std::signbit(fa)) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            out.roots.push_back(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    if (f0 == 0.0) out.roots.push_back(x0);

    std::sort(out.roots.begin(), out.roots.end());
    out.roots.erase(std::unique(out.roots.begin(), out.roots.end()), out.roots.end());
    for (double r : out.roots) out.max_residual = std::max(out.max_residual, std::abs(f(r)));
    return out;
}

}  // namespace igo
