#pragma once

// Frenet machinery along sampled curves, the three-branch curvature family
// chi, the weighted-bitension residual system for curves, classification of
// curvature profiles against chi, and constructors for the planar, spherical,
// hyperbolic and helix families.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fbh/numcore.hpp"
#include "fbh/report.hpp"
#include "fbh/spaceform.hpp"

namespace fbh::curves {

using spaceform::SpaceFormChart;
using spaceform::Vec;
using numcore::Grid1D;
using numcore::SampledFunction;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct SampledCurve {
    SpaceFormChart chart;
    Grid1D grid;
    std::vector<Vec> points;
    std::vector<std::string> flags;
};

struct FrenetData {
    Grid1D grid;
    std::size_t levels = 0;                       // number of frames available
    std::vector<std::vector<Vec>> frames;         // frames[k][i], k < levels
    std::vector<std::vector<double>> curvatures;  // curvatures[k][i] = kappa_{k+1}(s_i), >= 0
    std::vector<std::string> flags;

    SampledFunction kappa(std::size_t k) const {  // 1-based curvature index
        if (k == 0 || k > curvatures.size())
            throw std::invalid_argument("curvature index out of range");
        return SampledFunction(grid, curvatures[k - 1]);
    }
};

// Constants of the three-branch solution family. C picks the branch,
// c3 the ratio kappa2/kappa1; the "+" square root branch is built in.
struct ChiParams {
    double C = 0.0;
    double c3 = 0.0;
    double C1 = 1.0, C2 = 1.0;  // C < 0 branch, both positive
    double C3 = 4.0, C4 = 0.0;  // C = 0 branch, C3 > 0
    double C5 = 0.0;            // C > 0 branch uses C4, C5

    double A() const { return 1.0 + c3 * c3; }

    void validate() const {
        if (C < 0.0) {
            if (!(C1 > 0.0) || !(C2 > 0.0))
                throw std::invalid_argument("chi with C<0 requires C1>0 and C2>0");
            if (!(4.0 * C1 * C2 + A() / C > 0.0))
                throw std::invalid_argument("chi with C<0 requires 4*C1*C2 + (1+c3^2)/C > 0");
        } else if (C == 0.0) {
            if (!(C3 > 0.0)) throw std::invalid_argument("chi with C=0 requires C3>0");
        }
    }
};

// Positive weight along a curve. Either the curvature power law
// c1 * kappa1^(-3/2), a constant, or explicit samples.
struct ScalarWeight {
    enum class Kind { KappaPower, Constant, Samples };
    Kind kind = Kind::KappaPower;
    double c1 = 1.0;
    double value = 1.0;
    SampledFunction samples;

    static ScalarWeight kappa_power(double c1 = 1.0) {
        if (!(c1 > 0.0)) throw std::invalid_argument("weight constant must be positive");
        ScalarWeight w;
        w.kind = Kind::KappaPower;
        w.c1 = c1;
        return w;
    }
    static ScalarWeight constant(double v) {
        if (!(v > 0.0)) throw std::invalid_argument("weight must be positive");
        ScalarWeight w;
        w.kind = Kind::Constant;
        w.value = v;
        return w;
    }
    static ScalarWeight of_samples(SampledFunction f) {
        for (double v : f.values)
            if (!(v > 0.0)) throw std::invalid_argument("weight must be positive");
        ScalarWeight w;
        w.kind = Kind::Samples;
        w.samples = std::move(f);
        return w;
    }
};

// ---------------------------------------------------------------------------
// chi
// ---------------------------------------------------------------------------

inline double chi(double s, const ChiParams& p) {
    p.validate();
    double denom;
    if (p.C < 0.0) {
        const double lam = std::sqrt(-p.C);
        denom = p.C1 * std::exp(2.0 * lam * s) + p.C2 * std::exp(-2.0 * lam * s) +
                std::sqrt(4.0 * p.C1 * p.C2 + p.A() / p.C);
    } else if (p.C == 0.0) {
        const double t = s + p.C4;
        return 4.0 * p.C3 / (16.0 * p.A() + p.C3 * p.C3 * t * t);
    } else {
        const double w = 2.0 * std::sqrt(p.C);
        denom = p.C4 * std::cos(w * s) + p.C5 * std::sin(w * s) +
                std::sqrt(p.A() / p.C + p.C4 * p.C4 + p.C5 * p.C5);
    }
    if (!(denom > 0.0)) throw std::domain_error("outside solution domain");
    return 1.0 / denom;
}

inline SampledFunction chi_samples(const Grid1D& g, const ChiParams& p) {
    return SampledFunction::tabulate(g, [&](double s) { return chi(s, p); });
}

// Residual of 3 y'^2 - 2 y y'' = 4 y^2 (A y^2 - C) on the interior.
inline ResidualReport verify_curvature_ode(const SampledFunction& y, double A, double C,
                                           double tol = 1e-6) {
    auto y1 = numcore::diff(y, 1);
    auto y2 = numcore::diff(y, 2);
    std::vector<double> res(y.grid.count);
    for (std::size_t i = 0; i < y.grid.count; ++i) {
        const double v = y.values[i];
        res[i] = 3.0 * y1.values[i] * y1.values[i] - 2.0 * v * y2.values[i] -
                 4.0 * v * v * (A * v * v - C);
    }
    const double sup = numcore::interior_sup(SampledFunction(y.grid, std::move(res)));
    return ResidualReport::from_residuals({{"curvature-ode", sup}}, tol);
}

// ---------------------------------------------------------------------------
// Frenet chain
// ---------------------------------------------------------------------------

namespace detail {

constexpr double kKappaFloor = 1e-8;

inline double dotv(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Everything the residual system needs, computed once per curve:
// covariant derivatives of gamma' up to third order plus frames/curvatures.
struct CurveChain {
    Grid1D grid;
    std::size_t dim = 0;
    std::size_t levels = 0;  // frames available: F1..F_levels
    std::vector<Vec> F1, F2, F3, F4;
    std::vector<Vec> T1, T2, T3;  // nabla gamma', nabla^2 gamma', nabla^3 gamma'
    std::vector<double> kappa1, kappa2, kappa3;
    std::vector<double> kappa1p, kappa1pp;  // derivatives of kappa1, algebraic
    std::vector<std::string> flags;
    std::vector<std::vector<double>> metric_diag_cache;  // g at each node (full matrix rows)
    std::vector<spaceform::Mat> g;

    double ip(std::size_t i, const Vec& a, const Vec& b) const {
        double acc = 0.0;
        for (std::size_t r = 0; r < a.size(); ++r)
            for (std::size_t c = 0; c < b.size(); ++c) acc += g[i][r][c] * a[r] * b[c];
        return acc;
    }
};

inline CurveChain curve_chain(const SampledCurve& curve) {
    const auto& chart = curve.chart;
    const std::size_t n = curve.grid.count;
    const std::size_t d = static_cast<std::size_t>(chart.dim);

    CurveChain ch;
    ch.grid = curve.grid;
    ch.dim = d;
    ch.g.resize(n);
    for (std::size_t i = 0; i < n; ++i) ch.g[i] = chart.metric(curve.points[i]);

    ch.F1 = spaceform::velocity_samples(curve.grid, curve.points);

    // unit speed is checked, not assumed
    {
        double worst = 0.0;
        const std::size_t m = std::min<std::size_t>(numcore::stencil_margin(), n / 4);
        for (std::size_t i = m; i + m < n; ++i)
            worst = std::max(worst, std::abs(std::sqrt(ch.ip(i, ch.F1[i], ch.F1[i])) - 1.0));
        if (worst > 1e-6)
            throw std::invalid_argument("curve is not unit-speed (|gamma'| off by " +
                                        std::to_string(worst) + ")");
    }

    ch.T1 = spaceform::covariant_derivative_along(chart, curve.grid, curve.points, ch.F1, ch.F1);
    ch.T2 = spaceform::covariant_derivative_along(chart, curve.grid, curve.points, ch.F1, ch.T1);
    ch.T3 = spaceform::covariant_derivative_along(chart, curve.grid, curve.points, ch.F1, ch.T2);

    ch.kappa1.resize(n);
    for (std::size_t i = 0; i < n; ++i) ch.kappa1[i] = std::sqrt(std::max(0.0, ch.ip(i, ch.T1[i], ch.T1[i])));

    const double k1max = *std::max_element(ch.kappa1.begin(), ch.kappa1.end());
    ch.levels = 1;
    if (k1max < kKappaFloor) {
        ch.flags.push_back("frenet truncated: kappa1 below floor (geodesic)");
        ch.kappa1p.assign(n, 0.0);
        ch.kappa1pp.assign(n, 0.0);
        ch.kappa2.assign(n, 0.0);
        ch.kappa3.assign(n, 0.0);
        return ch;
    }
    const double k1min = *std::min_element(ch.kappa1.begin(), ch.kappa1.end());
    if (k1min < kKappaFloor)
        ch.flags.push_back("kappa1 touches the degeneracy floor on a subinterval");

    ch.F2.assign(n, Vec(d, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        if (ch.kappa1[i] >= kKappaFloor)
            for (std::size_t r = 0; r < d; ++r) ch.F2[i][r] = ch.T1[i][r] / ch.kappa1[i];
    ch.levels = 2;

    ch.kappa1p.resize(n);
    for (std::size_t i = 0; i < n; ++i) ch.kappa1p[i] = ch.ip(i, ch.T2[i], ch.F2[i]);

    // kappa2 from the Gram-Schmidt remainder of nabla^2 gamma'
    ch.kappa2.assign(n, 0.0);
    std::vector<Vec> E3(n, Vec(d, 0.0));
    if (d >= 3) {
        for (std::size_t i = 0; i < n; ++i) {
            const double a1 = ch.ip(i, ch.T2[i], ch.F1[i]);
            const double a2 = ch.ip(i, ch.T2[i], ch.F2[i]);
            for (std::size_t r = 0; r < d; ++r)
                E3[i][r] = ch.T2[i][r] - a1 * ch.F1[i][r] - a2 * ch.F2[i][r];
            const double norm = std::sqrt(std::max(0.0, ch.ip(i, E3[i], E3[i])));
            if (ch.kappa1[i] >= kKappaFloor) ch.kappa2[i] = norm / ch.kappa1[i];
        }
        const double k2max = *std::max_element(ch.kappa2.begin(), ch.kappa2.end());
        if (k2max >= kKappaFloor) {
            ch.F3.assign(n, Vec(d, 0.0));
            bool partial = false;
            for (std::size_t i = 0; i < n; ++i) {
                const double norm = std::sqrt(std::max(0.0, ch.ip(i, E3[i], E3[i])));
                if (norm >= kKappaFloor * std::max(1.0, ch.kappa1[i]))
                    for (std::size_t r = 0; r < d; ++r) ch.F3[i][r] = E3[i][r] / norm;
                else
                    partial = true;
            }
            ch.levels = 3;
            if (partial) ch.flags.push_back("frenet truncated: kappa2 below floor on a subinterval");
        } else {
            ch.flags.push_back("frenet truncated: kappa2 below floor");
        }
    }

    // kappa1'' = <T3,F2> + kappa1^3 + kappa1 kappa2^2 (Frenet identities)
    ch.kappa1pp.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double k1 = ch.kappa1[i], k2 = ch.kappa2[i];
        ch.kappa1pp[i] = ch.ip(i, ch.T3[i], ch.F2[i]) + k1 * k1 * k1 + k1 * k2 * k2;
    }

    // kappa3 from the Gram-Schmidt remainder of nabla^3 gamma'
    ch.kappa3.assign(n, 0.0);
    if (d >= 4 && ch.levels >= 3) {
        std::vector<Vec> E4(n, Vec(d, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            Vec e = ch.T3[i];
            for (const auto* Fk : {&ch.F1, &ch.F2, &ch.F3}) {
                const double a = ch.ip(i, e, (*Fk)[i]);
                for (std::size_t r = 0; r < d; ++r) e[r] -= a * (*Fk)[i][r];
            }
            E4[i] = e;
            const double denom = ch.kappa1[i] * ch.kappa2[i];
            if (denom >= kKappaFloor * kKappaFloor)
                ch.kappa3[i] = std::sqrt(std::max(0.0, ch.ip(i, e, e))) / denom;
        }
        const double k3max = *std::max_element(ch.kappa3.begin(), ch.kappa3.end());
        if (k3max >= kKappaFloor) {
            ch.F4.assign(n, Vec(d, 0.0));
            for (std::size_t i = 0; i < n; ++i) {
                const double norm = std::sqrt(std::max(0.0, ch.ip(i, E4[i], E4[i])));
                if (norm >= kKappaFloor)
                    for (std::size_t r = 0; r < d; ++r) ch.F4[i][r] = E4[i][r] / norm;
            }
            ch.levels = 4;
        }
    }
    return ch;
}

// f, f', f'' samples for a weight along a chain.
struct WeightSamples {
    std::vector<double> f, fp, fpp;
};

inline WeightSamples weight_samples(const ScalarWeight& w, const CurveChain& ch) {
    const std::size_t n = ch.grid.count;
    WeightSamples out;
    out.f.resize(n);
    out.fp.assign(n, 0.0);
    out.fpp.assign(n, 0.0);
    switch (w.kind) {
        case ScalarWeight::Kind::Constant:
            std::fill(out.f.begin(), out.f.end(), w.value);
            break;
        case ScalarWeight::Kind::KappaPower: {
            for (std::size_t i = 0; i < n; ++i) {
                const double k = ch.kappa1[i];
                if (k < kKappaFloor) throw std::domain_error("Frenet degenerate");
                out.f[i] = w.c1 * std::pow(k, -1.5);
                out.fp[i] = -1.5 * w.c1 * std::pow(k, -2.5) * ch.kappa1p[i];
                out.fpp[i] = w.c1 * (3.75 * std::pow(k, -3.5) * ch.kappa1p[i] * ch.kappa1p[i] -
                                     1.5 * std::pow(k, -2.5) * ch.kappa1pp[i]);
            }
            break;
        }
        case ScalarWeight::Kind::Samples: {
            if (!(w.samples.grid == ch.grid))
                throw std::invalid_argument("weight samples must share the curve grid");
            out.f = w.samples.values;
            out.fp = numcore::diff(w.samples, 1).values;
            out.fpp = numcore::diff(w.samples, 2).values;
            break;
        }
    }
    return out;
}

}  // namespace detail

// frenet: orthonormal frames by Gram-Schmidt on {gamma', nabla gamma', ...},
// curvatures kappa_i >= 0, frames truncated below the degeneracy floor.
inline FrenetData frenet(const SampledCurve& curve, std::size_t kmax = 4) {
    auto ch = detail::curve_chain(curve);
    FrenetData fd;
    fd.grid = ch.grid;
    fd.levels = std::min(ch.levels, kmax);
    fd.flags = ch.flags;
    if (fd.levels >= 1) fd.frames.push_back(ch.F1);
    if (fd.levels >= 2) fd.frames.push_back(ch.F2);
    if (fd.levels >= 3) fd.frames.push_back(ch.F3);
    if (fd.levels >= 4) fd.frames.push_back(ch.F4);
    fd.curvatures.push_back(ch.kappa1);
    fd.curvatures.push_back(ch.kappa2);
    fd.curvatures.push_back(ch.kappa3);
    return fd;
}

// ---------------------------------------------------------------------------
// Weighted-bitension residual system for curves.
//
// The residual vector is f*(nabla^3 gamma' - R(gamma',nabla gamma')gamma')
// + 2 f' nabla^2 gamma' + f'' nabla gamma', projected on the Frenet frames.
// In a chart of constant curvature C the curvature term reduces to +C T1.
// Residuals scale linearly with f.
// ---------------------------------------------------------------------------

inline ResidualReport fbh_curve_residual(const SampledCurve& curve, const ScalarWeight& weight,
                                         double tol = 1e-6) {
    if (!curve.chart.curvature)
        throw std::invalid_argument("curve residuals need a constant-curvature chart");
    const double C = *curve.chart.curvature;

    auto ch = detail::curve_chain(curve);
    auto w = detail::weight_samples(weight, ch);
    const std::size_t n = ch.grid.count;
    const std::size_t d = ch.dim;

    const std::size_t margin = std::min<std::size_t>(12, n / 4);
    double sup1 = 0.0, sup2 = 0.0, sup3 = 0.0, sup4 = 0.0, suph = 0.0;
    for (std::size_t i = margin; i + margin < n; ++i) {
        Vec V(d, 0.0);
        for (std::size_t r = 0; r < d; ++r)
            V[r] = w.f[i] * (ch.T3[i][r] + C * ch.T1[i][r]) + 2.0 * w.fp[i] * ch.T2[i][r] +
                   w.fpp[i] * ch.T1[i][r];

        Vec rem = V;
        auto project = [&](const std::vector<Vec>& F, double& sup) {
            const double a = ch.ip(i, V, F[i]);
            sup = std::max(sup, std::abs(a));
            for (std::size_t r = 0; r < d; ++r) rem[r] -= a * F[i][r];
        };
        project(ch.F1, sup1);
        if (ch.levels >= 2 && ch.kappa1[i] >= detail::kKappaFloor) project(ch.F2, sup2);
        if (ch.levels >= 3) project(ch.F3, sup3);
        if (ch.levels >= 4) project(ch.F4, sup4);
        suph = std::max(suph, std::sqrt(std::max(0.0, ch.ip(i, rem, rem))));
    }

    std::vector<ResidualEntry> entries{{"F1 (tangential)", sup1}, {"F2", sup2}};
    if (ch.levels >= 3) entries.push_back({"F3", sup3});
    if (ch.levels >= 4) entries.push_back({"F4", sup4});
    entries.push_back({"higher", suph});

    auto rep = ResidualReport::from_residuals(std::move(entries), tol);
    rep.flags = ch.flags;
    char buf[96];
    std::snprintf(buf, sizeof buf, "s in [%g, %g], %zu nodes", ch.grid.start, ch.grid.end, n);
    rep.grid_desc = buf;
    return rep;
}

// ---------------------------------------------------------------------------
// Classification of a curvature profile against the chi family.
// ---------------------------------------------------------------------------

struct CurveClass {
    enum class Kind { NotProperFbh, CaseI, CaseII };
    Kind kind = Kind::NotProperFbh;
    ChiParams params;
    ScalarWeight f = ScalarWeight::kappa_power(1.0);
    double sup_misfit = std::numeric_limits<double>::infinity();
    std::string detail;
};

namespace detail {

// least squares for c in basis B (n x m), normal equations
inline std::vector<double> lstsq(const std::vector<std::vector<double>>& B,
                                 const std::vector<double>& y) {
    const std::size_t m = B.size(), n = y.size();
    std::vector<std::vector<double>> A(m, std::vector<double>(m + 1, 0.0));
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < m; ++c)
            for (std::size_t i = 0; i < n; ++i) A[r][c] += B[r][i] * B[c][i];
        for (std::size_t i = 0; i < n; ++i) A[r][m] += B[r][i] * y[i];
    }
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        std::swap(A[col], A[piv]);
        if (std::abs(A[col][col]) < 1e-300) return {};
        for (std::size_t r = 0; r < m; ++r) {
            if (r == col) continue;
            const double f = A[r][col] / A[col][col];
            for (std::size_t c = col; c <= m; ++c) A[r][c] -= f * A[col][c];
        }
    }
    std::vector<double> x(m);
    for (std::size_t r = 0; r < m; ++r) x[r] = A[r][m] / A[r][r];
    return x;
}

inline double sup_misfit(const Grid1D& g, const std::vector<double>& kappa, const ChiParams& p) {
    double worst = 0.0;
    for (std::size_t i = 0; i < g.count; ++i) {
        double v;
        try {
            v = chi(g.node(i), p);
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
        worst = std::max(worst, std::abs(v - kappa[i]));
    }
    return worst;
}

// Gauss-Newton polish of the two free branch constants, damped.
inline void polish(const Grid1D& g, const std::vector<double>& kappa, ChiParams& p) {
    auto get = [&](const ChiParams& q, int which) {
        if (q.C < 0.0) return which == 0 ? q.C1 : q.C2;
        if (q.C == 0.0) return which == 0 ? q.C3 : q.C4;
        return which == 0 ? q.C4 : q.C5;
    };
    auto set = [&](ChiParams& q, int which, double v) {
        if (q.C < 0.0) (which == 0 ? q.C1 : q.C2) = v;
        else if (q.C == 0.0) (which == 0 ? q.C3 : q.C4) = v;
        else (which == 0 ? q.C4 : q.C5) = v;
    };
    const std::size_t n = g.count;
    double lambda = 1e-8;
    double best = sup_misfit(g, kappa, p);
    for (int it = 0; it < 40; ++it) {
        std::vector<double> r(n);
        std::vector<std::vector<double>> J(2, std::vector<double>(n));
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = g.node(i);
            double v;
            try {
                v = chi(s, p);
            } catch (const std::exception&) { ok = false; break; }
            r[i] = v - kappa[i];
            for (int c = 0; c < 2; ++c) {
                ChiParams q = p;
                const double x = get(p, c);
                const double h = 1e-6 * std::max(1.0, std::abs(x));
                set(q, c, x + h);
                double vp;
                try {
                    vp = chi(s, q);
                } catch (const std::exception&) { ok = false; break; }
                J[static_cast<std::size_t>(c)][i] = (vp - v) / h;
            }
            if (!ok) break;
        }
        if (!ok) return;
        double JtJ[2][2] = {{0, 0}, {0, 0}}, Jtr[2] = {0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b)
                    JtJ[a][b] += J[static_cast<std::size_t>(a)][i] * J[static_cast<std::size_t>(b)][i];
                Jtr[a] += J[static_cast<std::size_t>(a)][i] * r[i];
            }
        }
        JtJ[0][0] += lambda;
        JtJ[1][1] += lambda;
        const double det = JtJ[0][0] * JtJ[1][1] - JtJ[0][1] * JtJ[1][0];
        if (std::abs(det) < 1e-300) return;
        const double d0 = (-Jtr[0] * JtJ[1][1] + Jtr[1] * JtJ[0][1]) / det;
        const double d1 = (-JtJ[0][0] * Jtr[1] + JtJ[1][0] * Jtr[0]) / det;
        ChiParams q = p;
        set(q, 0, get(p, 0) + d0);
        set(q, 1, get(p, 1) + d1);
        if (q.C < 0.0 && (!(q.C1 > 0.0) || !(q.C2 > 0.0) || !(4.0 * q.C1 * q.C2 + q.A() / q.C > 0.0)))
            return;
        if (q.C == 0.0 && !(q.C3 > 0.0)) return;
        const double m = sup_misfit(g, kappa, q);
        if (m < best) {
            p = q;
            best = m;
            lambda = std::max(lambda * 0.3, 1e-12);
        } else {
            lambda *= 10.0;
            if (lambda > 1e6) return;
        }
    }
}

}  // namespace detail

// Tests kappa2 == 0 (case i) or kappa2/kappa1 == const != 0 with kappa3 == 0
// (case ii), then fits kappa1 to the chi family. Acceptance is by sup misfit.
inline CurveClass classify_curve(const FrenetData& fd, double C, double fit_tol = 1e-4) {
    const auto& kappa1 = fd.curvatures.at(0);
    const auto& kappa2 = fd.curvatures.at(1);
    const auto& kappa3 = fd.curvatures.at(2);
    const std::size_t n = fd.grid.count;

    double k1min = kappa1[0], k1max = kappa1[0];
    for (double v : kappa1) k1min = std::min(k1min, v), k1max = std::max(k1max, v);
    if (k1min < detail::kKappaFloor)
        throw std::invalid_argument("not classifiable on this span");

    CurveClass out;
    const double scale = std::max(1.0, k1max);

    if (k1max - k1min < 1e-6 * scale) {
        out.detail = "kappa1 constant: weight c1*kappa1^(-3/2) is constant, so the curve "
                     "could only be biharmonic, not proper f-biharmonic";
        return out;
    }

    double k2sup = 0.0, k3sup = 0.0;
    for (double v : kappa2) k2sup = std::max(k2sup, std::abs(v));
    for (double v : kappa3) k3sup = std::max(k3sup, std::abs(v));

    double c3 = 0.0;
    if (k2sup >= fit_tol * scale) {
        if (k3sup >= fit_tol * scale) {
            out.detail = "kappa3 does not vanish";
            return out;
        }
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += kappa2[i] / kappa1[i];
        mean /= static_cast<double>(n);
        double dev = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            dev = std::max(dev, std::abs(kappa2[i] / kappa1[i] - mean));
        if (dev > fit_tol * std::max(1.0, std::abs(mean))) {
            out.detail = "kappa2/kappa1 is not constant";
            return out;
        }
        c3 = mean;
    }

    ChiParams seed;
    seed.C = C;
    seed.c3 = c3;
    const double A = seed.A();

    // Linear seed: 1/kappa1 is a linear combination of branch basis functions.
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = 1.0 / kappa1[i];
    std::vector<double> svals(n);
    for (std::size_t i = 0; i < n; ++i) svals[i] = fd.grid.node(i);

    std::vector<ChiParams> seeds;
    if (C == 0.0) {
        std::vector<std::vector<double>> B(3, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            B[0][i] = svals[i] * svals[i];
            B[1][i] = svals[i];
            B[2][i] = 1.0;
        }
        auto c = detail::lstsq(B, u);
        if (!c.empty() && c[0] > 0.0) {
            ChiParams p = seed;
            p.C3 = 4.0 * c[0];
            p.C4 = c[1] / (2.0 * c[0]);
            seeds.push_back(p);
        }
        for (double g : {0.5, 2.0, 8.0, 32.0}) {
            ChiParams p = seed;
            p.C3 = g;
            p.C4 = 0.0;
            seeds.push_back(p);
        }
    } else if (C > 0.0) {
        const double w = 2.0 * std::sqrt(C);
        std::vector<std::vector<double>> B(3, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            B[0][i] = std::cos(w * svals[i]);
            B[1][i] = std::sin(w * svals[i]);
            B[2][i] = 1.0;
        }
        auto c = detail::lstsq(B, u);
        if (!c.empty()) {
            ChiParams p = seed;
            p.C4 = c[0];
            p.C5 = c[1];
            seeds.push_back(p);
        }
        for (double g : {0.1, 1.0, 10.0}) {
            ChiParams p = seed;
            p.C4 = g;
            p.C5 = 0.0;
            seeds.push_back(p);
        }
    } else {
        const double lam = std::sqrt(-C);
        std::vector<std::vector<double>> B(3, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            B[0][i] = std::exp(2.0 * lam * svals[i]);
            B[1][i] = std::exp(-2.0 * lam * svals[i]);
            B[2][i] = 1.0;
        }
        auto c = detail::lstsq(B, u);
        if (!c.empty() && c[0] > 0.0 && c[1] > 0.0 && 4.0 * c[0] * c[1] + A / C > 0.0) {
            ChiParams p = seed;
            p.C1 = c[0];
            p.C2 = c[1];
            seeds.push_back(p);
        }
        for (double g : {0.1, 1.0, 10.0}) {
            ChiParams p = seed;
            p.C1 = g;
            p.C2 = g;
            if (4.0 * g * g + A / C > 0.0) seeds.push_back(p);
        }
    }

    ChiParams best;
    double bestmis = std::numeric_limits<double>::infinity();
    for (auto p : seeds) {
        detail::polish(fd.grid, kappa1, p);
        const double m = detail::sup_misfit(fd.grid, kappa1, p);
        if (m < bestmis) {
            bestmis = m;
            best = p;
        }
    }

    out.sup_misfit = bestmis;
    if (bestmis < fit_tol * scale) {
        out.kind = (c3 == 0.0) ? CurveClass::Kind::CaseI : CurveClass::Kind::CaseII;
        out.params = best;
        out.f = ScalarWeight::kappa_power(1.0);
    } else {
        out.detail = "kappa1 is not of chi form on this span";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

inline SampledCurve build_planar_curve(double C3, double C4, const Grid1D& grid,
                                       double xprime0 = 0.0) {
    if (!(C3 > 0.0)) throw std::invalid_argument("C3 must be positive");
    SampledCurve c;
    c.chart = spaceform::chart("euclidean2");
    c.grid = grid;
    c.points.resize(grid.count);

    if (C4 == 0.0) {
        for (std::size_t i = 0; i < grid.count; ++i) {
            const double s = grid.node(i);
            const double rad = std::sqrt(16.0 + C3 * C3 * s * s);
            c.points[i] = {4.0 / C3 * std::log(rad + C3 * s) - 4.0 / C3 * std::log(C3),
                           rad / C3};
        }
        return c;
    }

    if (!(std::abs(xprime0) < 1.0))
        throw std::invalid_argument("initial slope must satisfy |x'| < 1");
    auto rhs = [&](double s, std::span<const double> y, std::span<double> dy) {
        const double t = s + C4;
        const double k = 4.0 * C3 / (16.0 + C3 * C3 * t * t);
        dy[0] = y[1];
        dy[1] = -k * std::sqrt(std::max(0.0, 1.0 - y[1] * y[1]));
    };
    auto traj = numcore::integrate_ode(rhs, {0.0, xprime0}, grid, 1e-10);
    auto yprime = SampledFunction::tabulate(grid, [](double) { return 0.0; });
    for (std::size_t i = 0; i < grid.count; ++i) {
        const double xp = traj.states[i][1];
        yprime.values[i] = std::sqrt(std::max(0.0, 1.0 - xp * xp));
    }
    auto y = numcore::quadrature(yprime);
    for (std::size_t i = 0; i < grid.count; ++i)
        c.points[i] = {traj.states[i][0], y.values[i]};
    return c;
}

namespace detail {

// Shared scaffolding for the sphere/hyperbolic constructions: integrate the
// profile ODE, stop with a flag if the velocity degenerates, then recover the
// second coordinate by quadrature.
template <class Rhs, class SecondIntegrand>
SampledCurve build_on_surface_chart(const char* chart_name, Rhs&& rhs,
                                    SecondIntegrand&& second, double y0, double yp0,
                                    const Grid1D& grid, double second0) {
    SampledCurve c;
    c.chart = spaceform::chart(chart_name);
    auto traj = numcore::integrate_ode(rhs, {y0, yp0}, grid, 1e-10);

    std::size_t usable = grid.count;
    for (std::size_t i = 0; i < grid.count; ++i) {
        const double p = traj.states[i][1];
        Vec probe{traj.states[i][0], 0.0};
        if (1.0 - p * p < 1e-10 || !c.chart.in_domain(probe, 1e-6)) {
            usable = i;
            break;
        }
    }
    if (usable < grid.count) {
        if (usable < 9)
            throw std::runtime_error("velocity degenerates immediately; no usable span");
        c.flags.push_back("span truncated at s=" + std::to_string(grid.node(usable)) +
                          ": |profile slope| reached 1");
    }
    Grid1D g2{grid.start, grid.node(usable - 1), usable};

    SampledFunction integrand(g2, std::vector<double>(usable, 0.0));
    for (std::size_t i = 0; i < usable; ++i)
        integrand.values[i] = second(traj.states[i][0], traj.states[i][1]);
    auto sec = numcore::quadrature(integrand);

    c.grid = g2;
    c.points.resize(usable);
    for (std::size_t i = 0; i < usable; ++i)
        c.points[i] = {traj.states[i][0], second0 + sec.values[i]};
    return c;
}

}  // namespace detail

inline SampledCurve build_spherical_curve(double C4, double C5, double rho0, double drho0,
                                          const Grid1D& grid, double phi0 = 0.0) {
    ChiParams p;
    p.C = 1.0;
    p.c3 = 0.0;
    p.C4 = C4;
    p.C5 = C5;
    p.validate();
    if (!(std::abs(drho0) < 1.0))
        throw std::invalid_argument("initial slope must satisfy |rho'| < 1");
    auto rhs = [p](double s, std::span<const double> y, std::span<double> dy) {
        const double k = chi(s, p);
        const double sq = std::sqrt(std::max(0.0, 1.0 - y[1] * y[1]));
        dy[0] = y[1];
        dy[1] = -(1.0 - y[1] * y[1]) * std::tan(y[0]) - k * sq;
    };
    return detail::build_on_surface_chart(
        "sphere2", rhs,
        [](double rho, double drho) {
            return std::sqrt(std::max(0.0, 1.0 - drho * drho)) / std::cos(rho);
        },
        rho0, drho0, grid, phi0);
}

inline SampledCurve build_hyperbolic_curve(double C1, double C2, double u0, double du0,
                                           const Grid1D& grid, double v0 = 0.0) {
    ChiParams p;
    p.C = -1.0;
    p.c3 = 0.0;
    p.C1 = C1;
    p.C2 = C2;
    p.validate();
    if (!(std::abs(du0) < 1.0))
        throw std::invalid_argument("initial slope must satisfy |u'| < 1");
    auto rhs = [p](double s, std::span<const double> y, std::span<double> dy) {
        const double k = chi(s, p);
        const double sq = std::sqrt(std::max(0.0, 1.0 - y[1] * y[1]));
        dy[0] = y[1];
        dy[1] = (1.0 - y[1] * y[1]) - k * sq;
    };
    return detail::build_on_surface_chart(
        "hyperbolic2", rhs,
        [](double u, double du) {
            return std::sqrt(std::max(0.0, 1.0 - du * du)) * std::exp(-u);
        },
        u0, du0, grid, v0);
}

inline SampledCurve build_helix(double omega, double C3, double C4, const Grid1D& grid,
                                double xprime0 = 0.0) {
    if (!(C3 > 0.0)) throw std::invalid_argument("C3 must be positive");
    const double so = std::sin(omega), co = std::cos(omega);
    if (std::abs(so * co) < 1e-12)
        throw std::invalid_argument("omega must satisfy sin(omega)cos(omega) != 0");

    SampledCurve c;
    c.chart = spaceform::chart("euclidean3");
    c.grid = grid;
    c.points.resize(grid.count);

    if (C4 == 0.0 && std::abs(omega - M_PI / 4.0) < 1e-15) {
        for (std::size_t i = 0; i < grid.count; ++i) {
            const double s = grid.node(i);
            const double rad = std::sqrt(64.0 + 2.0 * C3 * C3 * s * s);
            c.points[i] = {4.0 / C3 * std::log(rad + std::sqrt(2.0) * C3 * s) -
                               4.0 / C3 * std::log(C3),
                           rad / (2.0 * C3), s * M_SQRT1_2};
        }
        return c;
    }

    const double c3 = co / so;
    const double A = 1.0 + c3 * c3;
    if (!(std::abs(xprime0) < std::abs(so)))
        throw std::invalid_argument("initial slope must satisfy |x'| < |sin(omega)|");
    auto rhs = [&](double s, std::span<const double> y, std::span<double> dy) {
        const double t = s + C4;
        const double k = 4.0 * C3 / (16.0 * A + C3 * C3 * t * t);
        dy[0] = y[1];
        dy[1] = -k * std::sqrt(std::max(0.0, so * so - y[1] * y[1])) / so;
    };
    auto traj = numcore::integrate_ode(rhs, {0.0, xprime0}, grid, 1e-10);
    SampledFunction yprime(grid, std::vector<double>(grid.count, 0.0));
    for (std::size_t i = 0; i < grid.count; ++i) {
        const double xp = traj.states[i][1];
        yprime.values[i] = std::sqrt(std::max(0.0, so * so - xp * xp));
    }
    auto y = numcore::quadrature(yprime);
    for (std::size_t i = 0; i < grid.count; ++i)
        c.points[i] = {traj.states[i][0], y.values[i], grid.node(i) * co};
    return c;
}

// Zero-pad the coordinates into a higher-dimensional flat chart. Frenet data
// and residuals are invariant.
inline SampledCurve pad_embed(const SampledCurve& curve, int n) {
    if (curve.chart.name.rfind("euclidean", 0) != 0)
        throw std::invalid_argument("pad_embed needs a euclidean chart");
    if (n < curve.chart.dim) throw std::invalid_argument("target dimension too small");
    SampledCurve out;
    out.chart = spaceform::euclidean_chart(n);
    out.grid = curve.grid;
    out.flags = curve.flags;
    out.points.resize(curve.points.size());
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        Vec p(static_cast<std::size_t>(n), 0.0);
        std::copy(curve.points[i].begin(), curve.points[i].end(), p.begin());
        out.points[i] = std::move(p);
    }
    return out;
}

inline double unit_speed_error(const SampledCurve& curve) {
    auto vel = spaceform::velocity_samples(curve.grid, curve.points);
    double worst = 0.0;
    const std::size_t n = curve.grid.count;
    const std::size_t m = std::min<std::size_t>(numcore::stencil_margin(), n / 4);
    for (std::size_t i = m; i + m < n; ++i)
        worst = std::max(worst,
                         std::abs(spaceform::norm(curve.chart, curve.points[i], vel[i]) - 1.0));
    return worst;
}

// CSV: s, x1..xn, kappa1, kappa2, f
inline void export_curve_csv(std::ostream& os, const SampledCurve& curve, const FrenetData& fd,
                             const std::vector<double>& f) {
    os << "s";
    for (int k = 1; k <= curve.chart.dim; ++k) os << ",x" << k;
    os << ",kappa1,kappa2,f\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, ",%.17g", v);
        os << buf;
    };
    for (std::size_t i = 0; i < curve.grid.count; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", curve.grid.node(i));
        os << buf;
        for (double x : curve.points[i]) put(x);
        put(fd.curvatures[0][i]);
        put(fd.curvatures[1][i]);
        put(f[i]);
        os << "\n";
    }
}

}  // namespace fbh::curves
