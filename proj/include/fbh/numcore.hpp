#pragma once

// Finite-difference differentiation, cumulative quadrature, and an adaptive
// embedded Runge-Kutta integrator on uniform 1-D grids. Everything else in
// the library sits on top of these three operations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbh::numcore {

// ---------------------------------------------------------------------------
// Grids and samples
// ---------------------------------------------------------------------------

struct Grid1D {
    double start = 0.0;
    double end = 1.0;
    std::size_t count = 0;

    Grid1D() = default;
    Grid1D(double a, double b, std::size_t n) : start(a), end(b), count(n) {
        if (n < 5) throw std::invalid_argument("grid needs at least 5 nodes");
        if (!(b > a)) throw std::invalid_argument("grid span must be increasing");
        if (!std::isfinite(a) || !std::isfinite(b))
            throw std::invalid_argument("grid bounds must be finite");
    }

    double spacing() const { return (end - start) / static_cast<double>(count - 1); }
    double node(std::size_t i) const {
        return start + spacing() * static_cast<double>(i);
    }
    std::vector<double> nodes() const {
        std::vector<double> x(count);
        for (std::size_t i = 0; i < count; ++i) x[i] = node(i);
        return x;
    }
    bool operator==(const Grid1D&) const = default;
};

struct SampledFunction {
    Grid1D grid;
    std::vector<double> values;

    SampledFunction() = default;
    SampledFunction(Grid1D g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.count)
            throw std::invalid_argument("sample count does not match grid");
    }

    static SampledFunction tabulate(const Grid1D& g,
                                    const std::function<double(double)>& f) {
        std::vector<double> v(g.count);
        for (std::size_t i = 0; i < g.count; ++i) v[i] = f(g.node(i));
        return SampledFunction(g, std::move(v));
    }

    double sup_norm() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

// Trajectory of an ODE state resampled onto a uniform grid.
struct SampledSystem {
    Grid1D grid;
    std::vector<std::vector<double>> states;  // states[i] = state at node i

    SampledFunction component(std::size_t k) const {
        std::vector<double> v(grid.count);
        for (std::size_t i = 0; i < grid.count; ++i) v[i] = states[i].at(k);
        return SampledFunction(grid, std::move(v));
    }
};

namespace detail {

inline void require_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::invalid_argument("invalid samples");
}

// Fornberg's algorithm: weights of the m-th derivative at x0 on arbitrary
// nodes. Returns one weight per node.
inline std::vector<double> fd_weights(double x0, std::span<const double> x, int m) {
    const int n = static_cast<int>(x.size());
    std::vector<std::vector<double>> c(
        static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(m) + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[static_cast<std::size_t>(i)] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                        c1 * (k * c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k - 1)] -
                              c5 * c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)]) /
                        c2;
                c[static_cast<std::size_t>(i)][0] =
                    -c1 * c5 * c[static_cast<std::size_t>(i - 1)][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
                    (c4 * c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] -
                     k * c[static_cast<std::size_t>(j)][static_cast<std::size_t>(k - 1)]) /
                    c3;
            c[static_cast<std::size_t>(j)][0] =
                c4 * c[static_cast<std::size_t>(j)][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
    return w;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// diff: finite differences of interior accuracy >= 4 (order 6 when the grid
// affords it), one-sided stencils of the same width at the boundaries.
// ---------------------------------------------------------------------------

inline SampledFunction diff(const SampledFunction& fn, int order) {
    if (order < 1 || order > 3) throw std::invalid_argument("diff order must be 1, 2 or 3");
    const std::size_t n = fn.grid.count;
    if (n < static_cast<std::size_t>(order + 4))
        throw std::invalid_argument("insufficient samples");
    detail::require_finite(fn.values);

    const int accuracy = (n >= static_cast<std::size_t>(order + 6)) ? 6 : 4;
    const std::size_t w = static_cast<std::size_t>(order + accuracy);
    const double h = fn.grid.spacing();

    // Uniform grid: weights depend only on the evaluation offset within the
    // window; precompute one weight row per offset.
    std::vector<std::vector<double>> wtab(w);
    {
        std::vector<double> local(w);
        for (std::size_t r = 0; r < w; ++r) {
            for (std::size_t j = 0; j < w; ++j)
                local[j] = (static_cast<double>(j) - static_cast<double>(r)) * h;
            wtab[r] = detail::fd_weights(0.0, local, order);
        }
    }

    std::vector<double> out(n);
    const std::size_t half = w / 2;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t start = (i > half) ? i - half : 0;
        if (start + w > n) start = n - w;
        const std::size_t r = i - start;
        double acc = 0.0;
        for (std::size_t j = 0; j < w; ++j) acc += wtab[r][j] * fn.values[start + j];
        out[i] = acc;
    }
    return SampledFunction(fn.grid, std::move(out));
}

// Margin of nodes at each end whose stencils are one-sided for the widest
// stencil diff() may use. Residual verdicts are taken over the interior.
inline std::size_t stencil_margin() { return 5; }

inline double interior_sup(const SampledFunction& fn) {
    const std::size_t n = fn.grid.count;
    const std::size_t m = std::min(stencil_margin(), n / 4);
    double s = 0.0;
    for (std::size_t i = m; i + m < n; ++i) s = std::max(s, std::abs(fn.values[i]));
    return s;
}

// ---------------------------------------------------------------------------
// quadrature: running integral, zero at the first node, local polynomial
// degree 5 (composite accuracy well above 4).
// ---------------------------------------------------------------------------

inline SampledFunction quadrature(const SampledFunction& fn) {
    const std::size_t n = fn.grid.count;
    if (n < 5) throw std::invalid_argument("insufficient samples");
    detail::require_finite(fn.values);

    const std::size_t w = std::min<std::size_t>(6, n);
    const double h = fn.grid.spacing();

    // Weights for integrating the degree-(w-1) interpolant over one cell
    // [r, r+1] (window-local units of h), solved from moment conditions.
    auto cell_weights = [&](std::size_t r) {
        std::vector<long double> m(w);
        for (std::size_t k = 0; k < w; ++k) {
            const long double a = static_cast<long double>(r);
            const long double b = a + 1.0L;
            m[k] = (std::pow(b, static_cast<long double>(k + 1)) -
                    std::pow(a, static_cast<long double>(k + 1))) /
                   static_cast<long double>(k + 1);
        }
        // Solve V^T w = m with V_{kj} = j^k (node offsets 0..w-1).
        std::vector<std::vector<long double>> A(w, std::vector<long double>(w + 1, 0.0L));
        for (std::size_t k = 0; k < w; ++k) {
            for (std::size_t j = 0; j < w; ++j)
                A[k][j] = std::pow(static_cast<long double>(j), static_cast<long double>(k));
            A[k][w] = m[k];
        }
        for (std::size_t col = 0; col < w; ++col) {
            std::size_t piv = col;
            for (std::size_t row = col + 1; row < w; ++row)
                if (std::fabs(static_cast<double>(A[row][col])) >
                    std::fabs(static_cast<double>(A[piv][col])))
                    piv = row;
            std::swap(A[col], A[piv]);
            for (std::size_t row = 0; row < w; ++row) {
                if (row == col) continue;
                const long double f = A[row][col] / A[col][col];
                for (std::size_t j = col; j <= w; ++j) A[row][j] -= f * A[col][j];
            }
        }
        std::vector<double> out(w);
        for (std::size_t j = 0; j < w; ++j)
            out[j] = static_cast<double>(A[j][w] / A[j][j] * static_cast<long double>(h));
        return out;
    };

    std::vector<std::vector<double>> wtab(w);  // indexed by cell offset in window
    std::vector<bool> have(w, false);

    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        std::size_t start = (i > (w / 2 - 1)) ? i - (w / 2 - 1) : 0;
        if (start + w > n) start = n - w;
        const std::size_t r = i - start;
        if (!have[r]) {
            wtab[r] = cell_weights(r);
            have[r] = true;
        }
        double cell = 0.0;
        for (std::size_t j = 0; j < w; ++j) cell += wtab[r][j] * fn.values[start + j];
        out[i + 1] = out[i] + cell;
    }
    return SampledFunction(fn.grid, std::move(out));
}

// ---------------------------------------------------------------------------
// integrate_ode: explicit Dormand-Prince 5(4) with adaptive steps; the
// trajectory lands exactly on the requested output grid.
// ---------------------------------------------------------------------------

using OdeRhs = std::function<void(double, std::span<const double>, std::span<double>)>;

inline SampledSystem integrate_ode(const OdeRhs& rhs, std::vector<double> y0,
                                   const Grid1D& grid, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    detail::require_finite(y0);

    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                            e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    const std::size_t dim = y0.size();
    const double span = grid.end - grid.start;
    const double hmin = 1e-14 * span;

    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
    std::vector<double> ytmp(dim), y5(dim), err(dim);

    SampledSystem out;
    out.grid = grid;
    out.states.resize(grid.count);
    out.states[0] = y0;

    double s = grid.start;
    std::vector<double> y = std::move(y0);
    double hnat = span / static_cast<double>(grid.count - 1);
    std::size_t next = 1;

    rhs(s, y, k1);  // FSAL seed

    while (next < grid.count) {
        const double starget = grid.node(next);
        const bool clipped = hnat >= starget - s;
        const double h = clipped ? starget - s : hnat;

        auto stage = [&](std::span<double> k, double c, auto&&... terms) {
            for (std::size_t i = 0; i < dim; ++i) {
                double acc = y[i];
                ((acc += h * terms.first * terms.second[i]), ...);
                ytmp[i] = acc;
            }
            rhs(s + c * h, ytmp, k);
        };
        using P = std::pair<double, const std::vector<double>&>;
        stage(k2, 1.0 / 5, P{a21, k1});
        stage(k3, 3.0 / 10, P{a31, k1}, P{a32, k2});
        stage(k4, 4.0 / 5, P{a41, k1}, P{a42, k2}, P{a43, k3});
        stage(k5, 8.0 / 9, P{a51, k1}, P{a52, k2}, P{a53, k3}, P{a54, k4});
        stage(k6, 1.0, P{a61, k1}, P{a62, k2}, P{a63, k3}, P{a64, k4}, P{a65, k5});
        for (std::size_t i = 0; i < dim; ++i)
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(s + h, y5, k7);

        double errnorm = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                          e7 * k7[i]);
            const double sc = tol * (1.0 + std::abs(y[i]));
            errnorm = std::max(errnorm, std::abs(err[i]) / sc);
        }
        if (!std::isfinite(errnorm)) errnorm = 2.0;  // force reject on NaN

        if (errnorm <= 1.0) {
            s = clipped ? starget : s + h;
            y = y5;
            k1 = k7;  // FSAL
            if (clipped) {
                out.states[next] = y;
                ++next;
            }
        } else if (h <= 2.0 * hmin) {
            throw std::runtime_error("integration stalled at s=" + std::to_string(s));
        }
        double factor = (errnorm > 0.0) ? 0.9 * std::pow(errnorm, -0.2) : 5.0;
        factor = std::clamp(factor, 0.2, 5.0);
        hnat = std::max(h * factor, hmin);
    }
    return out;
}

}  // namespace fbh::numcore
