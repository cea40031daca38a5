#pragma once

// Coordinate charts of the model geometries: metric, Christoffel symbols,
// curvature constant. Christoffels are closed forms per chart; a numeric
// Riemann assembly in the tests guards them.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fbh/numcore.hpp"

namespace fbh::spaceform {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;
using Christoffel = std::vector<Mat>;  // [k][i][j] = Gamma^k_ij

struct SpaceFormChart {
    std::string name;
    int dim = 0;
    std::optional<double> curvature;  // empty for non-constant-curvature carriers (Sol)
    std::vector<std::string> coords;
    std::vector<std::pair<double, double>> domain;  // open intervals per coordinate
    std::function<Mat(const Vec&)> metric;
    std::function<Christoffel(const Vec&)> christoffel;

    bool in_domain(const Vec& p, double margin = 0.0) const {
        for (int i = 0; i < dim; ++i) {
            const auto [lo, hi] = domain[static_cast<std::size_t>(i)];
            const double x = p[static_cast<std::size_t>(i)];
            if (!(x > lo + margin && x < hi - margin)) return false;
        }
        return true;
    }
};

inline double dot(const SpaceFormChart& chart, const Vec& p, const Vec& x, const Vec& y) {
    const Mat g = chart.metric(p);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j) acc += g[i][j] * x[i] * y[j];
    return acc;
}

inline double norm(const SpaceFormChart& chart, const Vec& p, const Vec& x) {
    return std::sqrt(std::max(0.0, dot(chart, p, x, x)));
}

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline Mat diag(std::initializer_list<double> d) {
    const std::size_t n = d.size();
    Mat m(n, std::vector<double>(n, 0.0));
    std::size_t i = 0;
    for (double v : d) m[i][i] = v, ++i;
    return m;
}

inline Christoffel zero_gamma(int n) {
    return Christoffel(static_cast<std::size_t>(n),
                       Mat(static_cast<std::size_t>(n),
                           std::vector<double>(static_cast<std::size_t>(n), 0.0)));
}

}  // namespace detail

// Flat chart in any dimension (pad_embed targets live here too).
inline SpaceFormChart euclidean_chart(int n) {
    SpaceFormChart c;
    c.name = "euclidean" + std::to_string(n);
    c.dim = n;
    c.curvature = 0.0;
    for (int i = 0; i < n; ++i) {
        c.coords.push_back("x" + std::to_string(i + 1));
        c.domain.emplace_back(-detail::kInf, detail::kInf);
    }
    c.metric = [n](const Vec&) {
        Mat g(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
        for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
        return g;
    };
    c.christoffel = [n](const Vec&) { return detail::zero_gamma(n); };
    return c;
}

namespace detail {

inline SpaceFormChart make_sphere2() {
    SpaceFormChart c;
    c.name = "sphere2";
    c.dim = 2;
    c.curvature = 1.0;
    c.coords = {"rho", "phi"};
    c.domain = {{-M_PI / 2, M_PI / 2}, {-kInf, kInf}};
    c.metric = [](const Vec& p) {
        const double cr = std::cos(p[0]);
        return diag({1.0, cr * cr});
    };
    c.christoffel = [](const Vec& p) {
        auto G = zero_gamma(2);
        const double rho = p[0];
        G[0][1][1] = std::sin(rho) * std::cos(rho);
        G[1][0][1] = G[1][1][0] = -std::tan(rho);
        return G;
    };
    return c;
}

inline SpaceFormChart make_hyperbolic2() {
    SpaceFormChart c;
    c.name = "hyperbolic2";
    c.dim = 2;
    c.curvature = -1.0;
    c.coords = {"u", "v"};
    c.domain = {{-kInf, kInf}, {-kInf, kInf}};
    c.metric = [](const Vec& p) { return diag({1.0, std::exp(2.0 * p[0])}); };
    c.christoffel = [](const Vec& p) {
        auto G = zero_gamma(2);
        G[0][1][1] = -std::exp(2.0 * p[0]);
        G[1][0][1] = G[1][1][0] = 1.0;
        return G;
    };
    return c;
}

inline SpaceFormChart make_sol3() {
    SpaceFormChart c;
    c.name = "sol3";
    c.dim = 3;
    c.curvature = std::nullopt;
    c.coords = {"x", "y", "z"};
    c.domain = {{-kInf, kInf}, {-kInf, kInf}, {-kInf, kInf}};
    c.metric = [](const Vec& p) {
        return diag({std::exp(2.0 * p[2]), std::exp(-2.0 * p[2]), 1.0});
    };
    c.christoffel = [](const Vec& p) {
        auto G = zero_gamma(3);
        const double z = p[2];
        G[0][0][2] = G[0][2][0] = 1.0;
        G[1][1][2] = G[1][2][1] = -1.0;
        G[2][0][0] = -std::exp(2.0 * z);
        G[2][1][1] = std::exp(-2.0 * z);
        return G;
    };
    return c;
}

inline SpaceFormChart make_flatcyl3() {
    SpaceFormChart c;
    c.name = "flatcyl3";
    c.dim = 3;
    c.curvature = 0.0;
    c.coords = {"rho", "z", "theta"};
    c.domain = {{0.0, kInf}, {-kInf, kInf}, {-kInf, kInf}};
    c.metric = [](const Vec& p) { return diag({1.0, 1.0, p[0] * p[0]}); };
    c.christoffel = [](const Vec& p) {
        auto G = zero_gamma(3);
        const double rho = p[0];
        G[0][2][2] = -rho;
        G[2][0][2] = G[2][2][0] = 1.0 / rho;
        return G;
    };
    return c;
}

inline SpaceFormChart make_hyperbolic3() {
    SpaceFormChart c;
    c.name = "hyperbolic3";
    c.dim = 3;
    c.curvature = -1.0;
    c.coords = {"rho", "z", "theta"};
    c.domain = {{-kInf, kInf}, {-kInf, kInf}, {-kInf, kInf}};
    c.metric = [](const Vec& p) {
        const double e = std::exp(-2.0 * p[0]);
        return diag({1.0, e, e});
    };
    c.christoffel = [](const Vec& p) {
        auto G = zero_gamma(3);
        const double e = std::exp(-2.0 * p[0]);
        G[1][0][1] = G[1][1][0] = -1.0;
        G[2][0][2] = G[2][2][0] = -1.0;
        G[0][1][1] = e;
        G[0][2][2] = e;
        return G;
    };
    return c;
}

inline SpaceFormChart make_sphere3() {
    SpaceFormChart c;
    c.name = "sphere3";
    c.dim = 3;
    c.curvature = 1.0;
    c.coords = {"rho", "z", "theta"};
    c.domain = {{0.0, M_PI / 2}, {-kInf, kInf}, {-kInf, kInf}};
    c.metric = [](const Vec& p) {
        const double cr = std::cos(p[0]), sr = std::sin(p[0]);
        return diag({1.0, cr * cr, sr * sr});
    };
    c.christoffel = [](const Vec& p) {
        auto G = zero_gamma(3);
        const double rho = p[0];
        const double sc = std::sin(rho) * std::cos(rho);
        G[1][0][1] = G[1][1][0] = -std::tan(rho);
        G[2][0][2] = G[2][2][0] = 1.0 / std::tan(rho);
        G[0][1][1] = sc;
        G[0][2][2] = -sc;
        return G;
    };
    return c;
}

}  // namespace detail

// Charts addressable by name: euclidean2, euclidean3, sphere2, hyperbolic2,
// sol3, flatcyl3, hyperbolic3, sphere3.
inline const SpaceFormChart& chart(const std::string& name) {
    static const std::map<std::string, SpaceFormChart> registry = [] {
        std::map<std::string, SpaceFormChart> m;
        m.emplace("euclidean2", euclidean_chart(2));
        m.emplace("euclidean3", euclidean_chart(3));
        m.emplace("sphere2", detail::make_sphere2());
        m.emplace("hyperbolic2", detail::make_hyperbolic2());
        m.emplace("sol3", detail::make_sol3());
        m.emplace("flatcyl3", detail::make_flatcyl3());
        m.emplace("hyperbolic3", detail::make_hyperbolic3());
        m.emplace("sphere3", detail::make_sphere3());
        return m;
    }();
    auto it = registry.find(name);
    if (it == registry.end()) throw std::invalid_argument("unknown chart: " + name);
    return it->second;
}

// Constant-curvature (0,4) curvature with the orientation fixed so that
// R(X,Y,X,Y) = C for orthonormal X, Y.
inline double curvature4(const SpaceFormChart& chart, const Vec& p, const Vec& X, const Vec& Y,
                         const Vec& Z, const Vec& W) {
    if (!chart.curvature)
        throw std::domain_error("curvature4 unavailable; use frame computations");
    const double C = *chart.curvature;
    if (C == 0.0) return 0.0;
    return C * (dot(chart, p, X, Z) * dot(chart, p, Y, W) -
                dot(chart, p, X, W) * dot(chart, p, Y, Z));
}

// Covariant derivative of a vector field V sampled along a curve:
// (d/ds) V^k + Gamma^k_mn gamma'^m V^n, nodewise. The caller supplies the
// velocity samples so every field along one curve differentiates against
// the same gamma'.
inline std::vector<Vec> covariant_derivative_along(const SpaceFormChart& chart,
                                                   const numcore::Grid1D& grid,
                                                   const std::vector<Vec>& points,
                                                   const std::vector<Vec>& velocity,
                                                   const std::vector<Vec>& V) {
    const std::size_t n = grid.count;
    const std::size_t d = static_cast<std::size_t>(chart.dim);
    if (points.size() != n || velocity.size() != n || V.size() != n)
        throw std::invalid_argument("field sample count does not match grid");

    // componentwise d/ds
    std::vector<Vec> out(n, Vec(d, 0.0));
    for (std::size_t k = 0; k < d; ++k) {
        std::vector<double> comp(n);
        for (std::size_t i = 0; i < n; ++i) comp[i] = V[i][k];
        auto dcomp = numcore::diff(numcore::SampledFunction(grid, std::move(comp)), 1);
        for (std::size_t i = 0; i < n; ++i) out[i][k] = dcomp.values[i];
    }
    // Christoffel correction
    for (std::size_t i = 0; i < n; ++i) {
        const Christoffel G = chart.christoffel(points[i]);
        for (std::size_t k = 0; k < d; ++k) {
            double acc = 0.0;
            for (std::size_t m = 0; m < d; ++m)
                for (std::size_t nn = 0; nn < d; ++nn)
                    acc += G[k][m][nn] * velocity[i][m] * V[i][nn];
            out[i][k] += acc;
        }
    }
    return out;
}

// Velocity samples of a curve given by its points.
inline std::vector<Vec> velocity_samples(const numcore::Grid1D& grid,
                                         const std::vector<Vec>& points) {
    const std::size_t n = grid.count;
    const std::size_t d = points.at(0).size();
    std::vector<Vec> v(n, Vec(d, 0.0));
    for (std::size_t k = 0; k < d; ++k) {
        std::vector<double> comp(n);
        for (std::size_t i = 0; i < n; ++i) comp[i] = points[i][k];
        auto dcomp = numcore::diff(numcore::SampledFunction(grid, std::move(comp)), 1);
        for (std::size_t i = 0; i < n; ++i) v[i][k] = dcomp.values[i];
    }
    return v;
}

}  // namespace fbh::spaceform
