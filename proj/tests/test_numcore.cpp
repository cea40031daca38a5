#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fbh/numcore.hpp"

namespace num = fbh::numcore;
using num::Grid1D;
using num::SampledFunction;

namespace {

double sup_diff(const SampledFunction& a, const std::function<double(double)>& f) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.grid.count; ++i)
        m = std::max(m, std::abs(a.values[i] - f(a.grid.node(i))));
    return m;
}

}  // namespace

TEST_CASE("diff: first derivative of sin") {
    auto fn = SampledFunction::tabulate({0.0, M_PI, 801}, [](double s) { return std::sin(s); });
    auto d = num::diff(fn, 1);
    CHECK(sup_diff(d, [](double s) { return std::cos(s); }) < 1e-9);
}

TEST_CASE("diff: third derivative of a cubic is exactly 6") {
    auto fn = SampledFunction::tabulate({-1.0, 1.0, 21}, [](double s) { return s * s * s; });
    auto d = num::diff(fn, 3);
    CHECK(sup_diff(d, [](double) { return 6.0; }) < 1e-9);
}

TEST_CASE("diff: second derivative of the flat-case curvature profile") {
    // kappa(s) = 16/(16+16 s^2) = 1/(1+s^2); hand-differentiated oracle:
    // kappa'' = (6 s^2 - 2)/(1+s^2)^3.
    auto fn = SampledFunction::tabulate({-5.0, 5.0, 801},
                                        [](double s) { return 16.0 / (16.0 + 16.0 * s * s); });
    auto d = num::diff(fn, 2);
    CHECK(sup_diff(d, [](double s) {
              const double q = 1.0 + s * s;
              return (6.0 * s * s - 2.0) / (q * q * q);
          }) < 1e-8);
}

TEST_CASE("diff: error paths") {
    SampledFunction shorty(Grid1D{0.0, 1.0, 6}, std::vector<double>(6, 1.0));
    CHECK_THROWS_WITH(num::diff(shorty, 3), "insufficient samples");

    std::vector<double> bad(64, 0.0);
    bad[10] = std::nan("");
    SampledFunction nanfn(Grid1D{0.0, 1.0, 64}, bad);
    CHECK_THROWS_WITH(num::diff(nanfn, 1), "invalid samples");
}

TEST_CASE("quadrature: constant and cosine") {
    auto one = SampledFunction::tabulate({0.0, 2.0, 401}, [](double) { return 1.0; });
    auto q1 = num::quadrature(one);
    CHECK(std::abs(q1.values.back() - 2.0) < 1e-13);
    CHECK(q1.values.front() == 0.0);

    auto c = SampledFunction::tabulate({0.0, M_PI / 2, 401}, [](double s) { return std::cos(s); });
    auto q2 = num::quadrature(c);
    CHECK(sup_diff(q2, [](double s) { return std::sin(s); }) < 1e-9);
}

TEST_CASE("quadrature: arc-length integrand of the flat-case profile") {
    // x'(s) = 4/sqrt(16 + C3^2 s^2); integral of sqrt(1-x'^2) from 0 is
    // sqrt(16 + C3^2 s^2)/C3 - 4/C3.
    const double C3 = 4.0;
    auto integrand = SampledFunction::tabulate({0.0, 5.0, 801}, [&](double s) {
        const double xp = 4.0 / std::sqrt(16.0 + C3 * C3 * s * s);
        return std::sqrt(1.0 - xp * xp);
    });
    auto q = num::quadrature(integrand);
    CHECK(sup_diff(q, [&](double s) {
              return std::sqrt(16.0 + C3 * C3 * s * s) / C3 - 4.0 / C3;
          }) < 1e-7);
}

TEST_CASE("integrate_ode: exponential growth") {
    auto traj = num::integrate_ode(
        [](double, std::span<const double> y, std::span<double> dy) { dy[0] = y[0]; }, {1.0},
        {0.0, 1.0, 101}, 1e-10);
    CHECK(std::abs(traj.states.back()[0] - std::exp(1.0)) < 1e-9);
}

TEST_CASE("integrate_ode: sphere weight equation is self-consistent under diff") {
    // f'' + (2cos 2r - 4)/sin 2r f' + (1 + 2 sin^2 r)/sin^2 r f = 0
    auto rhs = [](double r, std::span<const double> y, std::span<double> dy) {
        const double p = (2.0 * std::cos(2.0 * r) - 4.0) / std::sin(2.0 * r);
        const double q = (1.0 + 2.0 * std::sin(r) * std::sin(r)) / (std::sin(r) * std::sin(r));
        dy[0] = y[1];
        dy[1] = -p * y[1] - q * y[0];
    };
    Grid1D grid{0.3, 1.2, 801};
    auto traj = num::integrate_ode(rhs, {1.0, 0.0}, grid, 1e-10);
    auto f = traj.component(0);
    auto f1 = num::diff(f, 1);
    auto f2 = num::diff(f, 2);
    double sup = 0.0;
    for (std::size_t i = 5; i + 5 < grid.count; ++i) {
        const double r = grid.node(i);
        const double p = (2.0 * std::cos(2.0 * r) - 4.0) / std::sin(2.0 * r);
        const double q = (1.0 + 2.0 * std::sin(r) * std::sin(r)) / (std::sin(r) * std::sin(r));
        sup = std::max(sup, std::abs(f2.values[i] + p * f1.values[i] + q * f.values[i]));
    }
    CHECK(sup < 1e-6);
}

TEST_CASE("integrate_ode: planar profile ODE keeps |x'| <= 1") {
    const double C3 = 4.0;
    auto rhs = [&](double s, std::span<const double> y, std::span<double> dy) {
        const double k = 4.0 * C3 / (16.0 + C3 * C3 * s * s);
        dy[0] = y[1];
        dy[1] = -k * std::sqrt(std::max(0.0, 1.0 - y[1] * y[1]));
    };
    auto traj = num::integrate_ode(rhs, {0.0, 1.0}, {0.0, 2.0, 401}, 1e-10);
    for (const auto& st : traj.states) CHECK(st[1] * st[1] <= 1.0 + 1e-12);
}

TEST_CASE("integrate_ode: stall near a blow-up") {
    CHECK_THROWS_AS(num::integrate_ode([](double, std::span<const double> y,
                                          std::span<double> dy) { dy[0] = y[0] * y[0]; },
                                       {1.0}, {0.0, 2.0, 11}, 1e-8),
                    std::runtime_error);
}

TEST_CASE("property: diff twice agrees with diff order 2") {
    auto fn = SampledFunction::tabulate({0.0, M_PI, 801}, [](double s) { return std::sin(s); });
    auto d11 = num::diff(num::diff(fn, 1), 1);
    auto d2 = num::diff(fn, 2);
    double interior = 0.0;
    for (std::size_t i = 5; i + 5 < fn.grid.count; ++i)
        interior = std::max(interior, std::abs(d11.values[i] - d2.values[i]));
    CHECK(interior < 1e-8);
}

TEST_CASE("property: quadrature of diff recovers the function") {
    auto fn = SampledFunction::tabulate({0.0, 2.0, 501}, [](double s) { return std::exp(s); });
    auto rec = num::quadrature(num::diff(fn, 1));
    double sup = 0.0;
    for (std::size_t i = 0; i < fn.grid.count; ++i)
        sup = std::max(sup, std::abs(rec.values[i] - (fn.values[i] - fn.values[0])));
    CHECK(sup < 1e-8);
}

TEST_CASE("property: ode error drops at least 8x when tol drops 16x") {
    auto rhs = [](double s, std::span<const double> y, std::span<double> dy) {
        dy[0] = 10.0 * std::cos(s) * y[0];
    };
    auto run = [&](double tol) {
        auto traj = num::integrate_ode(rhs, {1.0}, {0.0, 2.0, 5}, tol);
        return std::abs(traj.states.back()[0] - std::exp(10.0 * std::sin(2.0)));
    };
    const double e1 = run(1e-5);
    const double e2 = run(1e-5 / 16.0);
    CHECK(e1 / e2 >= 8.0);
}
