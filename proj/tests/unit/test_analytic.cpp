#include <doctest.h>

#include <cmath>

#include "../oracles.hpp"
#include "qdetect/analytic.hpp"
#include "qdetect/darkbright.hpp"
#include "qdetect/philox.hpp"

using namespace qdetect;

namespace {

const SiteWindow kWindow(6, 3);
const AllToAllModel kModel(6, 1.0);

StateVector random_bright(const SiteWindow& w, PhiloxStream& rng)
{
    CVector v = CVector::Zero(w.n_sites());
    for (const auto& b : bright_basis_all_to_all(w).bright_basis) {
        const double re = rng.normal();
        v += Complex(re, rng.normal()) * b.amplitudes();
    }
    return StateVector::unnormalized(v).normalize();
}

// Bright state with a large imaginary cross term between c_A and c_{A⊥}.
StateVector phase_state(const SiteWindow& w)
{
    CVector v = special_state(w).amplitudes();
    v(w.n_sites() - 1) = Complex(0.0, 1.0);
    return StateVector::unnormalized(v).normalize();
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("coefficients of reference states")
{
    const auto star = coefficients(special_state(kWindow), kWindow);
    CHECK(std::abs(star.c_target) < 1e-15);
    CHECK(std::norm(star.c_complement) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(std::abs(star.a3) < 1e-15);
    CHECK(star.a1 == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(star.a2 == doctest::Approx(0.5).epsilon(1e-14));

    const auto local = coefficients(StateVector::site(6, 6), kWindow);
    CHECK(local.c_complement == Complex(0.0));
    CHECK(local.a1 == doctest::Approx(-local.a2).epsilon(1e-14));

    CHECK_THROWS_AS(coefficients(zero_mode(6, 1), kWindow), std::invalid_argument);
    CHECK_NOTHROW(coefficients(zero_mode(6, 1), kWindow, false));
    CHECK_THROWS_AS(coefficients(StateVector::unnormalized(uniform_state(6).amplitudes() * 2.0), kWindow),
                    std::invalid_argument);
}

TEST_CASE("coefficient sum rule on random bright states")
{
    PhiloxStream rng(1, 100);
    for (int k = 0; k < 100; ++k) {
        const int n = 2 + int(rng.uniform() * 10);
        const SiteWindow w(n, 1 + int(rng.uniform() * (n - 1)));
        const auto c = coefficients(random_bright(w, rng), w);
        CHECK(std::abs(c.a1 + c.a2 - std::norm(c.c_complement) / w.cut()) <= 1e-12);
        CHECK(c.a3 == doctest::Approx(2.0 / n * std::imag(c.c_complement * std::conj(c.c_target))));
    }
}

TEST_CASE("survival Laplace transform agrees with the averaged density-matrix oracle")
{
    PhiloxStream rng(2, 0);
    for (int k = 0; k < 40; ++k) {
        const int n = 2 + int(rng.uniform() * 6);
        const SiteWindow w(n, 1 + int(rng.uniform() * (n - 1)));
        const double j = (k % 2 ? -1.0 : 1.0) * (0.3 + 2.0 * rng.uniform());
        const AllToAllModel model(n, j);
        const StateVector psi = k % 3 == 0 ? phase_state(w) : random_bright(w, rng);
        const auto c = coefficients(psi, w);
        const double r = std::exp(std::log(0.05) + rng.uniform() * std::log(400.0));
        for (double s : {0.0, 0.3 * r, 2.0}) {
            const double exact = oracle::survival_laplace(model.hamiltonian(), w.cut(), r, s, psi.amplitudes());
            CHECK(rel(survival_laplace(c, r, s, model, w), exact) < 1e-9);
        }
    }
}

TEST_CASE("uniform initial state reduces to the geometric-series form")
{
    const auto c = coefficients(uniform_state(6), kWindow);
    for (double r : {0.2, 1.0, 7.0}) {
        for (double s : {0.0, 0.5, 3.0}) {
            const double big_r = r + s;
            const double factor = big_r * (36.0 + big_r * big_r) / (2.0 * 3.0 * 3.0 * r + 36.0 * s + s * big_r * big_r);
            const double expected = (1.0 + 0.5 * (r / big_r) * factor) / big_r;
            CHECK(rel(survival_laplace(c, r, s, kModel, kWindow), expected) < 1e-13);
        }
    }
}

TEST_CASE("mean first detection time")
{
    const auto star = coefficients(special_state(kWindow), kWindow);
    CHECK(mfdt(star, 1.0, kModel, kWindow) == doctest::Approx(37.0 / 18.0).epsilon(1e-14));
    PhiloxStream rng(3, 0);
    for (int k = 0; k < 20; ++k) {
        const auto c = coefficients(random_bright(kWindow, rng), kWindow);
        const double r = 0.1 + 10.0 * rng.uniform();
        CHECK(mfdt(c, r, kModel, kWindow) == survival_laplace(c, r, 0.0, kModel, kWindow));
    }
    CHECK_THROWS_AS(mfdt(star, 0.0, kModel, kWindow), std::invalid_argument);
}

TEST_CASE("rate asymptotics of the mean detection time")
{
    const auto local = coefficients(StateVector::site(6, 6), kWindow);
    // c_{A⊥} = 0: T ~ 1/r at large r
    CHECK(rel(1e4 * mfdt(local, 1e4, kModel, kWindow), 1e3 * mfdt(local, 1e3, kModel, kWindow)) < 1e-3);
    const auto star = coefficients(special_state(kWindow), kWindow);
    // otherwise T ~ r at large r
    CHECK(rel(mfdt(star, 1e4, kModel, kWindow) / 1e4, mfdt(star, 1e3, kModel, kWindow) / 1e3) < 1e-2);
    // small r: r·T → 1 + a1·N²/(2m(N−m))
    for (const auto& c : {star, local}) {
        const double limit = 1.0 + c.a1 * 36.0 / 18.0;
        CHECK(rel(1e-6 * mfdt(c, 1e-6, kModel, kWindow), limit) < 1e-5);
    }
}

TEST_CASE("optimal rate")
{
    const auto star = coefficients(special_state(kWindow), kWindow);
    REQUIRE(optimal_rate(star, kModel, kWindow));
    CHECK(*optimal_rate(star, kModel, kWindow) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK_FALSE(optimal_rate(coefficients(StateVector::site(6, 6), kWindow), kModel, kWindow));

    PhiloxStream rng(4, 0);
    for (int k = 0; k < 100; ++k) {
        const auto c = coefficients(random_bright(kWindow, rng), kWindow);
        const auto r_star = optimal_rate(c, kModel, kWindow);
        REQUIRE(r_star);
        const auto t_of_log = [&](double x) { return mfdt(c, std::exp(x), kModel, kWindow); };
        // coarse log grid, then golden section around the best node
        double best = -6.0;
        for (double x = -6.0; x <= 8.0; x += 0.05) {
            if (t_of_log(x) < t_of_log(best)) best = x;
        }
        const double numeric = std::exp(oracle::golden_section(t_of_log, best - 0.05, best + 0.05, 1e-13));
        CHECK(rel(numeric, *r_star) < 1e-6);
        // a genuine minimum, not just a stationary point
        for (double f : {0.5, 0.9, 1.1, 2.0}) CHECK(mfdt(c, f * *r_star, kModel, kWindow) > mfdt(c, *r_star, kModel, kWindow));
    }
}

TEST_CASE("first detection generating function")
{
    PhiloxStream rng(5, 0);
    for (int k = 0; k < 20; ++k) {
        const StateVector psi = k == 0 ? phase_state(kWindow) : random_bright(kWindow, rng);
        const auto c = coefficients(psi, kWindow);
        const double r = 0.1 + 5.0 * rng.uniform();
        CHECK(first_detection_laplace(c, r, 0.0, kModel, kWindow) == doctest::Approx(1.0).epsilon(1e-14));
        for (double s : {0.1, 1.0, 10.0}) {
            const double via_survival = 1.0 - s * survival_laplace(c, r, s, kModel, kWindow);
            CHECK(std::abs(first_detection_laplace(c, r, s, kModel, kWindow) - via_survival) < 1e-12);
        }
        // large-s expansion coefficients
        const double jn = 6.0;
        const double c1 = r * (1.0 - c.a1 - c.a2);
        const double c2 = -c.a3 * jn * r + r * r * (c.a1 + c.a2 - 1.0);
        const double c3 = c.a2 * jn * jn * r + 2.0 * c.a3 * jn * r * r + r * r * r * (1.0 - c.a1 - c.a2);
        const double s = 1e6 * r;
        const double f = first_detection_laplace(c, r, s, kModel, kWindow);
        CHECK(rel(s * f, c1) < 1e-4);
        const double scale2 = r * r + r * jn;
        CHECK(std::abs((s * f - c1) * s - c3 / s - c2) < 1e-4 * scale2);
        const double s_mid = 1e3 * r;
        const double f_mid = first_detection_laplace(c, r, s_mid, kModel, kWindow);
        const double scale3 = r * jn * jn + r * r * jn + r * r * r;
        CHECK(std::abs(((s_mid * f_mid - c1) * s_mid - c2) * s_mid - c3) < 1e-2 * scale3);
    }
    const auto star = coefficients(special_state(kWindow), kWindow);
    const double r = 1.0;
    const double s = 1e4;
    const double f = first_detection_laplace(star, r, s, kModel, kWindow);
    // leading 1/s and 1/s² terms vanish; the 1/s³ term is a2·J²N²·r
    CHECK(rel(f * s * s * s, star.a2 * 36.0 * r) < 1e-3);
}

TEST_CASE("cubic roots for N=6, m=3, J=1, r=1")
{
    const CubicRoots roots = cubic_roots(1.0, kModel, kWindow);
    CHECK(roots.q_coefficients == std::array<double, 4>{18.0, 37.0, 2.0, 1.0});
    const auto q = [](double s) { return ((s + 2.0) * s + 37.0) * s + 18.0; };
    const double s1 = oracle::bisect(q, -2.0 / 3.0, 0.0);
    CHECK(roots.s1 == doctest::Approx(s1).epsilon(1e-13));
    CHECK(roots.s1 == doctest::Approx(-0.49651).epsilon(1e-5));
    CHECK(roots.pole == -1.0);
    CHECK(roots.discriminant > 0.0);
    CHECK(decay_timescale(1.0, kModel, kWindow) == doctest::Approx(1.0 / std::abs(s1)).epsilon(1e-13));
    CHECK(decay_timescale(1.0, kModel, kWindow) == doctest::Approx(2.014).epsilon(1e-3));
}

TEST_CASE("root certificates over random parameters")
{
    PhiloxStream rng(6, 0);
    for (int k = 0; k < 1000; ++k) {
        const int n = 2 + int(rng.uniform() * 49);
        const int m = 1 + int(rng.uniform() * (n - 1));
        const double j = 0.1 + 9.9 * rng.uniform();
        const double r = std::exp(std::log(1e-3) + rng.uniform() * std::log(1e6));
        const AllToAllModel model(n, j);
        const SiteWindow w(n, m);
        const CubicRoots roots = cubic_roots(r, model, w);
        CHECK(routh_hurwitz_stable(roots.q_coefficients));
        CHECK(roots.s1 < 0.0);
        CHECK(roots.s1 > -r);
        CHECK(roots.s_real < roots.s1);
        CHECK(roots.s_imag > 0.0);
        const auto& a = roots.q_coefficients;
        const double max_coef = std::max({a[0], a[1], a[2], 1.0});
        for (Complex s : {Complex(roots.s1), roots.s2()}) {
            const double scale = std::pow(std::abs(s), 3) + a[2] * std::norm(s) + a[1] * std::abs(s) + a[0];
            CHECK(std::abs(evaluate_cubic(roots, s)) / scale <= 1e-9);
            (void)max_coef;
        }
        // (s − s1)(s − s2)(s − s2*) expands back to Q
        const Complex s2 = roots.s2();
        const double e2 = -(roots.s1 + 2.0 * s2.real());
        const double e1 = 2.0 * roots.s1 * s2.real() + std::norm(s2);
        const double e0 = -roots.s1 * std::norm(s2);
        CHECK(std::abs(e2 - a[2]) <= 1e-9 * std::max(1.0, a[2]));
        CHECK(std::abs(e1 - a[1]) <= 1e-9 * a[1]);
        CHECK(std::abs(e0 - a[0]) <= 1e-9 * a[0]);
    }
}

TEST_CASE("Routh-Hurwitz predicate")
{
    CHECK(routh_hurwitz_stable({1.0, 3.0, 3.0, 1.0}));  // (s+1)³
    CHECK_FALSE(routh_hurwitz_stable({-1.0, 3.0, 3.0, 1.0}));
    CHECK_FALSE(routh_hurwitz_stable({10.0, 1.0, 1.0, 1.0}));  // a2·a1 < a0
}

TEST_CASE("first detection density against the density-matrix oracle")
{
    PhiloxStream rng(7, 0);
    for (int k = 0; k < 8; ++k) {
        const int n = 3 + k % 4;
        const SiteWindow w(n, 1 + k % (n - 1));
        const double j = k % 2 ? -1.3 : 0.7;
        const AllToAllModel model(n, j);
        const StateVector psi = k % 2 ? phase_state(w) : random_bright(w, rng);
        const auto c = coefficients(psi, w);
        const double r = 0.3 + 3.0 * rng.uniform();
        const std::vector<double> grid = {0.0, 0.05, 0.4, 1.3, 4.0};
        const auto curve = first_detection_density(c, r, model, w, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double exact = oracle::detection_density(model.hamiltonian(), w.cut(), r, grid[i], psi.amplitudes());
            CHECK(std::abs(curve.values[i] - exact) < 1e-9 * std::max(1.0, std::abs(exact)));
        }
    }
}

TEST_CASE("first detection density normalization and moments")
{
    PhiloxStream rng(8, 0);
    for (int k = 0; k < 30; ++k) {
        const StateVector psi = k == 0 ? special_state(kWindow) : random_bright(kWindow, rng);
        const auto c = coefficients(psi, kWindow);
        for (double r : {0.3, 3.0, 30.0}) {
            const std::vector<double> grid;
            const auto curve = first_detection_density(c, r, kModel, kWindow, grid);
            CHECK(std::abs(curve.total_probability() - 1.0) <= 1e-6);
            CHECK(rel(curve.mean_time(), mfdt(c, r, kModel, kWindow)) <= 1e-5);
            for (double t : {0.0, 0.01, 0.5, 3.0, 20.0}) CHECK(std::abs(curve.evaluate_complex(t).imag()) <= 1e-10);
            CHECK(curve.warnings.empty());
        }
    }
}

TEST_CASE("numerical Laplace transform of the density")
{
    const StateVector psi = phase_state(kWindow);
    const auto c = coefficients(psi, kWindow);
    const double r = 1.5;
    const std::vector<double> grid;
    const auto curve = first_detection_density(c, r, kModel, kWindow, grid);
    const double horizon = 60.0 * curve.decay_timescale;
    for (double f : {0.5, 1.0, 2.0}) {
        const double s = f * r;
        const double numeric = oracle::simpson([&](double t) { return std::exp(-s * t) * curve.evaluate(t); }, 0.0,
                                               horizon, 200000);
        CHECK(rel(numeric, first_detection_laplace(c, r, s, kModel, kWindow)) < 1e-5);
        CHECK(rel(curve.laplace(s), first_detection_laplace(c, r, s, kModel, kWindow)) < 1e-10);
    }
    const double cum = oracle::simpson([&](double t) { return curve.evaluate(t); }, 0.0, 2.5, 20000);
    CHECK(std::abs(curve.cumulative(2.5) - cum) < 1e-10);
}

TEST_CASE("short-time behaviour of the density")
{
    const double r = 1.0;
    const std::vector<double> grid = {1e-3, 1e-2};
    const auto star = coefficients(special_state(kWindow), kWindow);
    const auto curve = first_detection_density(star, r, kModel, kWindow, grid);
    const double slope = std::log(curve.values[1] / curve.values[0]) / std::log(10.0);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.05));
    // F/t² → a2·J²N²·r/2 = J²·m(N−m)·r for ψ*
    CHECK(curve.evaluate(1e-5) / 1e-10 == doctest::Approx(9.0).epsilon(1e-3));

    PhiloxStream rng(9, 0);
    const auto generic = coefficients(random_bright(kWindow, rng), kWindow);
    const auto g = first_detection_density(generic, r, kModel, kWindow, grid);
    CHECK(std::abs(std::log(g.values[1] / g.values[0]) / std::log(10.0)) < 0.1);
    CHECK(g.evaluate(0.0) == doctest::Approx(r * (1.0 - generic.a1 - generic.a2)).epsilon(1e-10));
    CHECK(g.evaluate(0.0) > 0.0);
}

TEST_CASE("decay timescale")
{
    const double r_m = decay_timescale_minimizer(kModel, kWindow);
    CHECK(r_m > 0.01);
    CHECK(r_m < 100.0);
    for (double f : {0.5, 0.9, 1.1, 2.0}) {
        CHECK(decay_timescale(f * r_m, kModel, kWindow) > decay_timescale(r_m, kModel, kWindow));
    }
    CHECK(std::abs(r_m - 6.0) > 0.1);
    // independent of the initial state
    const std::vector<double> grid;
    const auto a = first_detection_density(coefficients(special_state(kWindow), kWindow), 2.0, kModel, kWindow, grid);
    const auto b = first_detection_density(coefficients(StateVector::site(6, 6), kWindow), 2.0, kModel, kWindow, grid);
    CHECK(a.decay_timescale == b.decay_timescale);
}

TEST_CASE("short-time classification")
{
    CHECK(short_time_class(special_state(kWindow), kWindow) == ShortTimeClass::quadratic);
    PhiloxStream rng(10, 0);
    for (int k = 0; k < 10; ++k) {
        const Complex phase = std::polar(1.0, 6.283 * rng.uniform());
        const StateVector rotated = StateVector::normalized(phase * special_state(kWindow).amplitudes());
        CHECK(short_time_class(rotated, kWindow) == ShortTimeClass::quadratic);
    }
    CHECK(short_time_class(StateVector::site(6, 6), kWindow) == ShortTimeClass::constant);
    CHECK(short_time_class(random_bright(kWindow, rng), kWindow) == ShortTimeClass::constant);
}

TEST_CASE("overlap sum rules")
{
    const auto uni = overlap_sum_rules(uniform_state(6), kWindow);
    CHECK(std::abs(uni.overlap_uniform_direct - 1.0) < 1e-14);
    CHECK(std::abs(uni.weighted_zero_modes_direct) < 1e-14);
    const auto star = overlap_sum_rules(special_state(kWindow), kWindow);
    CHECK(std::abs(star.overlap_uniform_closed - std::sqrt(0.5)) < 1e-14);
    PhiloxStream rng(11, 0);
    for (int k = 0; k < 100; ++k) {
        CVector v(6);
        for (int x = 0; x < 6; ++x) {
            const double re = rng.normal();
            v(x) = Complex(re, rng.normal());
        }
        const auto rules = overlap_sum_rules(StateVector::unnormalized(v).normalize(), kWindow);
        CHECK(std::abs(rules.overlap_uniform_direct - rules.overlap_uniform_closed) <= 1e-12);
        CHECK(std::abs(rules.weighted_zero_modes_direct - rules.weighted_zero_modes_closed) <= 1e-12);
    }
}

TEST_CASE("results scale with the coupling")
{
    const double k = 2.5;
    const AllToAllModel scaled(6, k);
    PhiloxStream rng(12, 0);
    const auto c = coefficients(random_bright(kWindow, rng), kWindow);
    const double r = 0.7;
    CHECK(rel(mfdt(c, k * r, scaled, kWindow), mfdt(c, r, kModel, kWindow) / k) < 1e-13);
    CHECK(rel(survival_laplace(c, k * r, k * 0.4, scaled, kWindow), survival_laplace(c, r, 0.4, kModel, kWindow) / k) <
          1e-13);
    CHECK(rel(cubic_roots(k * r, scaled, kWindow).s1, k * cubic_roots(r, kModel, kWindow).s1) < 1e-13);
}
