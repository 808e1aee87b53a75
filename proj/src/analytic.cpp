#include "qdetect/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

namespace qdetect {

namespace {

// Model parameters in units of |J|: rates r̃ = r/|J|, and JN → σN with σ = sign J.
struct Scaled {
    double scale;  // |J|
    double n;
    double m;
    double jn;  // σ·N

    Scaled(const AllToAllModel& model, const SiteWindow& window)
        : scale(std::abs(model.coupling())),
          n(window.n_sites()),
          m(window.cut()),
          jn(model.coupling() > 0 ? double(window.n_sites()) : -double(window.n_sites()))
    {
        if (model.n_sites() != window.n_sites()) {
            throw std::invalid_argument("model and window have different numbers of sites");
        }
    }

    double coupling_term() const { return 2.0 * m * (n - m); }  // 2m(N−m)
};

void require_rate(double r)
{
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("measurement rate must be positive");
}

// Numerator polynomial of the rational part of F̂, dimensionless.
Complex numerator(const StateCoefficients& c, const Scaled& k, double r, Complex s)
{
    const Complex big_r = r + s;
    return s * r * (c.a1 * (k.n * k.n + big_r * big_r) + big_r * (c.a3 * k.jn + c.a2 * big_r));
}

struct DimensionlessRoots {
    double s1, s_real, s_imag, p, q, discriminant;
};

DimensionlessRoots solve_cubic(double r, const Scaled& k)
{
    const double n2 = k.n * k.n;
    const double p = n2 - r * r / 3.0;
    const double q = -2.0 * k.m * k.m * r + 2.0 * k.m * k.n * r - (2.0 / 3.0) * n2 * r - 2.0 * r * r * r / 27.0;
    const double disc = std::pow(p / 3.0, 3) + (q / 2.0) * (q / 2.0);
    if (!(disc > 0.0)) {
        throw std::runtime_error("cubic discriminant is not positive (numerical corruption)");
    }
    const double half = -q / 2.0;
    const double root = std::sqrt(disc);
    // u takes the radicand of larger magnitude; u·v = −p/3 fixes the other.
    const double big = half + std::copysign(root, half);
    double u = std::cbrt(big);
    double v = u != 0.0 ? -p / (3.0 * u) : std::cbrt(half - std::copysign(root, half));
    const double z1 = u + v;
    const double z_imag = std::abs(std::sqrt(3.0) / 2.0 * (u - v));
    return {z1 - 2.0 * r / 3.0, -0.5 * z1 - 2.0 * r / 3.0, z_imag, p, q, disc};
}

}  // namespace

StateCoefficients coefficients(const StateVector& psi0, const SiteWindow& window, bool require_bright)
{
    if (!psi0.is_normalized()) throw std::invalid_argument("coefficients: initial state must be normalized");
    if (psi0.dim() != window.n_sites()) throw std::invalid_argument("coefficients: dimension mismatch");
    const int n_sites = window.n_sites();
    if (require_bright) {
        double dark = 0.0;
        for (int l = 1; l < window.cut(); ++l) dark += std::norm(zero_mode(n_sites, l).overlap(psi0));
        if (std::sqrt(dark) > 1e-9) {
            throw std::invalid_argument("coefficients: initial state has a dark component");
        }
    }
    const WindowSums sums = window_sums(psi0, window);
    const Complex ca = sums.target;
    const Complex cp = sums.complement;
    const double n = n_sites;
    const double m = window.cut();
    const double k = (n - m) / m;
    const double pref = m / (n * n);
    const double cross = std::real(ca * std::conj(cp));

    StateCoefficients out{ca, cp, 0.0, 0.0, 0.0};
    out.a1 = pref * (2.0 * std::norm(ca) + std::norm(cp) * (1.0 + k * k) + 2.0 * cross * (1.0 - k));
    out.a2 = -2.0 * pref * (std::norm(ca) - std::norm(cp) * k) - 2.0 * pref * cross * (1.0 - k);
    // Average of e^{−iNJτ} is cos − i·sin; that sets the sign here.
    out.a3 = -2.0 * pref * std::imag(std::conj(cp) * ca) * (1.0 + k);

    const double rule = std::norm(cp) / m;
    if (std::abs(out.a1 + out.a2 - rule) > 1e-10) {
        throw std::logic_error("coefficient sum rule a1 + a2 = |c_perp|^2/m violated");
    }
    return out;
}

double survival_laplace(const StateCoefficients& c, double r, double s, const AllToAllModel& model,
                        const SiteWindow& window)
{
    require_rate(r);
    if (s < 0.0) throw std::invalid_argument("survival_laplace: s must be non-negative");
    const Scaled k(model, window);
    const double rr = r / k.scale;
    const double ss = s / k.scale;
    const double big_r = rr + ss;
    const double n2 = k.n * k.n;
    const double gain = big_r * (n2 + big_r * big_r) / (k.coupling_term() * rr + n2 * ss + ss * big_r * big_r);
    const double osc = big_r * big_r + n2;
    const double bracket = c.a1 * rr / big_r + c.a2 * rr * big_r / osc + c.a3 * rr * k.jn / osc;
    return (1.0 + gain * bracket) / big_r / k.scale;
}

double mfdt(const StateCoefficients& c, double r, const AllToAllModel& model, const SiteWindow& window)
{
    require_rate(r);
    const Scaled k(model, window);
    const double rr = r / k.scale;
    const double n2 = k.n * k.n;
    const double osc = rr * rr + n2;
    const double bracket = c.a1 + c.a2 * rr * rr / osc + c.a3 * rr * k.jn / osc;
    const double value = (1.0 + rr * osc / (k.coupling_term() * rr) * bracket) / rr;
    return value / k.scale;
}

std::optional<double> optimal_rate(const StateCoefficients& c, const AllToAllModel& model, const SiteWindow& window)
{
    const Scaled k(model, window);
    const double cp2 = std::norm(c.c_complement);
    if (cp2 <= 1e-24) return std::nullopt;
    const double radicand = k.n * k.n * c.a1 + k.coupling_term();
    if (radicand < 0.0) {
        throw std::domain_error("optimal rate: negative radicand, coefficients are inconsistent");
    }
    return std::sqrt(k.m) * std::sqrt(radicand) / std::sqrt(cp2) * k.scale;
}

double first_detection_laplace(const StateCoefficients& c, double r, double s, const AllToAllModel& model,
                               const SiteWindow& window)
{
    require_rate(r);
    if (s < 0.0) throw std::invalid_argument("first_detection_laplace: s must be non-negative");
    const Scaled k(model, window);
    const double rr = r / k.scale;
    const double ss = s / k.scale;
    const double big_r = rr + ss;
    const double n2 = k.n * k.n;
    const double num = rr * ss * (c.a1 * (n2 + big_r * big_r) + big_r * (c.a3 * k.jn + c.a2 * big_r));
    const double den = big_r * (k.coupling_term() * rr + n2 * ss + ss * big_r * big_r);
    return 1.0 - ss / big_r - num / den;
}

bool routh_hurwitz_stable(const std::array<double, 4>& a)
{
    return a[3] > 0.0 && a[2] > 0.0 && a[1] > 0.0 && a[0] > 0.0 && a[2] * a[1] - a[0] > 0.0;
}

CubicRoots cubic_roots(double r, const AllToAllModel& model, const SiteWindow& window)
{
    require_rate(r);
    const Scaled k(model, window);
    const double rr = r / k.scale;
    const DimensionlessRoots d = solve_cubic(rr, k);
    const double j2 = model.coupling() * model.coupling();
    const double n = k.n;
    const double m = k.m;

    CubicRoots out;
    out.s1 = d.s1 * k.scale;
    out.s_real = d.s_real * k.scale;
    out.s_imag = d.s_imag * k.scale;
    out.pole = -r;
    out.p = d.p * k.scale * k.scale;
    out.q = d.q * k.scale * k.scale * k.scale;
    out.discriminant = d.discriminant * std::pow(k.scale, 6);
    out.q_coefficients = {2.0 * j2 * m * r * (n - m), j2 * n * n + r * r, 2.0 * r, 1.0};

    if (!routh_hurwitz_stable(out.q_coefficients)) {
        throw std::runtime_error("Routh-Hurwitz inequalities violated");
    }
    if (!(d.s1 < 0.0 && d.s1 > -rr && d.s_real < d.s1 && d.s_imag > 0.0)) {
        throw std::runtime_error("cubic root ordering -r < s1 < 0, s_R < s1 violated");
    }
    return out;
}

Complex evaluate_cubic(const CubicRoots& roots, Complex s)
{
    const auto& a = roots.q_coefficients;
    return ((a[3] * s + a[2]) * s + a[1]) * s + a[0];
}

Complex FirstDetectionCurve::evaluate_complex(double t) const
{
    Complex acc = 0.0;
    for (std::size_t k = 0; k < poles.size(); ++k) acc += residue_weights[k] * std::exp(poles[k] * t);
    return acc;
}

double FirstDetectionCurve::total_probability() const
{
    Complex acc = 0.0;
    for (std::size_t k = 0; k < poles.size(); ++k) acc -= residue_weights[k] / poles[k];
    return acc.real();
}

double FirstDetectionCurve::mean_time() const
{
    Complex acc = 0.0;
    for (std::size_t k = 0; k < poles.size(); ++k) acc += residue_weights[k] / (poles[k] * poles[k]);
    return acc.real();
}

double FirstDetectionCurve::cumulative(double t) const
{
    Complex acc = 0.0;
    for (std::size_t k = 0; k < poles.size(); ++k) {
        const Complex growth = poles[k].imag() == 0.0 ? Complex(std::expm1(poles[k].real() * t))
                                                      : std::exp(poles[k] * t) - 1.0;
        acc += residue_weights[k] * growth / poles[k];
    }
    return acc.real();
}

double FirstDetectionCurve::laplace(double s) const
{
    Complex acc = 0.0;
    for (std::size_t k = 0; k < poles.size(); ++k) acc += residue_weights[k] / (s - poles[k]);
    return acc.real();
}

FirstDetectionCurve first_detection_density(const StateCoefficients& c, double r, const AllToAllModel& model,
                                            const SiteWindow& window, std::span<const double> grid)
{
    require_rate(r);
    const Scaled k(model, window);
    const double rr = r / k.scale;
    const DimensionlessRoots d = solve_cubic(rr, k);
    const CubicRoots roots = cubic_roots(r, model, window);

    const Complex s1 = d.s1;
    const Complex s2(d.s_real, d.s_imag);
    const Complex s3 = std::conj(s2);
    const Complex minus_r = -rr;
    const auto q_at = [&](Complex s) { return (s - s1) * (s - s2) * (s - s3); };

    // F̂ = r/(s+r) − P(s)/((s+r)Q(s)); residues at the four simple poles.
    std::array<Complex, 4> w;
    w[0] = rr - numerator(c, k, rr, minus_r) / q_at(minus_r);
    w[1] = -numerator(c, k, rr, s1) / ((s1 + rr) * (s1 - s2) * (s1 - s3));
    w[2] = -numerator(c, k, rr, s2) / ((s2 + rr) * (s2 - s1) * (s2 - s3));
    w[3] = std::conj(w[2]);

    FirstDetectionCurve out;
    out.poles = {minus_r * k.scale, s1 * k.scale, s2 * k.scale, s3 * k.scale};
    for (std::size_t i = 0; i < 4; ++i) out.residue_weights[i] = w[i] * k.scale;
    out.decay_timescale = 1.0 / std::abs(roots.s1);
    if (std::abs(d.s1 + rr) < 1e-8 * rr) {
        out.warnings.emplace_back("real root s1 nearly coincides with the pole at -r; residue formula is ill-conditioned");
    }
    if (d.s_imag < 1e-8 * rr) {
        out.warnings.emplace_back("complex roots nearly coincide; residue formula is ill-conditioned");
    }
    out.grid.assign(grid.begin(), grid.end());
    out.values.reserve(grid.size());
    for (double t : grid) {
        if (t < 0.0) throw std::invalid_argument("first_detection_density: negative time");
        out.values.push_back(out.evaluate(t));
    }
    return out;
}

double decay_timescale(double r, const AllToAllModel& model, const SiteWindow& window)
{
    return 1.0 / std::abs(cubic_roots(r, model, window).s1);
}

double decay_timescale_minimizer(const AllToAllModel& model, const SiteWindow& window)
{
    const double scale = std::abs(model.coupling());
    const auto objective = [&](double log_r) { return decay_timescale(scale * std::exp(log_r), model, window); };
    // coarse scan to bracket, then Brent
    double best = -12.0;
    double best_val = objective(best);
    for (double x = -12.0; x <= 12.0; x += 0.25) {
        const double v = objective(x);
        if (v < best_val) {
            best_val = v;
            best = x;
        }
    }
    const auto [x, fx] = boost::math::tools::brent_find_minima(objective, best - 0.25, best + 0.25, 50);
    (void)fx;
    return scale * std::exp(x);
}

ShortTimeClass short_time_class(const StateVector& psi0, const SiteWindow& window)
{
    const WindowSums sums = window_sums(psi0, window);
    return std::abs(std::norm(sums.complement) - window.cut()) <= 1e-10 ? ShortTimeClass::quadratic
                                                                         : ShortTimeClass::constant;
}

SumRules overlap_sum_rules(const StateVector& psi0, const SiteWindow& window)
{
    const int n_sites = window.n_sites();
    const int m = window.cut();
    const double n = n_sites;
    const WindowSums sums = window_sums(psi0, window);

    SumRules out;
    out.overlap_uniform_direct = uniform_state(n_sites).overlap(psi0);
    out.overlap_uniform_closed = (sums.complement + sums.target) / std::sqrt(n);
    Complex acc = 0.0;
    for (int l = m; l < n_sites; ++l) {
        acc += zero_mode(n_sites, l).overlap(psi0) / std::sqrt(double(l) * double(l + 1));
    }
    out.weighted_zero_modes_direct = acc;
    out.weighted_zero_modes_closed = sums.target / n - sums.complement * (n - m) / (n * m);

    const double tol = 1e-12 * std::max(1.0, psi0.norm());
    if (std::abs(out.overlap_uniform_direct - out.overlap_uniform_closed) > tol ||
        std::abs(out.weighted_zero_modes_direct - out.weighted_zero_modes_closed) > tol) {
        throw std::logic_error("overlap sum rules disagree between direct and closed-form routes");
    }
    return out;
}

}  // namespace qdetect
