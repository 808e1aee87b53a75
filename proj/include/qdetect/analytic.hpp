#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdetect/core_state.hpp"
#include "qdetect/spectral.hpp"

namespace qdetect {

// Closed forms for Poissonian measurements at rate r on the all-to-all model
// with target A = [m+1, N]. The initial state enters only through
// c_A = Σ_{x∈A} ψ₀(x), c_{A⊥} = Σ_{x∈A⊥} ψ₀(x) and the derived a1, a2, a3:
//
//   Ŝ(s) = 1/(r+s) · {1 + G(s)·[a1·r/(r+s) + a2·C(s) + a3·S(s)]}
//   G(s) = (r+s)(J²N² + (r+s)²) / (J²(2mNr − 2m²r + N²s) + s(r+s)²)
//   C(s) = r(r+s)/((r+s)² + J²N²),  S(s) = rJN/((r+s)² + J²N²)
//
// Internally every rate is measured in units of |J| and every time in 1/|J|.

struct StateCoefficients {
    Complex c_target;      // c_A
    Complex c_complement;  // c_{A⊥}
    double a1;
    double a2;
    double a3;
};

/// Computes c_A, c_{A⊥} and a1, a2, a3 and checks a1 + a2 = |c_{A⊥}|²/m.
/// a3 = (2/N)·Im(c_{A⊥}·c_A*). Throws std::logic_error if the sum rule fails.
/// Throws std::invalid_argument for an unnormalized state, or, with
/// `require_bright`, for a state with a dark component above 1e-9.
StateCoefficients coefficients(const StateVector& psi0, const SiteWindow& window, bool require_bright = true);

/// Laplace transform of the survival probability.
double survival_laplace(const StateCoefficients& c, double r, double s, const AllToAllModel& model,
                        const SiteWindow& window);

/// Mean first detection time T(r) = Ŝ(0).
double mfdt(const StateCoefficients& c, double r, const AllToAllModel& model, const SiteWindow& window);

/// argmin_r T(r) = √m·|J|·√(N²a1 + 2m(N−m)) / |c_{A⊥}|; nullopt when c_{A⊥} = 0.
/// Throws std::domain_error on a negative radicand.
std::optional<double> optimal_rate(const StateCoefficients& c, const AllToAllModel& model, const SiteWindow& window);

/// Laplace transform of the first-detection density, F̂(s) = 1 − s·Ŝ(s).
double first_detection_laplace(const StateCoefficients& c, double r, double s, const AllToAllModel& model,
                               const SiteWindow& window);

/// Roots of Q(s) = s³ + 2r s² + (J²N² + r²) s + 2J²m r (N−m), via the
/// depressed cubic z³ + p z + q with s = z − 2r/3.
struct CubicRoots {
    double s1;       // real root
    double s_real;   // Re s2
    double s_imag;   // Im s2 > 0
    double pole;     // −r
    double p;
    double q;
    double discriminant;  // (p/3)³ + (q/2)²
    std::array<double, 4> q_coefficients;  // a0, a1, a2, 1 (ascending powers)

    Complex s2() const { return {s_real, s_imag}; }
};

/// Throws std::runtime_error if Δ ≤ 0, a Routh–Hurwitz inequality fails,
/// or the ordering s_R < s1 < 0, −r < s1 is violated.
CubicRoots cubic_roots(double r, const AllToAllModel& model, const SiteWindow& window);

/// Routh–Hurwitz inequalities for s³ + a2 s² + a1 s + a0.
bool routh_hurwitz_stable(const std::array<double, 4>& ascending);

/// Q evaluated at complex s.
Complex evaluate_cubic(const CubicRoots& roots, Complex s);

struct FirstDetectionCurve {
    std::vector<double> grid;
    std::vector<double> values;
    double decay_timescale;  // t_m = 1/|s1|
    /// F(t) = Σ_k weights[k]·e^{poles[k]·t}, poles = {−r, s1, s2, s2*}.
    std::array<Complex, 4> residue_weights;
    std::array<Complex, 4> poles;
    std::vector<std::string> warnings;

    /// Σ_k w_k e^{p_k t}; the imaginary part is a consistency check.
    Complex evaluate_complex(double t) const;
    double evaluate(double t) const { return evaluate_complex(t).real(); }
    /// ∫₀^∞ F dt
    double total_probability() const;
    /// ∫₀^∞ t F dt
    double mean_time() const;
    /// ∫₀^t F dt
    double cumulative(double t) const;
    /// ∫₀^∞ e^{−st} F dt
    double laplace(double s) const;
};

/// Four-pole residue inversion of F̂(s) evaluated on `grid`.
FirstDetectionCurve first_detection_density(const StateCoefficients& c, double r, const AllToAllModel& model,
                                            const SiteWindow& window, std::span<const double> grid);

/// t_m(r) = 1/|s1(r)|
double decay_timescale(double r, const AllToAllModel& model, const SiteWindow& window);

/// Rate minimizing t_m(r), located by Brent's method on log r.
double decay_timescale_minimizer(const AllToAllModel& model, const SiteWindow& window);

enum class ShortTimeClass { constant, quadratic };

/// quadratic iff |c_{A⊥}|² = m to 1e-10, i.e. ψ₀ = ψ* up to a phase.
ShortTimeClass short_time_class(const StateVector& psi0, const SiteWindow& window);

struct SumRules {
    Complex overlap_uniform_direct;       // ⟨N|ψ₀⟩
    Complex overlap_uniform_closed;       // (c_{A⊥} + c_A)/√N
    Complex weighted_zero_modes_direct;   // Σ_{l=m}^{N−1} C_l ⟨0,l|ψ₀⟩
    Complex weighted_zero_modes_closed;   // c_A/N − c_{A⊥}(N−m)/(Nm)
};

/// Evaluates both overlap identities by direct inner products and in closed
/// form. Throws std::logic_error if the routes differ by more than 1e-12.
SumRules overlap_sum_rules(const StateVector& psi0, const SiteWindow& window);

}  // namespace qdetect
