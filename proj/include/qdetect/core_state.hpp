#pragma once

#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qdetect {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Tolerance for norms, zero amplitudes and projector checks.
inline constexpr double kTolerance = 1e-10;

/// Complex amplitudes over N lattice sites.
///
/// Sites are labelled 1..N in every accessor. A vector is either flagged
/// normalized (checked at construction) or explicitly unnormalized, as for
/// the conditional amplitudes produced by the projected evolution.
class StateVector {
public:
    /// Throws std::invalid_argument if |‖amps‖ − 1| > kTolerance.
    static StateVector normalized(CVector amps);
    static StateVector unnormalized(CVector amps);

    /// Basis state localized on `site` (1-indexed).
    static StateVector site(int n_sites, int site);

    int dim() const { return static_cast<int>(amps_.size()); }
    const CVector& amplitudes() const { return amps_; }
    Complex operator()(int site) const;  // 1-indexed
    bool is_normalized() const { return normalized_; }
    double norm() const { return amps_.norm(); }

    /// ⟨this|other⟩
    Complex overlap(const StateVector& other) const;

    /// Rescaled copy with unit norm; throws std::domain_error on a null vector.
    StateVector normalize() const;

private:
    StateVector(CVector amps, bool normalized) : amps_(std::move(amps)), normalized_(normalized) {}

    CVector amps_;
    bool normalized_;
};

/// Partition of sites [1, N] into the unmeasured block A⊥ = [1, m] and the
/// target block A = [m+1, N].
class SiteWindow {
public:
    /// Throws std::invalid_argument unless 1 ≤ cut ≤ n_sites − 1.
    SiteWindow(int n_sites, int cut);

    int n_sites() const { return n_sites_; }
    int cut() const { return cut_; }
    int target_size() const { return n_sites_ - cut_; }
    bool in_target(int site) const { return site > cut_ && site <= n_sites_; }

private:
    int n_sites_;
    int cut_;
};

/// Orthogonal projector, validated Hermitian and idempotent on construction.
class Projector {
public:
    explicit Projector(CMatrix matrix, double tol = kTolerance);

    int dim() const { return static_cast<int>(matrix_.rows()); }
    const CMatrix& matrix() const { return matrix_; }
    double trace() const { return matrix_.trace().real(); }

    /// P·ψ, always returned unnormalized.
    StateVector apply(const StateVector& psi) const;
    /// ‖P ψ‖²
    double weight(const StateVector& psi) const;

    /// Orthogonal projector onto the span of an orthonormal set.
    static Projector from_basis(int dim, const std::vector<StateVector>& basis);

private:
    CMatrix matrix_;
};

struct WindowProjectors {
    Projector target;      // P_A
    Projector complement;  // P_{A⊥}
};

WindowProjectors window_projectors(const SiteWindow& window);

struct WindowSums {
    Complex target;      // c_A
    Complex complement;  // c_{A⊥}
};

/// Sums of the amplitudes over A and over A⊥.
WindowSums window_sums(const StateVector& psi, const SiteWindow& window);

/// Largest entry of |M − M†|.
double hermiticity_defect(const CMatrix& m);

}  // namespace qdetect
