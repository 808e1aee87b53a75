#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "qdetect/core_state.hpp"

namespace qdetect {

/// Fully connected hopping model H = −J·E, where E is the N×N all-ones matrix.
class AllToAllModel {
public:
    /// Throws std::invalid_argument for N < 1 or J = 0.
    AllToAllModel(int n_sites, double coupling);

    int n_sites() const { return n_sites_; }
    double coupling() const { return coupling_; }

    CMatrix hamiltonian() const;

private:
    int n_sites_;
    double coupling_;
};

/// Orthonormal eigendecomposition with eigenvalues grouped by degeneracy.
/// `energies` are eigenvalues of the Hamiltonian, sorted ascending within
/// the generic solver; groups index into energies/vectors.
struct Spectrum {
    std::vector<double> energies;
    std::vector<StateVector> vectors;
    std::vector<std::vector<std::size_t>> degeneracy_groups;

    int dim() const { return vectors.empty() ? 0 : vectors.front().dim(); }
};

/// Closed-form eigenbasis of the all-to-all model.
///
/// `adjacency_eigenvalues` holds Λ ∈ {N, 0} (eigenvalues of E) in the same
/// order as `spectrum.vectors`; `spectrum.energies` holds the Hamiltonian
/// eigenvalues −J·Λ. Index 0 is |N⟩, index l (1..N−1) is |0,l⟩.
struct AllToAllEigenbasis {
    Spectrum spectrum;
    std::vector<double> adjacency_eigenvalues;
};

/// b_t = (e^{iJtN} − 1)/N
Complex b_coefficient(double t, const AllToAllModel& model);

/// U_t = 1 + b_t·E (rank-one closed form).
CMatrix propagator(double t, const AllToAllModel& model);

/// U_t ψ in O(N) using the rank-one structure.
CVector propagate(double t, const AllToAllModel& model, const CVector& psi);

/// |N⟩ = (1, …, 1)ᵀ/√N
StateVector uniform_state(int n_sites);

/// |0,l⟩: −C_l on sites 1..l, l·C_l on site l+1, C_l = 1/√(l(l+1)).
StateVector zero_mode(int n_sites, int l);

AllToAllEigenbasis closed_form_eigenbasis(const AllToAllModel& model);

/// Default clustering tolerance: 1e-8·max|λ|, floored at 1e-12.
double default_cluster_tolerance(const std::vector<double>& eigenvalues);

/// Full eigendecomposition of a Hermitian matrix. Eigenvalues closer than
/// `cluster_tol` (chained) share a degeneracy group.
Spectrum generic_eigenbasis(const CMatrix& hamiltonian, std::optional<double> cluster_tol = std::nullopt);

/// Groups sorted eigenvalues into clusters of consecutive values within tol.
std::vector<std::vector<std::size_t>> cluster_eigenvalues(const std::vector<double>& sorted, double tol);

/// e^{−iHt} built from a spectrum.
CMatrix spectral_propagator(const Spectrum& spectrum, double t);

/// Σ λ_i |v_i⟩⟨v_i|
CMatrix reconstruct(const Spectrum& spectrum);

/// Orthogonal projector onto the span of one degeneracy group.
CMatrix group_projector(const Spectrum& spectrum, std::size_t group);

}  // namespace qdetect
