#pragma once

#include <vector>

#include "qdetect/core_state.hpp"
#include "qdetect/spectral.hpp"

namespace qdetect {

/// Split of the Hilbert space into the dark subspace D (spanned by
/// eigenstates with no support on the target A) and its complement B.
struct DarkBrightDecomposition {
    std::vector<StateVector> dark_basis;
    std::vector<StateVector> bright_basis;
    Projector dark;
    Projector bright;

    int dim() const { return dark.dim(); }
};

/// Relative singular-value threshold used to extract kernels.
inline constexpr double kKernelThreshold = 1e-9;

/// Dark/bright split of an arbitrary spectrum.
///
/// Each degeneracy group {|μ_i⟩} of size g > 1 contributes the kernel of the
/// N×g matrix with columns P_A|μ_i⟩; the remaining right singular vectors
/// span its bright part. A nondegenerate eigenvector is dark iff
/// ‖P_A μ‖ ≤ tol.
DarkBrightDecomposition decompose(const Spectrum& spectrum, const Projector& target, double tol = 1e-9);

/// Closed-form split for the all-to-all model:
/// B = span{|N⟩, |0,l⟩ : l = m..N−1}, D = span{|0,l⟩ : l = 1..m−1}.
DarkBrightDecomposition bright_basis_all_to_all(const SiteWindow& window);

/// 1 − ‖P_D ψ₀‖²
double eventual_detection_probability(const StateVector& psi0, const DarkBrightDecomposition& dec);

/// ‖P_D ψ₀‖ ≤ 1e-9
bool is_bright(const StateVector& psi0, const DarkBrightDecomposition& dec);

/// ψ* = (1/√m)·(1, …, 1, 0, …, 0)ᵀ, supported on A⊥.
StateVector special_state(const SiteWindow& window);

/// Orthonormal basis of the bright states with P_A φ = 0.
///
/// Solves P_A Σ_k β_k |b_k⟩ = 0 over the bright basis. For the all-to-all
/// model the result is one-dimensional and spanned by ψ*.
std::vector<StateVector> bright_states_outside_target(const DarkBrightDecomposition& dec, const Projector& target);

/// Orthonormal basis (as matrix columns) of the kernel of `m`, using a
/// singular-value cut at kKernelThreshold·σ_max.
CMatrix kernel_basis(const CMatrix& m);

}  // namespace qdetect
