#include "qdetect/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace qdetect {

AllToAllModel::AllToAllModel(int n_sites, double coupling) : n_sites_(n_sites), coupling_(coupling)
{
    if (n_sites < 1) {
        throw std::invalid_argument("all-to-all model needs at least one site");
    }
    if (coupling == 0.0 || !std::isfinite(coupling)) {
        throw std::invalid_argument("coupling J must be finite and nonzero");
    }
}

CMatrix AllToAllModel::hamiltonian() const
{
    return CMatrix::Constant(n_sites_, n_sites_, Complex(-coupling_, 0.0));
}

Complex b_coefficient(double t, const AllToAllModel& model)
{
    const double n = model.n_sites();
    const double phase = model.coupling() * t * n;
    // e^{iφ} − 1 = 2i·sin(φ/2)·e^{iφ/2}, accurate for small φ
    const Complex half = std::polar(1.0, 0.5 * phase);
    return Complex(0.0, 2.0 * std::sin(0.5 * phase)) * half / n;
}

CMatrix propagator(double t, const AllToAllModel& model)
{
    const int n = model.n_sites();
    CMatrix u = CMatrix::Constant(n, n, b_coefficient(t, model));
    u.diagonal().array() += 1.0;
    return u;
}

CVector propagate(double t, const AllToAllModel& model, const CVector& psi)
{
    const Complex shift = b_coefficient(t, model) * psi.sum();
    return psi.array() + shift;
}

StateVector uniform_state(int n_sites)
{
    return StateVector::normalized(CVector::Constant(n_sites, 1.0 / std::sqrt(double(n_sites))));
}

StateVector zero_mode(int n_sites, int l)
{
    if (l < 1 || l > n_sites - 1) {
        throw std::invalid_argument("zero mode index l must lie in [1, N-1]");
    }
    const double c = 1.0 / std::sqrt(double(l) * double(l + 1));
    CVector v = CVector::Zero(n_sites);
    v.head(l).setConstant(-c);
    v(l) = l * c;
    return StateVector::normalized(std::move(v));
}

AllToAllEigenbasis closed_form_eigenbasis(const AllToAllModel& model)
{
    const int n = model.n_sites();
    AllToAllEigenbasis out;
    out.spectrum.vectors.push_back(uniform_state(n));
    out.adjacency_eigenvalues.push_back(n);
    for (int l = 1; l < n; ++l) {
        out.spectrum.vectors.push_back(zero_mode(n, l));
        out.adjacency_eigenvalues.push_back(0.0);
    }
    for (double lam : out.adjacency_eigenvalues) {
        out.spectrum.energies.push_back(-model.coupling() * lam);
    }
    out.spectrum.degeneracy_groups.push_back({0});
    if (n > 1) {
        std::vector<std::size_t> zero(n - 1);
        std::iota(zero.begin(), zero.end(), std::size_t{1});
        out.spectrum.degeneracy_groups.push_back(std::move(zero));
    }
    return out;
}

double default_cluster_tolerance(const std::vector<double>& eigenvalues)
{
    double scale = 0.0;
    for (double e : eigenvalues) scale = std::max(scale, std::abs(e));
    return std::max(1e-8 * scale, 1e-12);
}

std::vector<std::vector<std::size_t>> cluster_eigenvalues(const std::vector<double>& sorted, double tol)
{
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i == 0 || sorted[i] - sorted[i - 1] > tol) {
            groups.emplace_back();
        }
        groups.back().push_back(i);
    }
    return groups;
}

Spectrum generic_eigenbasis(const CMatrix& hamiltonian, std::optional<double> cluster_tol)
{
    if (hamiltonian.rows() == 0 || hamiltonian.rows() != hamiltonian.cols()) {
        throw std::invalid_argument("Hamiltonian must be a non-empty square matrix");
    }
    if (hermiticity_defect(hamiltonian) > kTolerance) {
        throw std::invalid_argument("Hamiltonian is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(hamiltonian);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("Hermitian eigensolver did not converge");
    }
    Spectrum out;
    const auto& values = solver.eigenvalues();
    const auto& vectors = solver.eigenvectors();
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        out.energies.push_back(values(i));
        out.vectors.push_back(StateVector::normalized(vectors.col(i)));
    }
    const double tol = cluster_tol.value_or(default_cluster_tolerance(out.energies));
    out.degeneracy_groups = cluster_eigenvalues(out.energies, tol);
    return out;
}

CMatrix spectral_propagator(const Spectrum& spectrum, double t)
{
    const int n = spectrum.dim();
    CMatrix u = CMatrix::Zero(n, n);
    for (std::size_t i = 0; i < spectrum.vectors.size(); ++i) {
        const auto& v = spectrum.vectors[i].amplitudes();
        u.noalias() += std::polar(1.0, -spectrum.energies[i] * t) * (v * v.adjoint());
    }
    return u;
}

CMatrix reconstruct(const Spectrum& spectrum)
{
    const int n = spectrum.dim();
    CMatrix h = CMatrix::Zero(n, n);
    for (std::size_t i = 0; i < spectrum.vectors.size(); ++i) {
        const auto& v = spectrum.vectors[i].amplitudes();
        h.noalias() += spectrum.energies[i] * (v * v.adjoint());
    }
    return h;
}

CMatrix group_projector(const Spectrum& spectrum, std::size_t group)
{
    const int n = spectrum.dim();
    CMatrix p = CMatrix::Zero(n, n);
    for (std::size_t idx : spectrum.degeneracy_groups.at(group)) {
        const auto& v = spectrum.vectors[idx].amplitudes();
        p.noalias() += v * v.adjoint();
    }
    return p;
}

}  // namespace qdetect
