#include "qdetect/core_state.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdetect {

StateVector StateVector::normalized(CVector amps)
{
    if (amps.size() == 0) {
        throw std::invalid_argument("state vector must have at least one site");
    }
    const double n = amps.norm();
    if (std::abs(n - 1.0) > kTolerance) {
        throw std::invalid_argument("state vector is not normalized (norm = " + std::to_string(n) + ")");
    }
    return StateVector(std::move(amps), true);
}

StateVector StateVector::unnormalized(CVector amps)
{
    if (amps.size() == 0) {
        throw std::invalid_argument("state vector must have at least one site");
    }
    return StateVector(std::move(amps), false);
}

StateVector StateVector::site(int n_sites, int site)
{
    if (n_sites < 1 || site < 1 || site > n_sites) {
        throw std::invalid_argument("site index out of range");
    }
    CVector v = CVector::Zero(n_sites);
    v(site - 1) = 1.0;
    return StateVector(std::move(v), true);
}

Complex StateVector::operator()(int site) const
{
    if (site < 1 || site > dim()) {
        throw std::out_of_range("site index out of range");
    }
    return amps_(site - 1);
}

Complex StateVector::overlap(const StateVector& other) const
{
    if (other.dim() != dim()) {
        throw std::invalid_argument("overlap: dimension mismatch");
    }
    return amps_.dot(other.amps_);  // conjugates the left operand
}

StateVector StateVector::normalize() const
{
    const double n = amps_.norm();
    if (n == 0.0) {
        throw std::domain_error("cannot normalize a null vector");
    }
    return StateVector(amps_ / n, true);
}

SiteWindow::SiteWindow(int n_sites, int cut) : n_sites_(n_sites), cut_(cut)
{
    if (n_sites < 2 || cut < 1 || cut > n_sites - 1) {
        throw std::invalid_argument("site window requires 1 <= m <= N-1 (got N=" + std::to_string(n_sites) +
                                    ", m=" + std::to_string(cut) + ")");
    }
}

double hermiticity_defect(const CMatrix& m)
{
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("matrix is not square");
    }
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

Projector::Projector(CMatrix matrix, double tol) : matrix_(std::move(matrix))
{
    if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
        throw std::invalid_argument("projector must be a non-empty square matrix");
    }
    if (hermiticity_defect(matrix_) > tol) {
        throw std::invalid_argument("projector is not Hermitian");
    }
    if ((matrix_ * matrix_ - matrix_).cwiseAbs().maxCoeff() > tol) {
        throw std::invalid_argument("projector is not idempotent");
    }
}

StateVector Projector::apply(const StateVector& psi) const
{
    if (psi.dim() != dim()) {
        throw std::invalid_argument("projector: dimension mismatch");
    }
    return StateVector::unnormalized(matrix_ * psi.amplitudes());
}

double Projector::weight(const StateVector& psi) const
{
    return apply(psi).amplitudes().squaredNorm();
}

Projector Projector::from_basis(int dim, const std::vector<StateVector>& basis)
{
    CMatrix p = CMatrix::Zero(dim, dim);
    for (const auto& v : basis) {
        if (v.dim() != dim) {
            throw std::invalid_argument("basis vector has wrong dimension");
        }
        p.noalias() += v.amplitudes() * v.amplitudes().adjoint();
    }
    return Projector(std::move(p), 1e-9);
}

WindowProjectors window_projectors(const SiteWindow& window)
{
    const int n = window.n_sites();
    CMatrix target = CMatrix::Zero(n, n);
    CMatrix complement = CMatrix::Zero(n, n);
    for (int site = 1; site <= n; ++site) {
        if (window.in_target(site)) {
            target(site - 1, site - 1) = 1.0;
        } else {
            complement(site - 1, site - 1) = 1.0;
        }
    }
    return {Projector(std::move(target)), Projector(std::move(complement))};
}

WindowSums window_sums(const StateVector& psi, const SiteWindow& window)
{
    if (psi.dim() != window.n_sites()) {
        throw std::invalid_argument("window_sums: state dimension does not match the window");
    }
    const auto& a = psi.amplitudes();
    const int m = window.cut();
    return {a.tail(window.target_size()).sum(), a.head(m).sum()};
}

}  // namespace qdetect
