#include "qdetect/darkbright.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SVD>

namespace qdetect {

namespace {

// Modified Gram–Schmidt; drops vectors that become numerically dependent.
std::vector<StateVector> orthonormalize(const std::vector<CVector>& vectors)
{
    std::vector<CVector> out;
    for (CVector v : vectors) {
        for (const auto& q : out) {
            v -= q.dot(v) * q;
        }
        const double n = v.norm();
        if (n > 1e-8) {
            out.push_back(v / n);
        }
    }
    std::vector<StateVector> states;
    states.reserve(out.size());
    for (auto& v : out) states.push_back(StateVector::normalized(std::move(v)));
    return states;
}

struct KernelSplit {
    CMatrix kernel;      // columns span ker(T)
    CMatrix complement;  // columns span ker(T)^⊥
};

KernelSplit split_kernel(const CMatrix& t)
{
    const auto cols = t.cols();
    Eigen::JacobiSVD<CMatrix> svd(t, Eigen::ComputeFullV);
    const auto& sigma = svd.singularValues();
    const double smax = sigma.size() > 0 ? sigma(0) : 0.0;
    Eigen::Index rank = 0;
    if (smax > 0.0) {
        for (Eigen::Index i = 0; i < sigma.size(); ++i) {
            if (sigma(i) > kKernelThreshold * smax) ++rank;
        }
    }
    const CMatrix& v = svd.matrixV();
    return {v.rightCols(cols - rank), v.leftCols(rank)};
}

}  // namespace

CMatrix kernel_basis(const CMatrix& m)
{
    return split_kernel(m).kernel;
}

DarkBrightDecomposition decompose(const Spectrum& spectrum, const Projector& target, double tol)
{
    const int n = target.dim();
    if (spectrum.dim() != n || static_cast<int>(spectrum.vectors.size()) != n) {
        throw std::invalid_argument("decompose: spectrum and projector dimensions differ");
    }
    std::vector<CVector> dark;
    std::vector<CVector> bright;
    for (const auto& group : spectrum.degeneracy_groups) {
        if (group.size() == 1) {
            const auto& mu = spectrum.vectors[group.front()];
            const double leak = target.apply(mu).norm();
            (leak <= tol ? dark : bright).push_back(mu.amplitudes());
            continue;
        }
        const auto g = static_cast<Eigen::Index>(group.size());
        CMatrix basis(n, g);
        for (Eigen::Index k = 0; k < g; ++k) {
            basis.col(k) = spectrum.vectors[group[k]].amplitudes();
        }
        const KernelSplit split = split_kernel(target.matrix() * basis);
        for (Eigen::Index k = 0; k < split.kernel.cols(); ++k) {
            dark.push_back(basis * split.kernel.col(k));
        }
        for (Eigen::Index k = 0; k < split.complement.cols(); ++k) {
            bright.push_back(basis * split.complement.col(k));
        }
    }
    auto dark_basis = orthonormalize(dark);
    auto bright_basis = orthonormalize(bright);
    if (dark_basis.size() + bright_basis.size() != static_cast<std::size_t>(n)) {
        throw std::runtime_error("decompose: dark and bright bases do not span the space");
    }
    Projector p_dark = Projector::from_basis(n, dark_basis);
    Projector p_bright = Projector::from_basis(n, bright_basis);
    return {std::move(dark_basis), std::move(bright_basis), std::move(p_dark), std::move(p_bright)};
}

DarkBrightDecomposition bright_basis_all_to_all(const SiteWindow& window)
{
    const int n = window.n_sites();
    const int m = window.cut();
    std::vector<StateVector> dark;
    std::vector<StateVector> bright{uniform_state(n)};
    for (int l = 1; l < m; ++l) dark.push_back(zero_mode(n, l));
    for (int l = m; l < n; ++l) bright.push_back(zero_mode(n, l));
    Projector p_dark = Projector::from_basis(n, dark);
    Projector p_bright = Projector::from_basis(n, bright);
    return {std::move(dark), std::move(bright), std::move(p_dark), std::move(p_bright)};
}

double eventual_detection_probability(const StateVector& psi0, const DarkBrightDecomposition& dec)
{
    return std::clamp(1.0 - dec.dark.weight(psi0), 0.0, 1.0);
}

bool is_bright(const StateVector& psi0, const DarkBrightDecomposition& dec)
{
    return dec.dark.apply(psi0).norm() <= 1e-9;
}

StateVector special_state(const SiteWindow& window)
{
    const int m = window.cut();
    CVector v = CVector::Zero(window.n_sites());
    v.head(m).setConstant(1.0 / std::sqrt(double(m)));
    return StateVector::normalized(std::move(v));
}

std::vector<StateVector> bright_states_outside_target(const DarkBrightDecomposition& dec, const Projector& target)
{
    const int n = dec.dim();
    const auto k = static_cast<Eigen::Index>(dec.bright_basis.size());
    CMatrix basis(n, k);
    for (Eigen::Index i = 0; i < k; ++i) basis.col(i) = dec.bright_basis[i].amplitudes();
    const CMatrix coeffs = kernel_basis(target.matrix() * basis);
    std::vector<CVector> states;
    for (Eigen::Index i = 0; i < coeffs.cols(); ++i) states.push_back(basis * coeffs.col(i));
    return orthonormalize(states);
}

}  // namespace qdetect
