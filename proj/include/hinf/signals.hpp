#pragma once

// Deterministic signal math: truncated Toeplitz convolution, DFT matrices,
// frequency responses and certified H-infinity norm computation.

#include <cmath>
#include <numbers>
#include <string>

#include "hinf/types.hpp"

namespace hinf {

template <typename A, typename B>
using product_scalar_t = typename Eigen::ScalarBinaryOpTraits<typename A::Scalar, typename B::Scalar>::ReturnType;

/// y_i = sum_{k=0}^{min(i, r-1)} g_k u_{i-k}, i.e. the L x L lower-triangular
/// Toeplitz section of g applied to u.
template <typename DerivedG, typename DerivedU>
Eigen::Matrix<product_scalar_t<DerivedG, DerivedU>, Eigen::Dynamic, 1> convolve_truncated(
    const Eigen::MatrixBase<DerivedG>& g, const Eigen::MatrixBase<DerivedU>& u, Index dim) {
    if (u.size() != dim)
        throw DimensionError("convolve_truncated: input has length " + std::to_string(u.size()) +
                             ", expected L = " + std::to_string(dim));
    if (dim < g.size())
        throw DimensionError("convolve_truncated: L = " + std::to_string(dim) +
                             " is shorter than the filter (r = " + std::to_string(g.size()) + ")");
    using Scalar = product_scalar_t<DerivedG, DerivedU>;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(dim);
    for (Index k = 0; k < g.size(); ++k) {
        if (g(k) == typename DerivedG::Scalar(0)) continue;
        y.tail(dim - k) += g(k) * u.head(dim - k);
    }
    return y;
}

template <typename Derived>
CVec convolve_truncated(const FirFilter& g, const Eigen::MatrixBase<Derived>& u, Index dim) {
    return convolve_truncated(g.coeffs(), u, dim);
}

/// Dense L x L lower-triangular Toeplitz matrix with first column (g, 0, ..., 0).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> toeplitz_matrix(
    const Eigen::MatrixBase<Derived>& g, Index dim) {
    if (dim < g.size())
        throw DimensionError("toeplitz_matrix: L = " + std::to_string(dim) + " is shorter than r = " +
                             std::to_string(g.size()));
    using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Mat t = Mat::Zero(dim, dim);
    for (Index j = 0; j < dim; ++j)
        for (Index k = 0; k < g.size() && j + k < dim; ++k) t(j + k, j) = g(k);
    return t;
}

inline CMat toeplitz_matrix(const FirFilter& g, Index dim) { return toeplitz_matrix(g.coeffs(), dim); }

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> time_reverse(const Eigen::MatrixBase<Derived>& x) {
    return x.reverse();
}

/// Time reversal that realizes the adjoint of a Toeplitz section: J conj(T) J = T^*.
/// In real mode the conjugation is a no-op and this is plain reversal.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> adjoint_reverse(const Eigen::MatrixBase<Derived>& x) {
    return x.reverse().conjugate();
}

/// Unnormalized DFT matrix, F_{jk} = exp(-2 pi i jk / r).
CMat dft_matrix(Index r);

/// F^{-1} e_i = (1/r) F^* e_i.
CVec inverse_dft_column(Index r, Index i);

/// H(omega) = sum_k g_k exp(-j omega k).
template <typename Derived>
Complex freq_response(const Eigen::MatrixBase<Derived>& g, double omega) {
    // Horner in z^{-1}.
    const Complex zinv = std::polar(1.0, -omega);
    Complex acc = 0.0;
    for (Index k = g.size() - 1; k >= 0; --k) acc = acc * zinv + Complex(g(k));
    return acc;
}

inline Complex freq_response(const FirFilter& g, double omega) { return freq_response(g.coeffs(), omega); }

/// |H(2 pi m / P)| for m = 0..P-1 through a zero-padded FFT.
RVec magnitude_on_grid(const FirFilter& g, Index grid_points);

struct HinfResult {
    double value = 0.0;
    Index grid_points = 0;
    double argmax_freq = 0.0;
    /// Certified bound on ||H||_inf - value.
    double error_bound = 0.0;
};

struct HinfOptions {
    /// Real plants have |H(w)| = |H(-w)|; search only [0, pi].
    Field field = Field::complex;
    Index min_grid = 4096;
    Index max_grid = Index(1) << 22;
    /// Number of grid local maxima that get golden-section refinement.
    int refine_candidates = 8;
};

class ToleranceError : public std::runtime_error {
public:
    ToleranceError(const std::string& what, double achievable)
        : std::runtime_error(what), achievable_(achievable) {}
    double achievable() const { return achievable_; }

private:
    double achievable_;
};

/// ||H(g)||_inf to within tol. The grid of P points is doubled until the
/// Bernstein bound for |H|^2 (a trigonometric polynomial of degree r-1)
/// certifies ||H||_inf - value <= tol.
HinfResult hinf_norm(const FirFilter& g, double tol = 1e-9, const HinfOptions& opts = {});

/// Single-grid evaluation with refinement; error_bound is whatever the grid certifies.
HinfResult hinf_norm_on_grid(const FirFilter& g, Index grid_points, const HinfOptions& opts = {});

/// ||F g||_inf, a lower bound on ||H(g)||_inf.
double dft_norm_lower_bound(const FirFilter& g);

struct OperatorNormOptions {
    double tol = 1e-12;
    int max_iterations = 200000;
};

/// Largest singular value by power iteration on m^* m from a fixed start vector.
double operator_norm(const CMat& m, const OperatorNormOptions& opts = {});

}  // namespace hinf
