#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hinf {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Scalar field the plant, inputs and noise live in. Real mode keeps every
/// imaginary part exactly zero.
enum class Field { complex, real };

const char* to_string(Field f);
Field field_from_string(const std::string& s);

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Causal FIR filter H(g) = sum_k g_k z^{-k}.
class FirFilter {
public:
    explicit FirFilter(CVec coeffs);

    static FirFilter from_real(std::span<const double> taps);
    static FirFilter from_real(const RVec& taps);

    const CVec& coeffs() const { return coeffs_; }
    Index length() const { return coeffs_.size(); }
    Complex operator[](Index k) const { return coeffs_(k); }
    bool is_real() const { return coeffs_.imag().isZero(0.0); }

    FirFilter scaled(Complex alpha) const { return FirFilter(alpha * coeffs_); }

private:
    CVec coeffs_;
};

inline bool all_finite(const CVec& v) { return v.allFinite(); }

inline bool is_real_vector(const CVec& v) { return v.imag().isZero(0.0); }

}  // namespace hinf
