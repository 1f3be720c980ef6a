#pragma once

// Numerical laboratory for the two-point (Le Cam) lower bounds: hard priors,
// exact KL / chi-square divergences for deterministic input schedules,
// admissible index sets, and Monte Carlo checks of the resulting certificates.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hinf/estimators.hpp"
#include "hinf/types.hpp"

namespace hinf {

class OverflowError : public std::overflow_error {
public:
    OverflowError(const std::string& what, double exponent) : std::overflow_error(what), exponent_(exponent) {}
    double exponent() const { return exponent_; }

private:
    double exponent_;
};

class NotPsdError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Finite support with uniform weights.
struct FinitePrior {
    std::vector<CVec> support;
    /// Set when the prior is the active construction {tau F^{-1} e_i}.
    std::optional<double> active_tau;

    FinitePrior() = default;
    explicit FinitePrior(std::vector<CVec> s, std::optional<double> tau = std::nullopt);

    std::size_t size() const { return support.size(); }
    Index dim() const { return support.front().size(); }
    double weight() const { return 1.0 / double(support.size()); }
};

FinitePrior zero_prior(Index r);

enum class DivergenceMethod { closed_form, enumeration, monte_carlo };

const char* to_string(DivergenceMethod m);

struct DivergenceReport {
    std::optional<double> kl;
    std::optional<double> chi_sq;
    double tv_upper = 1.0;
    DivergenceMethod method = DivergenceMethod::closed_form;
    std::optional<double> mc_std_err;
    /// tau^2 N M^2 / (2 sigma^2 r) when the prior is the active construction.
    std::optional<double> closed_bound;

    /// Recomputes tv_upper = min(sqrt(kl/2), sqrt(chi_sq), 1).
    void finalize();
};

struct LeCamCertificate {
    double separation = 0.0;  // c
    double tv_upper = 1.0;
    double risk_lower = 0.0;  // (c/2)(1 - tv)
};

nlohmann::json to_json(const DivergenceReport& r);
nlohmann::json to_json(const LeCamCertificate& c);

/// {tau F^{-1} e_i : i = 1..r}.
FinitePrior active_hard_prior(Index r, double tau);

/// (sigma / M) sqrt(r / N): the scale at which the active KL bound is 1/2.
double active_tau(double sigma, double input_cap, Index r, std::size_t budget);

/// tau^2 N M^2 / (2 sigma^2 r).
double active_kl_bound(double tau, std::size_t budget, double input_cap, double sigma, Index r);

/// tau^2 = sigma^2 r log(0.211 r) / (2N); needs r >= 5.
double passive_tau(double sigma, Index r, std::size_t budget);

/// (2 / log 1.1) r^2 log^2(0.211 r) M^4 / gamma^2, the sample size the passive
/// construction needs before its chi-square bound applies.
double passive_sample_requirement(Index r, double input_cap, double gamma);

/// KL(P_0 || P_theta) = (1 / 2 sigma^2) sum_t ||T(theta) u_t||^2 for fixed inputs.
double kl_active_closed_form(std::span<const CVec> inputs, const CVec& theta, double sigma);

/// Convexity bound (1/|S|) sum_i KL(P_0 || P_theta_i); closed_bound is filled
/// in when the prior carries active_tau.
DivergenceReport kl_mixture_upper(std::span<const CVec> inputs, const FinitePrior& prior, double sigma,
                                  double input_cap);

/// G(theta1, theta2) = exp((1/sigma^2) sum_t Re<T(theta1) u_t, T(theta2) u_t>).
double g_kernel(const CVec& theta1, const CVec& theta2, std::span<const CVec> inputs, double sigma);

/// chi^2(P_pi || P_0) = E_{theta1, theta2 ~ pi}[G] - 1 by exact enumeration.
DivergenceReport chi_sq_mixture(const FinitePrior& prior, std::span<const CVec> inputs, double sigma);

/// Hermitian PSD square root; tiny negative eigenvalues are clamped.
CMat psd_sqrt(const CMat& sigma);

/// Inverse square root of a positive definite Hermitian matrix.
CMat psd_inv_sqrt(const CMat& sigma);

struct SessionCovariance {
    CMat matrix;
    double min_eigenvalue = 0.0;
    std::size_t samples = 0;
};

/// (1/N) sum_t T(u_t)^* T(u_t) for a deterministic schedule.
SessionCovariance session_covariance(std::span<const CVec> schedule);

/// Monte Carlo E[T(u)^* T(u)] for a sampler of inputs.
SessionCovariance session_covariance(const std::function<CVec(Rng&)>& sampler, Index dim, std::size_t samples,
                                     std::uint64_t seed);

struct IndexSet {
    std::vector<Index> indices;
    /// a_i = (F Sigma^{1/2} F^{-1})_{ii}.
    RVec diag_values;
    double mean = 0.0;
};

/// I = {i : a_i <= 2 mean(a)}; |I| >= r/2 by Markov.
IndexSet admissible_index_set(const CMat& sigma);

/// tau Sigma^{-1/2} F^{-1} e_i over the admissible index set.
FinitePrior passive_hard_prior(const CMat& sigma, double tau);

struct NormRange {
    double min = 0.0;
    double max = 0.0;
};

NormRange prior_norm_range(const FinitePrior& prior, double tol = 1e-10);

/// Separation c = (min_2 - max_1)/2 and risk lower bound (c/2)(1 - tv).
LeCamCertificate le_cam_certificate(const FinitePrior& prior1, const FinitePrior& prior2,
                                    const DivergenceReport& divergence);

struct McEstimate {
    double mean = 0.0;
    double std_err = 0.0;
    std::size_t samples = 0;
};

struct SessionParams {
    Index dim = 0;
    double input_cap = 1.0;
    std::size_t budget = 1;
    double sigma = 0.0;
    Field field = Field::complex;
};

/// Mean |H_hat - ||H(theta)||| with theta drawn by picking one of the priors
/// uniformly and then a support point uniformly. A single prior is the plain
/// Bayes risk; {pi_1, pi_2} is the two-point mixture of the Le Cam argument.
McEstimate empirical_bayes_risk(const EstimatorConfig& cfg, std::span<const FinitePrior> priors,
                                const SessionParams& session, std::size_t trials, std::uint64_t seed);

/// Plug-in TV between the two mixtures via the set {p_1 > p_2}, with samples
/// drawn from each mixture.
McEstimate estimate_tv_mc(const FinitePrior& prior1, const FinitePrior& prior2, std::span<const CVec> inputs,
                          double sigma, std::size_t samples, std::uint64_t seed);

}  // namespace hinf
