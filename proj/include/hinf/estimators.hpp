#pragma once

// H-infinity norm estimators driven through a QuerySource: the least-squares
// plugin, two time-reversal power methods, weighted Thompson sampling over DFT
// bins, and the three-phase MOSS grid bandit on the frequency oracle.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hinf/oracle.hpp"
#include "hinf/rng.hpp"
#include "hinf/types.hpp"

namespace hinf {

enum class Variant { plugin, power_a, power_b, wts, grid_mab };

const char* to_string(Variant v);
Variant variant_from_string(const std::string& s);

enum class InputSchedule { impulse, unit_random, custom };

enum class PhaseRule { zero, random };

struct EstimatorConfig {
    Variant variant = Variant::plugin;

    // Plugin. model_order 0 means "use the plant length" (set by the caller).
    Index model_order = 0;
    InputSchedule schedule = InputSchedule::unit_random;
    std::vector<CVec> custom_inputs;

    // WTS. bins 0 selects floor(L/2)+1 in real mode and L in complex mode.
    Index bins = 0;
    double prior_std = 1.0;
    int posterior_samples = 100;
    /// Noise level handed to WTS as side information.
    double noise_sigma = 0.0;
    PhaseRule phase_rule = PhaseRule::zero;

    // Grid bandit. arms 0 means "plant length".
    Index grid_arms = 0;
    /// Known phase of the peak; without it the arm statistic is |mean|.
    std::optional<double> known_phase;

    /// Estimator-side randomness (initial inputs, posterior draws, schedules).
    std::uint64_t seed = 0;
    double hinf_tol = 1e-9;
};

void validate(const EstimatorConfig& cfg);

struct EstimateTrace {
    Variant variant = Variant::plugin;
    double final_estimate = 0.0;
    std::vector<double> per_round;
    std::size_t queries_used = 0;
    std::vector<std::string> flags;

    bool has_flag(const std::string& f) const;
};

nlohmann::json to_json(const EstimateTrace& trace);
EstimateTrace trace_from_json(const nlohmann::json& j);

struct LeastSquaresFit {
    FirFilter taps;
    Index rank = 0;
    bool rank_deficient = false;
};

/// argmin_g sum_t ||y_t - U_t g||^2 with U_t the L x m truncated-convolution
/// matrix of u_t; minimum-norm solution when the stacked design is rank deficient.
LeastSquaresFit least_squares_fir(std::span<const CVec> inputs, std::span<const CVec> outputs, Index model_order);

/// L x m matrix whose columns are u delayed by 0..m-1 samples.
CMat convolution_design(const CVec& u, Index model_order);

EstimateTrace plugin_estimate(QuerySource& src, const EstimatorConfig& cfg);
EstimateTrace power_method_a(QuerySource& src, const EstimatorConfig& cfg);
EstimateTrace power_method_b(QuerySource& src, const EstimatorConfig& cfg);
EstimateTrace wts_estimate(QuerySource& src, const EstimatorConfig& cfg);
EstimateTrace grid_mab_estimate(FreqQuerySession& src, const EstimatorConfig& cfg);

/// Dispatch for the time-domain variants.
EstimateTrace run_estimator(QuerySource& src, const EstimatorConfig& cfg);

Index default_wts_bins(Index dim, Field field);

struct WtsPosterior {
    Complex mean;
    double variance = 0.0;
};

/// Complex-Gaussian posterior of one bin after accumulating power S = sum_l p^l
/// and W = sum_l p^l X^l: mean lambda^2 W / (sigma^2 + lambda^2 S),
/// variance lambda^2 / (1 + lambda^2 S / sigma^2).
WtsPosterior wts_posterior(Complex weighted_sum, double power_sum, double prior_std, double sigma);

/// DFT index carrying bin k of K.
Index bin_to_dft_index(Index k, Index bins, Index dim, Field field);

/// Input of norm M whose DFT power on bin k is proportional to p_k.
/// In real mode bins 1..K-1 (except Nyquist) are split between the bin and its mirror.
CVec power_profile_to_input(std::span<const double> profile, Index dim, double input_cap, Field field,
                            PhaseRule phase_rule = PhaseRule::zero, Rng* rng = nullptr);

/// MOSS index: mean + sqrt(max(0, ln(N / (K n))) / n).
double moss_index(double mean, std::size_t pulls, std::size_t horizon, std::size_t arms);

enum class SectorVerdict { inside, outside, undecided };

const char* to_string(SectorVerdict v);

/// Decides the [a, b]-sector condition from an estimate of ||H - (a+b)/2||_inf.
SectorVerdict sector_test(double shifted_norm_estimate, double a, double b, double margin);

}  // namespace hinf
