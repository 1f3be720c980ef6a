#pragma once

// Random-plant benchmark: suite execution, records persistence and
// Dolan-More performance profiles.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "hinf/estimators.hpp"
#include "hinf/types.hpp"

namespace hinf {

/// Taps g_k = decay^k * eta_k with eta_k ~ Uniform[-1, 1].
struct PlantSpec {
    Index taps = 10;
    double decay = 1.0;
    std::uint64_t seed = 0;
};

/// Plants with ||H||_inf below this are redrawn so relative error stays defined.
inline constexpr double kMinPlantNorm = 1e-6;

FirFilter random_plant(const PlantSpec& spec);

struct MethodSpec {
    std::string name;
    EstimatorConfig config;
};

MethodSpec method_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MethodSpec& m);

/// Default method list: plugin, power_a, power_b, wts.
std::vector<MethodSpec> default_methods();

struct SuiteConfig {
    double snr = 20.0;
    std::size_t budget = 200;
    Index plant_length = 10;
    Index data_length = 50;
    double decay = 0.75;
    std::size_t n_plants = 100;
    std::size_t n_noise_per_plant = 10;
    std::vector<MethodSpec> methods = default_methods();
    std::uint64_t master_seed = 1;
    std::size_t parallelism = 1;
    Field field = Field::real;
    /// Input norm M; sigma = M / snr.
    double input_cap = 1.0;
    /// Wall-clock times make records non-reproducible, so they are opt-in.
    bool record_timing = false;
    double truth_tol = 1e-10;

    double sigma() const { return input_cap / snr; }
    void validate() const;
};

SuiteConfig suite_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SuiteConfig& cfg);

struct RunRecord {
    std::size_t plant_id = 0;
    std::size_t noise_id = 0;
    std::string method;
    double estimate = 0.0;
    double truth = 0.0;
    double rel_error = 0.0;
    std::size_t queries = 0;
    double wall_ms = 0.0;
    std::string flags;

    bool failed() const { return flags.find("error") != std::string::npos; }
};

/// Seed of the session for one (plant, noise, method) run.
std::uint64_t run_seed(std::uint64_t master_seed, std::size_t plant_id, std::size_t noise_id,
                       const std::string& method);

std::uint64_t plant_seed(std::uint64_t master_seed, std::size_t plant_id);

/// Every (plant, noise, method) triple, sorted by (plant_id, noise_id, method).
std::vector<RunRecord> run_suite(const SuiteConfig& cfg);

inline constexpr const char* kRecordsHeader = "plant_id,noise_id,method,estimate,truth,rel_error,queries,wall_ms,flags";

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records_csv(std::istream& in);

nlohmann::json suite_summary(const SuiteConfig& cfg, const std::vector<RunRecord>& records);

struct ProfilePoint {
    double tau = 0.0;
    double fraction = 0.0;
};

struct ProfileCurve {
    std::string method;
    std::vector<ProfilePoint> points;
};

/// 101 points on [0, 0.5].
std::vector<double> default_tau_grid();

/// Per instance (plant, noise) gap d_m = rel_error_m - min_m' rel_error_m';
/// curve_m(tau) = fraction of instances with d_m <= tau. Failed runs never count.
std::vector<ProfileCurve> performance_profile(const std::vector<RunRecord>& records, const std::vector<double>& taus);

void write_profile_csv(std::ostream& out, const std::vector<ProfileCurve>& curves);

/// Curve value at tau (step interpolation on the curve's grid).
double profile_value(const ProfileCurve& curve, double tau);

}  // namespace hinf
