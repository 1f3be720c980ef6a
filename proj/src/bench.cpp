#include "hinf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <type_traits>

#include "hinf/oracle.hpp"
#include "hinf/parallel.hpp"
#include "hinf/rng.hpp"
#include "hinf/signals.hpp"

namespace hinf {

namespace {

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

std::string format_double(double x) {
    std::ostringstream os;
    os << std::setprecision(12) << x;
    return os.str();
}

template <typename T>
T field_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>)
        if (!j.at(key).is_number_unsigned())
            throw std::invalid_argument(std::string("config field '") + key + "': expected a nonnegative integer");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config field '") + key + "': " + e.what());
    }
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s) {
    if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    return std::stod(s);
}

}  // namespace

FirFilter random_plant(const PlantSpec& spec) {
    if (spec.taps < 1) throw std::invalid_argument("random_plant: taps must be >= 1");
    if (!(spec.decay > 0.0 && spec.decay <= 1.0)) throw std::invalid_argument("random_plant: decay must lie in (0, 1]");
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(derive_seed({spec.seed, attempt}));
        RVec taps(spec.taps);
        double scale = 1.0;
        for (Index k = 0; k < spec.taps; ++k) {
            taps(k) = scale * rng.uniform(-1.0, 1.0);
            scale *= spec.decay;
        }
        FirFilter g = FirFilter::from_real(taps);
        if (hinf_norm(g, 1e-6, {.field = Field::real}).value >= kMinPlantNorm) return g;
    }
}

MethodSpec method_from_json(const nlohmann::json& j) {
    MethodSpec m;
    if (j.is_string()) {
        m.name = j.get<std::string>();
        m.config.variant = variant_from_string(m.name);
        return m;
    }
    if (!j.is_object()) throw std::invalid_argument("config field 'methods': entries must be strings or objects");
    static const std::set<std::string> known{"name",      "variant",          "model_order", "schedule",
                                             "bins",      "prior_std",        "posterior_samples",
                                             "phase_rule", "grid_arms",       "known_phase", "hinf_tol"};
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) throw std::invalid_argument("config field 'methods': unknown key '" + key + "'");
    const auto variant = field_or<std::string>(j, "variant", "");
    if (variant.empty()) throw std::invalid_argument("config field 'methods': 'variant' is required");
    auto& c = m.config;
    c.variant = variant_from_string(variant);
    m.name = field_or<std::string>(j, "name", variant);
    c.model_order = field_or<Index>(j, "model_order", 0);
    const auto schedule = field_or<std::string>(j, "schedule", "unit_random");
    if (schedule == "unit_random")
        c.schedule = InputSchedule::unit_random;
    else if (schedule == "impulse")
        c.schedule = InputSchedule::impulse;
    else
        throw std::invalid_argument("config field 'schedule': expected unit_random or impulse");
    c.bins = field_or<Index>(j, "bins", 0);
    c.prior_std = field_or<double>(j, "prior_std", 1.0);
    c.posterior_samples = field_or<int>(j, "posterior_samples", c.posterior_samples);
    const auto phase = field_or<std::string>(j, "phase_rule", "zero");
    if (phase == "zero")
        c.phase_rule = PhaseRule::zero;
    else if (phase == "random")
        c.phase_rule = PhaseRule::random;
    else
        throw std::invalid_argument("config field 'phase_rule': expected zero or random");
    c.grid_arms = field_or<Index>(j, "grid_arms", 0);
    if (j.contains("known_phase")) c.known_phase = field_or<double>(j, "known_phase", 0.0);
    c.hinf_tol = field_or<double>(j, "hinf_tol", c.hinf_tol);
    validate(c);
    return m;
}

nlohmann::json to_json(const MethodSpec& m) {
    const auto& c = m.config;
    nlohmann::json j{{"name", m.name},
                     {"variant", to_string(c.variant)},
                     {"model_order", c.model_order},
                     {"schedule", c.schedule == InputSchedule::impulse ? "impulse" : "unit_random"},
                     {"bins", c.bins},
                     {"prior_std", c.prior_std},
                     {"posterior_samples", c.posterior_samples},
                     {"phase_rule", c.phase_rule == PhaseRule::random ? "random" : "zero"},
                     {"grid_arms", c.grid_arms},
                     {"hinf_tol", c.hinf_tol}};
    if (c.known_phase) j["known_phase"] = *c.known_phase;
    return j;
}

std::vector<MethodSpec> default_methods() {
    std::vector<MethodSpec> out;
    for (auto v : {Variant::plugin, Variant::power_a, Variant::power_b, Variant::wts}) {
        MethodSpec m;
        m.name = to_string(v);
        m.config.variant = v;
        out.push_back(std::move(m));
    }
    return out;
}

void SuiteConfig::validate() const {
    if (!(snr > 0.0)) throw std::invalid_argument("config field 'snr' must be positive");
    if (budget < 1) throw std::invalid_argument("config field 'budget' must be positive");
    if (plant_length < 1) throw std::invalid_argument("config field 'plant_length' must be positive");
    if (data_length < plant_length)
        throw std::invalid_argument("config field 'data_length' must be at least plant_length");
    if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("config field 'decay' must lie in (0, 1]");
    if (n_plants < 1) throw std::invalid_argument("config field 'n_plants' must be positive");
    if (n_noise_per_plant < 1) throw std::invalid_argument("config field 'n_noise_per_plant' must be positive");
    if (methods.empty()) throw std::invalid_argument("config field 'methods' must be nonempty");
    if (!(input_cap > 0.0)) throw std::invalid_argument("config field 'input_cap' must be positive");
    std::set<std::string> names;
    for (const auto& m : methods)
        if (!names.insert(m.name).second)
            throw std::invalid_argument("config field 'methods': duplicate name '" + m.name + "'");
}

SuiteConfig suite_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    static const std::set<std::string> known{"snr",          "budget",       "plant_length", "data_length",
                                             "decay",        "n_plants",     "n_noise_per_plant",
                                             "methods",      "master_seed",  "parallelism",  "field",
                                             "input_cap",    "record_timing", "truth_tol"};
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) throw std::invalid_argument("config field '" + key + "' is not recognized");
    SuiteConfig c;
    c.snr = field_or<double>(j, "snr", c.snr);
    c.budget = field_or<std::size_t>(j, "budget", c.budget);
    c.plant_length = field_or<Index>(j, "plant_length", c.plant_length);
    c.data_length = field_or<Index>(j, "data_length", c.data_length);
    c.decay = field_or<double>(j, "decay", c.decay);
    c.n_plants = field_or<std::size_t>(j, "n_plants", c.n_plants);
    c.n_noise_per_plant = field_or<std::size_t>(j, "n_noise_per_plant", c.n_noise_per_plant);
    c.master_seed = field_or<std::uint64_t>(j, "master_seed", c.master_seed);
    c.parallelism = field_or<std::size_t>(j, "parallelism", c.parallelism);
    c.field = field_from_string(field_or<std::string>(j, "field", to_string(c.field)));
    c.input_cap = field_or<double>(j, "input_cap", c.input_cap);
    c.record_timing = field_or<bool>(j, "record_timing", c.record_timing);
    c.truth_tol = field_or<double>(j, "truth_tol", c.truth_tol);
    if (j.contains("methods")) {
        if (!j.at("methods").is_array()) throw std::invalid_argument("config field 'methods' must be an array");
        c.methods.clear();
        for (const auto& m : j.at("methods")) c.methods.push_back(method_from_json(m));
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const SuiteConfig& cfg) {
    auto methods = nlohmann::json::array();
    for (const auto& m : cfg.methods) methods.push_back(to_json(m));
    return {{"snr", cfg.snr},
            {"budget", cfg.budget},
            {"plant_length", cfg.plant_length},
            {"data_length", cfg.data_length},
            {"decay", cfg.decay},
            {"n_plants", cfg.n_plants},
            {"n_noise_per_plant", cfg.n_noise_per_plant},
            {"methods", methods},
            {"master_seed", cfg.master_seed},
            {"parallelism", cfg.parallelism},
            {"field", to_string(cfg.field)},
            {"input_cap", cfg.input_cap},
            {"record_timing", cfg.record_timing},
            {"truth_tol", cfg.truth_tol}};
}

std::uint64_t run_seed(std::uint64_t master_seed, std::size_t plant_id, std::size_t noise_id,
                       const std::string& method) {
    return derive_seed({master_seed, plant_id, noise_id, hash_string(method)});
}

std::uint64_t plant_seed(std::uint64_t master_seed, std::size_t plant_id) {
    return derive_seed({master_seed, 0x706c616e74ULL, plant_id});
}

namespace {

EstimateTrace execute(const SuiteConfig& cfg, const MethodSpec& method, const FirFilter& plant,
                      std::uint64_t seed) {
    EstimatorConfig ec = method.config;
    if (ec.model_order == 0) ec.model_order = cfg.plant_length;
    if (ec.grid_arms == 0) ec.grid_arms = cfg.plant_length;
    ec.noise_sigma = cfg.sigma();
    ec.seed = derive_seed({seed, 0x657374ULL});
    if (ec.variant == Variant::grid_mab) {
        FreqQuerySession fs(plant, cfg.budget - cfg.budget % 2, cfg.sigma(), seed);
        return grid_mab_estimate(fs, ec);
    }
    QuerySession s(plant, cfg.data_length, cfg.input_cap, cfg.budget, {cfg.sigma(), cfg.field}, seed);
    return run_estimator(s, ec);
}

std::string join_flags(const std::vector<std::string>& flags) {
    std::string out;
    for (const auto& f : flags) {
        if (!out.empty()) out += ';';
        out += f;
    }
    return sanitize(out);
}

}  // namespace

std::vector<RunRecord> run_suite(const SuiteConfig& cfg) {
    cfg.validate();
    std::vector<FirFilter> plants;
    std::vector<double> truths;
    plants.reserve(cfg.n_plants);
    for (std::size_t p = 0; p < cfg.n_plants; ++p) {
        plants.push_back(random_plant({cfg.plant_length, cfg.decay, plant_seed(cfg.master_seed, p)}));
        HinfOptions opts;
        opts.field = cfg.field;
        truths.push_back(hinf_norm(plants.back(), cfg.truth_tol, opts).value);
    }

    const std::size_t n_methods = cfg.methods.size();
    const std::size_t total = cfg.n_plants * cfg.n_noise_per_plant * n_methods;
    std::vector<RunRecord> records(total);
    parallel_for(total, std::max<std::size_t>(1, cfg.parallelism), [&](std::size_t i) {
        const std::size_t m = i % n_methods;
        const std::size_t noise = (i / n_methods) % cfg.n_noise_per_plant;
        const std::size_t plant = i / (n_methods * cfg.n_noise_per_plant);
        const auto& method = cfg.methods[m];
        RunRecord rec;
        rec.plant_id = plant;
        rec.noise_id = noise;
        rec.method = method.name;
        rec.truth = truths[plant];
        const auto start = std::chrono::steady_clock::now();
        try {
            const auto trace = execute(cfg, method, plants[plant], run_seed(cfg.master_seed, plant, noise, method.name));
            rec.estimate = trace.final_estimate;
            rec.rel_error = std::abs(rec.estimate - rec.truth) / rec.truth;
            rec.queries = trace.queries_used;
            rec.flags = join_flags(trace.flags);
        } catch (const std::exception& e) {
            rec.estimate = std::numeric_limits<double>::quiet_NaN();
            rec.rel_error = std::numeric_limits<double>::quiet_NaN();
            rec.flags = sanitize(std::string("error:") + e.what());
        }
        if (cfg.record_timing)
            rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        records[i] = std::move(rec);
    });
    std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
        return std::tie(a.plant_id, a.noise_id, a.method) < std::tie(b.plant_id, b.noise_id, b.method);
    });
    return records;
}

void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << kRecordsHeader << '\n';
    for (const auto& r : records) {
        out << r.plant_id << ',' << r.noise_id << ',' << sanitize(r.method) << ',' << format_double(r.estimate) << ','
            << format_double(r.truth) << ',' << format_double(r.rel_error) << ',' << r.queries << ','
            << format_double(r.wall_ms) << ',' << sanitize(r.flags) << '\n';
    }
}

std::vector<RunRecord> read_records_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("records CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kRecordsHeader) throw std::invalid_argument("records CSV header mismatch: expected '" +
                                                            std::string(kRecordsHeader) + "'");
    std::vector<RunRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 9)
            throw std::invalid_argument("records CSV line " + std::to_string(lineno) + ": expected 9 fields");
        try {
            RunRecord r;
            r.plant_id = std::stoull(f[0]);
            r.noise_id = std::stoull(f[1]);
            r.method = f[2];
            r.estimate = parse_double(f[3]);
            r.truth = parse_double(f[4]);
            r.rel_error = parse_double(f[5]);
            r.queries = std::stoull(f[6]);
            r.wall_ms = parse_double(f[7]);
            r.flags = f[8];
            out.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw std::invalid_argument("records CSV line " + std::to_string(lineno) + ": malformed number");
        }
    }
    return out;
}

nlohmann::json suite_summary(const SuiteConfig& cfg, const std::vector<RunRecord>& records) {
    std::map<std::string, std::vector<double>> errors;
    std::map<std::string, std::size_t> failures;
    for (const auto& m : cfg.methods) {
        errors[m.name];
        failures[m.name] = 0;
    }
    for (const auto& r : records) {
        if (r.failed())
            ++failures[r.method];
        else
            errors[r.method].push_back(r.rel_error);
    }
    nlohmann::json methods = nlohmann::json::object();
    for (auto& [name, errs] : errors) {
        std::sort(errs.begin(), errs.end());
        double mean = 0.0;
        for (double e : errs) mean += e;
        nlohmann::json j{{"runs", errs.size() + failures[name]}, {"failures", failures[name]}};
        if (!errs.empty()) {
            j["mean_rel_error"] = mean / double(errs.size());
            j["median_rel_error"] = errs[errs.size() / 2];
        }
        methods[name] = j;
    }
    return {{"config", to_json(cfg)}, {"records", records.size()}, {"methods", methods}};
}

std::vector<double> default_tau_grid() {
    std::vector<double> taus(101);
    for (std::size_t i = 0; i < taus.size(); ++i) taus[i] = 0.5 * double(i) / 100.0;
    return taus;
}

// Gaps are differences of rounded relative errors.
constexpr double kGapSlack = 1e-12;

std::vector<ProfileCurve> performance_profile(const std::vector<RunRecord>& records, const std::vector<double>& taus) {
    if (records.empty()) throw std::invalid_argument("performance_profile: no records");
    std::vector<std::string> methods;
    std::map<std::pair<std::size_t, std::size_t>, std::map<std::string, double>> instances;
    for (const auto& r : records) {
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
        const double err = r.failed() || !std::isfinite(r.rel_error) ? std::numeric_limits<double>::infinity()
                                                                      : r.rel_error;
        auto [it, inserted] = instances[{r.plant_id, r.noise_id}].emplace(r.method, err);
        if (!inserted)
            throw std::invalid_argument("performance_profile: duplicate record for plant " +
                                        std::to_string(r.plant_id) + ", noise " + std::to_string(r.noise_id) +
                                        ", method " + r.method);
    }

    std::string missing;
    for (const auto& [key, per_method] : instances)
        for (const auto& m : methods)
            if (!per_method.contains(m))
                missing += " (" + std::to_string(key.first) + "," + std::to_string(key.second) + "," + m + ")";
    if (!missing.empty()) throw std::invalid_argument("performance_profile: missing (plant,noise,method):" + missing);

    std::map<std::string, std::vector<double>> gaps;
    for (const auto& [key, per_method] : instances) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [_, e] : per_method) best = std::min(best, e);
        for (const auto& [m, e] : per_method)
            gaps[m].push_back(std::isfinite(e) ? e - best : std::numeric_limits<double>::infinity());
    }

    std::vector<ProfileCurve> curves;
    const double count = double(instances.size());
    for (const auto& m : methods) {
        auto& d = gaps[m];
        std::sort(d.begin(), d.end());
        ProfileCurve c{m, {}};
        for (double tau : taus) {
            const auto within = std::upper_bound(d.begin(), d.end(), tau + kGapSlack) - d.begin();
            c.points.push_back({tau, double(within) / count});
        }
        curves.push_back(std::move(c));
    }
    return curves;
}

void write_profile_csv(std::ostream& out, const std::vector<ProfileCurve>& curves) {
    out << "method,tau,fraction\n";
    for (const auto& c : curves)
        for (const auto& p : c.points) out << c.method << ',' << format_double(p.tau) << ',' << format_double(p.fraction) << '\n';
}

double profile_value(const ProfileCurve& curve, double tau) {
    double value = 0.0;
    for (const auto& p : curve.points) {
        if (p.tau <= tau + 1e-15) value = p.fraction;
        else break;
    }
    return value;
}

}  // namespace hinf
