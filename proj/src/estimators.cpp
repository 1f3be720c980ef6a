#include "hinf/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hinf/signals.hpp"

namespace hinf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double inner_real(const CVec& a, const CVec& b) { return a.dot(b).real(); }

CVec random_unit_input(Rng& rng, Index dim, Field field) { return rng.unit_sphere(dim, field); }

HinfOptions hinf_options_for(Field field) {
    HinfOptions o;
    o.field = field;
    return o;
}

}  // namespace

const char* to_string(Variant v) {
    switch (v) {
        case Variant::plugin: return "plugin";
        case Variant::power_a: return "power_a";
        case Variant::power_b: return "power_b";
        case Variant::wts: return "wts";
        case Variant::grid_mab: return "grid_mab";
    }
    return "unknown";
}

Variant variant_from_string(const std::string& s) {
    if (s == "plugin") return Variant::plugin;
    if (s == "power_a") return Variant::power_a;
    if (s == "power_b") return Variant::power_b;
    if (s == "wts") return Variant::wts;
    if (s == "grid_mab") return Variant::grid_mab;
    throw std::invalid_argument("unknown estimator '" + s + "' (expected plugin, power_a, power_b, wts or grid_mab)");
}

void validate(const EstimatorConfig& cfg) {
    if (cfg.model_order < 0) throw std::invalid_argument("model_order must be >= 1");
    if (cfg.bins < 0) throw std::invalid_argument("bins must be >= 1");
    if (!(cfg.prior_std > 0.0)) throw std::invalid_argument("prior_std must be positive");
    if (cfg.posterior_samples < 1) throw std::invalid_argument("posterior_samples must be >= 1");
    if (!(cfg.noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be nonnegative");
    if (cfg.grid_arms < 0) throw std::invalid_argument("grid_arms must be >= 1");
    if (!(cfg.hinf_tol > 0.0)) throw std::invalid_argument("hinf_tol must be positive");
    if (cfg.schedule == InputSchedule::custom && cfg.custom_inputs.empty())
        throw std::invalid_argument("custom schedule needs at least one input");
}

bool EstimateTrace::has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

nlohmann::json to_json(const EstimateTrace& trace) {
    return {{"variant", to_string(trace.variant)},
            {"final", trace.final_estimate},
            {"per_round", trace.per_round},
            {"queries_used", trace.queries_used},
            {"flags", trace.flags}};
}

EstimateTrace trace_from_json(const nlohmann::json& j) {
    EstimateTrace t;
    t.variant = variant_from_string(j.at("variant").get<std::string>());
    t.final_estimate = j.at("final").get<double>();
    t.per_round = j.at("per_round").get<std::vector<double>>();
    t.queries_used = j.at("queries_used").get<std::size_t>();
    t.flags = j.at("flags").get<std::vector<std::string>>();
    return t;
}

CMat convolution_design(const CVec& u, Index model_order) {
    const Index dim = u.size();
    if (model_order > dim) throw DimensionError("convolution_design: model order exceeds L");
    CMat a = CMat::Zero(dim, model_order);
    for (Index k = 0; k < model_order; ++k) a.col(k).tail(dim - k) = u.head(dim - k);
    return a;
}

LeastSquaresFit least_squares_fir(std::span<const CVec> inputs, std::span<const CVec> outputs, Index model_order) {
    if (inputs.empty()) throw std::invalid_argument("least_squares_fir: no experiments");
    if (inputs.size() != outputs.size())
        throw DimensionError("least_squares_fir: inputs and outputs differ in count");
    if (model_order < 1) throw DimensionError("least_squares_fir: model order must be >= 1");
    const Index dim = inputs.front().size();
    if (model_order > dim) throw DimensionError("least_squares_fir: model order exceeds L");

    const Index n = static_cast<Index>(inputs.size());
    CMat design(n * dim, model_order);
    CVec rhs(n * dim);
    bool real = true;
    for (Index t = 0; t < n; ++t) {
        const auto& u = inputs[static_cast<std::size_t>(t)];
        const auto& y = outputs[static_cast<std::size_t>(t)];
        if (u.size() != dim || y.size() != dim)
            throw DimensionError("least_squares_fir: experiment " + std::to_string(t) + " has wrong length");
        design.middleRows(t * dim, dim) = convolution_design(u, model_order);
        rhs.segment(t * dim, dim) = y;
        real = real && is_real_vector(u) && is_real_vector(y);
    }

    Eigen::CompleteOrthogonalDecomposition<CMat> cod(design);
    CVec g = cod.solve(rhs);
    if (real) g = g.real().cast<Complex>();
    LeastSquaresFit fit{FirFilter(g), cod.rank(), cod.rank() < model_order};
    return fit;
}

EstimateTrace plugin_estimate(QuerySource& src, const EstimatorConfig& cfg) {
    validate(cfg);
    const Index dim = src.dim();
    const Index order = cfg.model_order == 0 ? dim : cfg.model_order;
    if (order > dim) throw DimensionError("plugin: model order exceeds session dimension");
    const std::size_t n = src.remaining();
    if (n < 1) throw BudgetExceeded("plugin: no budget left");

    const double cap = src.input_cap();
    Rng rng(derive_seed({cfg.seed, 0x706c7567ULL}));
    std::vector<CVec> inputs, outputs;
    inputs.reserve(n);
    outputs.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
        CVec u;
        switch (cfg.schedule) {
            case InputSchedule::impulse:
                u = CVec::Zero(dim);
                u(0) = cap;
                break;
            case InputSchedule::unit_random:
                u = cap * random_unit_input(rng, dim, src.field());
                break;
            case InputSchedule::custom:
                u = cfg.custom_inputs[t % cfg.custom_inputs.size()];
                break;
        }
        outputs.push_back(src.query(u));
        inputs.push_back(std::move(u));
    }

    auto fit = least_squares_fir(inputs, outputs, order);
    EstimateTrace trace;
    trace.variant = Variant::plugin;
    trace.final_estimate = hinf_norm(fit.taps, cfg.hinf_tol, hinf_options_for(src.field())).value;
    trace.per_round.push_back(trace.final_estimate);
    trace.queries_used = n;
    if (fit.rank_deficient) trace.flags.emplace_back("rank_deficient");
    return trace;
}

// Each query sends M u and divides the response by M, so the iteration acts on
// unit-norm vectors regardless of the cap.
EstimateTrace power_method_a(QuerySource& src, const EstimatorConfig& cfg) {
    validate(cfg);
    const std::size_t n = src.remaining();
    if (n < 2) throw BudgetExceeded("power_method_a: needs a budget of at least 2");
    const Index dim = src.dim();
    const double cap = src.input_cap();
    Rng rng(derive_seed({cfg.seed, 0x706d61ULL}));

    EstimateTrace trace;
    trace.variant = Variant::power_a;
    CVec u = random_unit_input(rng, dim, src.field());
    CVec prev_u;
    double prev_mu = 0.0;
    bool have_prev = false;
    for (std::size_t t = 0; t < n; ++t) {
        CVec reversed = adjoint_reverse(CVec(src.query(cap * u) / cap));
        ++trace.queries_used;
        const double mu = reversed.norm();
        if (have_prev) {
            double h2 = prev_mu * inner_real(prev_u, reversed);
            trace.per_round.push_back(std::sqrt(std::abs(h2)));
        }
        if (mu == 0.0) {
            trace.flags.emplace_back("degenerate_restart");
            u = random_unit_input(rng, dim, src.field());
            have_prev = false;
            continue;
        }
        prev_u = u;
        prev_mu = mu;
        have_prev = true;
        u = reversed / mu;
    }
    trace.final_estimate = trace.per_round.empty() ? 0.0 : trace.per_round.back();
    if (trace.per_round.empty()) trace.per_round.push_back(0.0);
    return trace;
}

EstimateTrace power_method_b(QuerySource& src, const EstimatorConfig& cfg) {
    validate(cfg);
    const std::size_t iterations = src.remaining() / 2;
    if (iterations < 1) throw BudgetExceeded("power_method_b: needs a budget of at least 2");
    const Index dim = src.dim();
    const double cap = src.input_cap();
    Rng rng(derive_seed({cfg.seed, 0x706d62ULL}));

    EstimateTrace trace;
    trace.variant = Variant::power_b;
    CVec u = random_unit_input(rng, dim, src.field());
    for (std::size_t it = 0; it < iterations; ++it) {
        CVec y_rev = adjoint_reverse(CVec(src.query(cap * u) / cap));
        ++trace.queries_used;
        const double y_norm = y_rev.norm();
        if (y_norm == 0.0) {
            trace.flags.emplace_back("degenerate_restart");
            u = random_unit_input(rng, dim, src.field());
            continue;
        }
        // G applied to y_rev, with the input scaled onto the cap and back.
        CVec z_rev = adjoint_reverse(CVec(src.query(cap * y_rev / y_norm) * (y_norm / cap)));
        ++trace.queries_used;
        trace.per_round.push_back(std::sqrt(std::abs(inner_real(u, z_rev))));
        const double z_norm = z_rev.norm();
        if (z_norm == 0.0) {
            trace.flags.emplace_back("degenerate_restart");
            u = random_unit_input(rng, dim, src.field());
            continue;
        }
        u = z_rev / z_norm;
    }
    if (trace.per_round.empty()) trace.per_round.push_back(0.0);
    trace.final_estimate = trace.per_round.back();
    return trace;
}

double moss_index(double mean, std::size_t pulls, std::size_t horizon, std::size_t arms) {
    if (pulls < 1) throw std::invalid_argument("moss_index: arm must have been pulled at least once");
    const double n = double(pulls);
    const double ratio = double(horizon) / (double(arms) * n);
    return mean + std::sqrt(std::max(0.0, std::log(ratio)) / n);
}

EstimateTrace grid_mab_estimate(FreqQuerySession& src, const EstimatorConfig& cfg) {
    validate(cfg);
    const std::size_t arms = static_cast<std::size_t>(cfg.grid_arms);
    if (arms < 1) throw std::invalid_argument("grid_mab: grid_arms must be set");
    const std::size_t budget = src.budget() - src.used();
    if (budget < 2 * arms)
        throw std::invalid_argument("grid_mab: budget " + std::to_string(budget) + " is below 2 * arms = " +
                                    std::to_string(2 * arms));
    if (budget % 2 != 0) throw std::invalid_argument("grid_mab: budget must be even");
    const std::size_t half = budget / 2;
    Rng rng(derive_seed({cfg.seed, 0x6d6f7373ULL}));

    auto freq = [&](std::size_t k) { return kTwoPi * double(k) / double(arms); };
    const Complex rotate = cfg.known_phase ? std::polar(1.0, -*cfg.known_phase) : Complex(1.0);
    auto statistic = [&](const Complex& mean) {
        return cfg.known_phase ? (rotate * mean).real() : std::abs(mean);
    };

    std::vector<Complex> sums(arms, Complex(0.0));
    std::vector<std::size_t> pulls(arms, 0);
    EstimateTrace trace;
    trace.variant = Variant::grid_mab;

    // Phase 1: MOSS over the grid arms for N/2 rounds.
    for (std::size_t t = 0; t < half; ++t) {
        std::size_t arm = 0;
        if (t < arms) {
            arm = t;
        } else {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < arms; ++k) {
                double idx = moss_index(statistic(sums[k] / double(pulls[k])), pulls[k], half, arms);
                if (idx > best) {
                    best = idx;
                    arm = k;
                }
            }
        }
        sums[arm] += src.query_frequency(freq(arm));
        ++pulls[arm];
        ++trace.queries_used;
    }

    // Phase 2: pick an arm with probability proportional to its pull count.
    std::size_t pick = static_cast<std::size_t>(rng.index(half));
    std::size_t chosen = 0;
    for (std::size_t k = 0, acc = 0; k < arms; ++k) {
        acc += pulls[k];
        if (pick < acc) {
            chosen = k;
            break;
        }
    }

    // Phase 3: spend the rest on the chosen frequency.
    Complex sum = 0.0;
    for (std::size_t t = 0; t < half; ++t) {
        sum += src.query_frequency(freq(chosen));
        ++trace.queries_used;
        trace.per_round.push_back(std::abs(sum / double(t + 1)));
    }
    trace.final_estimate = trace.per_round.back();
    trace.flags.push_back("arm=" + std::to_string(chosen));
    return trace;
}

EstimateTrace run_estimator(QuerySource& src, const EstimatorConfig& cfg) {
    switch (cfg.variant) {
        case Variant::plugin: return plugin_estimate(src, cfg);
        case Variant::power_a: return power_method_a(src, cfg);
        case Variant::power_b: return power_method_b(src, cfg);
        case Variant::wts: return wts_estimate(src, cfg);
        case Variant::grid_mab:
            throw std::invalid_argument("grid_mab runs on a frequency session, not a time-domain source");
    }
    throw std::invalid_argument("unknown estimator variant");
}

const char* to_string(SectorVerdict v) {
    switch (v) {
        case SectorVerdict::inside: return "inside";
        case SectorVerdict::outside: return "outside";
        case SectorVerdict::undecided: return "undecided";
    }
    return "unknown";
}

SectorVerdict sector_test(double shifted_norm_estimate, double a, double b, double margin) {
    if (!(a < 0.0 && 0.0 < b)) throw std::invalid_argument("sector_test: need a < 0 < b");
    if (margin < 0.0) throw std::invalid_argument("sector_test: margin must be nonnegative");
    const double radius = 0.5 * (b - a);
    if (shifted_norm_estimate < radius - margin) return SectorVerdict::inside;
    if (shifted_norm_estimate > radius + margin) return SectorVerdict::outside;
    return SectorVerdict::undecided;
}

}  // namespace hinf
