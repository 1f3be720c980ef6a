#include "hinf/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hinf/bench.hpp"
#include "hinf/estimators.hpp"
#include "hinf/json_io.hpp"
#include "hinf/lowerbound.hpp"
#include "hinf/oracle.hpp"
#include "hinf/signals.hpp"

namespace hinf {

namespace {

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError(path + ": " + e.what());
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

struct RunArgs {
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> parallelism;
    std::string methods;
};

int do_run(const RunArgs& a, std::ostream& out) {
    SuiteConfig cfg;
    try {
        cfg = suite_config_from_json(read_json_file(a.config));
        if (a.seed) cfg.master_seed = *a.seed;
        if (a.parallelism) cfg.parallelism = *a.parallelism;
        if (!a.methods.empty()) {
            std::vector<MethodSpec> keep;
            for (const auto& name : split_list(a.methods)) {
                auto it = std::find_if(cfg.methods.begin(), cfg.methods.end(),
                                       [&](const MethodSpec& m) { return m.name == name; });
                if (it != cfg.methods.end()) {
                    keep.push_back(*it);
                } else {
                    MethodSpec m;
                    m.name = name;
                    m.config.variant = variant_from_string(name);
                    keep.push_back(m);
                }
            }
            cfg.methods = keep;
        }
        cfg.validate();
    } catch (const UsageError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    std::filesystem::create_directories(a.out_dir);
    const auto records = run_suite(cfg);
    const auto csv_path = std::filesystem::path(a.out_dir) / "records.csv";
    const auto summary_path = std::filesystem::path(a.out_dir) / "summary.json";
    {
        std::ofstream f(csv_path);
        write_records_csv(f, records);
        if (!f) throw std::runtime_error("failed to write " + csv_path.string());
    }
    {
        std::ofstream f(summary_path);
        f << suite_summary(cfg, records).dump(2) << '\n';
        if (!f) throw std::runtime_error("failed to write " + summary_path.string());
    }
    out << "wrote " << records.size() << " records to " << csv_path.string() << '\n';
    return 0;
}

struct ProfileArgs {
    std::string records;
    std::string out;
    double tau_max = 0.5;
    int tau_points = 101;
};

int do_profile(const ProfileArgs& a, std::ostream& out) {
    if (a.tau_points < 2 || !(a.tau_max > 0.0)) throw UsageError("--tau-points must be >= 2 and --tau-max > 0");
    std::ifstream in(a.records);
    if (!in) throw UsageError("cannot open " + a.records);
    std::vector<RunRecord> records;
    try {
        records = read_records_csv(in);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    std::vector<double> taus(static_cast<std::size_t>(a.tau_points));
    for (std::size_t i = 0; i < taus.size(); ++i) taus[i] = a.tau_max * double(i) / double(taus.size() - 1);
    const auto curves = performance_profile(records, taus);
    if (a.out.empty() || a.out == "-") {
        write_profile_csv(out, curves);
    } else {
        std::ofstream f(a.out);
        write_profile_csv(f, curves);
        if (!f) throw std::runtime_error("failed to write " + a.out);
    }
    return 0;
}

struct CertifyArgs {
    Index r = 8;
    std::size_t budget = 128;
    double sigma = 1.0;
    double cap = 1.0;
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
    std::string schedule = "impulse";
    std::string out;
};

int do_certify(const CertifyArgs& a, std::ostream& out) {
    if (a.r < 1 || a.budget < 1 || !(a.sigma > 0.0) || !(a.cap > 0.0))
        throw UsageError("certify needs r >= 1, N >= 1, sigma > 0 and M > 0");
    const double tau = active_tau(a.sigma, a.cap, a.r, a.budget);
    const auto hard = active_hard_prior(a.r, tau);
    const auto null = zero_prior(a.r);

    std::vector<CVec> inputs;
    Rng rng(derive_seed({a.seed, 0x696e70ULL}));
    for (std::size_t t = 0; t < a.budget; ++t) {
        if (a.schedule == "impulse") {
            CVec u = CVec::Zero(a.r);
            u(0) = a.cap;
            inputs.push_back(u);
        } else if (a.schedule == "random") {
            inputs.push_back(a.cap * rng.unit_sphere(a.r, Field::complex));
        } else {
            throw UsageError("--schedule must be impulse or random");
        }
    }

    DivergenceReport report = kl_mixture_upper(inputs, hard, a.sigma, a.cap);
    try {
        report.chi_sq = chi_sq_mixture(hard, inputs, a.sigma).chi_sq;
    } catch (const OverflowError&) {
        // chi-square is optional; KL alone still certifies.
    }
    report.finalize();
    const auto cert = le_cam_certificate(null, hard, report);
    const auto tv = estimate_tv_mc(null, hard, inputs, a.sigma, a.samples, a.seed);

    nlohmann::json j{{"r", a.r},
                     {"N", a.budget},
                     {"sigma", a.sigma},
                     {"M", a.cap},
                     {"tau", tau},
                     {"schedule", a.schedule},
                     {"divergence", to_json(report)},
                     {"certificate", to_json(cert)},
                     {"tv_monte_carlo", {{"estimate", tv.mean}, {"std_err", tv.std_err}, {"samples", tv.samples}}}};
    if (a.out.empty() || a.out == "-") {
        out << j.dump(2) << '\n';
    } else {
        std::ofstream f(a.out);
        f << j.dump(2) << '\n';
        if (!f) throw std::runtime_error("failed to write " + a.out);
    }
    return 0;
}

struct TruthArgs {
    std::string filter;
    double tol = 1e-9;
    bool real = false;
};

int do_truth(const TruthArgs& a, std::ostream& out) {
    const auto j = read_json_file(a.filter);
    CVec taps;
    try {
        taps = from_json_taps(j.is_object() ? j.at("taps") : j);
    } catch (const std::exception& e) {
        throw UsageError(a.filter + ": expected {\"taps\": [...]} or a taps array (" + e.what() + ")");
    }
    FirFilter g(taps);
    HinfOptions opts;
    opts.field = a.real || g.is_real() ? Field::real : Field::complex;
    const auto res = hinf_norm(g, a.tol, opts);
    nlohmann::json o{{"hinf", res.value},
                     {"error_bound", res.error_bound},
                     {"argmax_freq", res.argmax_freq},
                     {"grid_points", res.grid_points}};
    out << o.dump(2) << '\n';
    return 0;
}

struct ReplayArgs {
    std::string transcript;
    std::string method;
    std::uint64_t seed = 0;
    double sigma = 0.0;
    Index model_order = 0;
    Index bins = 0;
    double prior_std = 1.0;
    int posterior_samples = EstimatorConfig{}.posterior_samples;
    std::optional<double> cap;
};

int do_replay(const ReplayArgs& a, std::ostream& out) {
    std::ifstream in(a.transcript);
    if (!in) throw UsageError("cannot open " + a.transcript);
    EstimatorConfig cfg;
    try {
        cfg.variant = variant_from_string(a.method);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (cfg.variant == Variant::grid_mab) throw UsageError("grid_mab transcripts are not replayable");
    cfg.seed = a.seed;
    cfg.noise_sigma = a.sigma;
    cfg.model_order = a.model_order;
    cfg.bins = a.bins;
    cfg.prior_std = a.prior_std;
    cfg.posterior_samples = a.posterior_samples;
    ReplaySession replay = ReplaySession::from_jsonl(in, a.cap);
    const auto trace = run_estimator(replay, cfg);
    out << to_json(trace).dump() << '\n';
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"H-infinity norm estimation toolkit"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run a benchmark suite from a JSON config");
    run->add_option("--config", run_args.config, "Suite config JSON")->required();
    run->add_option("--out", run_args.out_dir, "Output directory")->required();
    run->add_option("--seed", run_args.seed, "Override master seed");
    run->add_option("--parallelism", run_args.parallelism, "Worker threads");
    run->add_option("--methods", run_args.methods, "Comma-separated method names");

    ProfileArgs profile_args;
    auto* profile = app.add_subcommand("profile", "Performance profiles from a records CSV");
    profile->add_option("--records", profile_args.records, "Records CSV")->required();
    profile->add_option("--out", profile_args.out, "Output CSV (default stdout)");
    profile->add_option("--tau-max", profile_args.tau_max, "Largest tau");
    profile->add_option("--tau-points", profile_args.tau_points, "Number of tau grid points");

    CertifyArgs certify_args;
    auto* certify = app.add_subcommand("certify", "Le Cam certificate for the active hard instance");
    certify->add_option("--r", certify_args.r, "Filter length");
    certify->add_option("--N", certify_args.budget, "Query budget");
    certify->add_option("--sigma", certify_args.sigma, "Noise std per component");
    certify->add_option("--M", certify_args.cap, "Input norm cap");
    certify->add_option("--samples", certify_args.samples, "Monte Carlo samples for the TV estimate");
    certify->add_option("--seed", certify_args.seed, "Monte Carlo seed");
    certify->add_option("--schedule", certify_args.schedule, "impulse or random");
    certify->add_option("--out", certify_args.out, "Output JSON (default stdout)");

    TruthArgs truth_args;
    auto* truth = app.add_subcommand("truth", "H-infinity norm of a filter file");
    truth->add_option("--filter", truth_args.filter, "JSON taps file")->required();
    truth->add_option("--tol", truth_args.tol, "Absolute tolerance");
    truth->add_flag("--real", truth_args.real, "Search only [0, pi]");

    ReplayArgs replay_args;
    auto* replay = app.add_subcommand("replay", "Re-run an estimator against a recorded transcript");
    replay->add_option("--transcript", replay_args.transcript, "JSON lines transcript")->required();
    replay->add_option("--method", replay_args.method, "plugin, power_a, power_b or wts")->required();
    replay->add_option("--seed", replay_args.seed, "Estimator seed used in the original run");
    replay->add_option("--sigma", replay_args.sigma, "Noise level given to WTS");
    replay->add_option("--model-order", replay_args.model_order, "Plugin model order");
    replay->add_option("--bins", replay_args.bins, "WTS bins");
    replay->add_option("--prior-std", replay_args.prior_std, "WTS prior std");
    replay->add_option("--posterior-samples", replay_args.posterior_samples, "WTS posterior samples");
    replay->add_option("--cap", replay_args.cap, "Input cap M (default: largest recorded input norm)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n' << app.help();
        return 1;
    }

    try {
        if (*run) return do_run(run_args, out);
        if (*profile) return do_profile(profile_args, out);
        if (*certify) return do_certify(certify_args, out);
        if (*truth) return do_truth(truth_args, out);
        if (*replay) return do_replay(replay_args, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"hinf"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace hinf
