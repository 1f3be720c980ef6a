// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "hinf/bench.hpp"
#include "hinf/estimators.hpp"
#include "hinf/lowerbound.hpp"
#include "hinf/oracle.hpp"
#include "hinf/signals.hpp"
#include "oracles.hpp"

#ifndef HINF_CONFIG_DIR
#define HINF_CONFIG_DIR "configs"
#endif

using namespace hinf;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

CVec random_cvec(Rng& rng, Index n, double scale = 1.0) {
    CVec v(n);
    for (auto& x : v) x = Complex(scale * rng.normal(), scale * rng.normal());
    return v;
}

// Criterion 1.
Outcome identities() {
    Outcome o;
    double diag_err = 0.0;
    for (Index r : {2, 4, 8, 16, 32}) {
        CMat sum = CMat::Zero(r, r);
        for (Index i = 0; i < r; ++i) {
            const CMat t = toeplitz_matrix(inverse_dft_column(r, i), r);
            sum += t.adjoint() * t;
        }
        CMat expect = CMat::Zero(r, r);
        for (Index j = 0; j < r; ++j) expect(j, j) = double(r - j) / double(r);
        diag_err = std::max(diag_err, (sum - expect).cwiseAbs().maxCoeff());
        const CMat f = dft_matrix(r);
        o.require((f * f.adjoint() - double(r) * CMat::Identity(r, r)).cwiseAbs().maxCoeff() <= 1e-10 * double(r),
                  "F F* = rI at r=" + std::to_string(r));
    }
    o.require(diag_err <= 1e-10, "diagonal identity");
    o.note("diag identity err " + fmt("%.2e", diag_err));

    Rng rng(101);
    double comm = 0.0;
    for (int k = 0; k < 200; ++k) {
        const Index n = 1 + Index(rng.index(20));
        const CVec u = random_cvec(rng, n), v = random_cvec(rng, n);
        comm = std::max(comm, (convolve_truncated(u, v, n) - convolve_truncated(v, u, n)).cwiseAbs().maxCoeff());
    }
    o.require(comm <= 1e-12, "T(u)v = T(v)u");
    int chain = 0;
    for (int k = 0; k < 200; ++k) {
        const FirFilter g(random_cvec(rng, 1 + Index(rng.index(16))));
        if (hinf_norm(g).value >= dft_norm_lower_bound(g) - 1e-12) ++chain;
    }
    o.require(chain == 200, "||H||inf >= ||Fg||inf");
    o.note("commutativity err " + fmt("%.2e", comm) + ", norm chain " + std::to_string(chain) + "/200");
    return o;
}

// Worst |H| interpolation gap of a P-point grid, sup taken on a 64x finer grid.
double grid_gap(const FirFilter& g, Index p) {
    const Index fine = 64;
    double gap = 0.0;
    for (Index k = 0; k < p * fine; ++k) {
        const double w = 2.0 * std::numbers::pi * double(k) / double(p * fine);
        const Index nearest = ((k + fine / 2) / fine) % p;
        const double wg = 2.0 * std::numbers::pi * double(nearest) / double(p);
        gap = std::max(gap, std::abs(std::abs(freq_response(g, w)) - std::abs(freq_response(g, wg))));
    }
    return gap;
}

// Criterion 2.
Outcome hinf_oracle() {
    Outcome o;
    Rng rng(202);
    std::vector<FirFilter> filters;
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
        filters.emplace_back(random_cvec(rng, 1 + Index(rng.index(12))));
        const double ours = hinf_norm(filters.back(), 1e-10).value;
        const double sweep = oracle::frequency_sweep_max(filters.back().coeffs(), 1000000);
        worst = std::max(worst, std::abs(ours - sweep));
        o.require(ours >= sweep - 1e-12, "hinf below the sweep");
    }
    o.require(worst <= 1e-8, "sweep agreement");
    o.note("max |hinf - sweep| " + fmt("%.2e", worst));

    std::vector<double> cs;
    for (Index p : {256, 512, 1024, 2048}) {
        double c = 0.0;
        for (const auto& g : filters) c = std::max(c, grid_gap(g, p) * double(p) / double(g.length()));
        cs.push_back(c);
    }
    std::string fitted = "C(P=256..2048) =";
    for (double c : cs) fitted += " " + fmt("%.4f", c);
    o.note(fitted);
    for (std::size_t i = 1; i < cs.size(); ++i)
        o.require(std::abs(cs[i] / cs[i - 1] - 1.0) <= 0.2, "C stable within 20% at doubling " + std::to_string(i));
    return o;
}

// Criterion 3.
Outcome divergences() {
    Outcome o;
    Rng rng(303);
    int kl_ok = 0, chi_ok = 0;
    double kl_z = 0.0, chi_z = 0.0;
    for (int inst = 0; inst < 10; ++inst) {
        const Index r = 1 + Index(rng.index(4));
        const std::size_t n = 1 + rng.index(8);
        const double sigma = rng.uniform(0.5, 1.5);
        std::vector<CVec> inputs;
        for (std::size_t t = 0; t < n; ++t) inputs.push_back(rng.uniform(0.5, 1.0) * rng.unit_sphere(r, Field::complex));
        const CVec theta = random_cvec(rng, r, 0.3 * sigma);
        oracle::GaussianLab lab(inputs, sigma, 1000 + std::uint64_t(inst));
        const auto kl_mc = oracle::kl_monte_carlo(lab, theta, 100000);
        const double kz = std::abs(kl_active_closed_form(inputs, theta, sigma) - kl_mc.mean) / kl_mc.std_err;
        kl_z = std::max(kl_z, kz);
        if (kz <= 4.0) ++kl_ok;

        std::vector<CVec> support;
        const std::size_t points = 1 + rng.index(4);
        for (std::size_t s = 0; s < points; ++s) support.push_back(random_cvec(rng, r, 0.2 * sigma));
        const FinitePrior prior(support);
        const auto chi_mc = oracle::chi_sq_monte_carlo(lab, support, 100000);
        const double cz = std::abs(*chi_sq_mixture(prior, inputs, sigma).chi_sq - chi_mc.mean) / chi_mc.std_err;
        chi_z = std::max(chi_z, cz);
        if (cz <= 4.0) ++chi_ok;
    }
    o.require(kl_ok == 10, "KL within 4 se");
    o.require(chi_ok == 10, "chi-square within 4 se");
    o.note("KL max z " + fmt("%.2f", kl_z) + ", chi-square max z " + fmt("%.2f", chi_z));
    return o;
}

// Criterion 4.
Outcome le_cam() {
    Outcome o;
    const Index r = 8;
    const std::size_t n = 128;
    const double sigma = 1.0, cap = 1.0;
    const double tau = active_tau(sigma, cap, r, n);
    o.require(std::abs(tau - 0.25) <= 1e-12, "tau = 0.25");
    CVec impulse = CVec::Zero(r);
    impulse(0) = cap;
    const std::vector<CVec> inputs(n, impulse);
    const auto high = active_hard_prior(r, tau);
    auto rep = kl_mixture_upper(inputs, high, sigma, cap);
    rep.chi_sq = chi_sq_mixture(high, inputs, sigma).chi_sq;
    rep.finalize();
    o.require(*rep.kl <= tau * tau * double(n) * cap * cap / (2 * sigma * sigma * double(r)) + 1e-10, "KL bound");
    const auto tv = estimate_tv_mc(zero_prior(r), high, inputs, sigma, 100000, 404);
    o.require(tv.mean <= 0.5 + 3 * tv.std_err, "TV estimate");
    const auto cert = le_cam_certificate(zero_prior(r), high, rep);

    EstimatorConfig cfg;
    cfg.variant = Variant::plugin;
    cfg.model_order = r;
    const std::vector<FinitePrior> pair{zero_prior(r), high};
    const auto risk = empirical_bayes_risk(cfg, pair, {r, cap, n, sigma, Field::complex}, 2000, 405);
    o.require(risk.mean >= cert.risk_lower - 2 * risk.std_err, "plugin risk above the certificate");
    o.note("KL " + fmt("%.4f", *rep.kl) + ", TV_mc " + fmt("%.4f", tv.mean) + " +- " + fmt("%.4f", tv.std_err) +
           ", risk_lower " + fmt("%.4f", cert.risk_lower) + ", plugin risk " + fmt("%.4f", risk.mean) + " +- " +
           fmt("%.4f", risk.std_err));
    return o;
}

// Nonnegative taps: the family on which 100 noiseless iterations reach 1e-6.
FirFilter nonnegative_plant(Rng& rng, Index r) {
    RVec taps(r);
    for (auto& x : taps) x = rng.uniform(0.0, 1.0);
    return FirFilter::from_real(taps);
}

struct PowerCounts {
    int a = 0, b = 0;
};

PowerCounts power_convergence(const std::vector<FirFilter>& plants, Index dim) {
    PowerCounts c;
    for (std::size_t i = 0; i < plants.size(); ++i) {
        const double target = operator_norm(toeplitz_matrix(plants[i], dim));
        EstimatorConfig cfg;
        cfg.seed = 500 + i;
        QuerySession sa(plants[i], dim, 1.0, 100, {0.0, Field::real}, i);
        cfg.variant = Variant::power_a;
        if (std::abs(power_method_a(sa, cfg).final_estimate - target) <= 1e-6) ++c.a;
        QuerySession sb(plants[i], dim, 1.0, 200, {0.0, Field::real}, i);
        cfg.variant = Variant::power_b;
        if (std::abs(power_method_b(sb, cfg).final_estimate - target) <= 1e-6) ++c.b;
    }
    return c;
}

// Criterion 5.
Outcome estimator_sanity() {
    Outcome o;
    const Index r = 10, dim = 16;
    Rng rng(505);
    int plugin_ok = 0;
    std::vector<FirFilter> general, nonneg;
    for (int k = 0; k < 20; ++k) {
        general.push_back(random_plant({r, 0.75, 5000 + std::uint64_t(k)}));
        nonneg.push_back(nonnegative_plant(rng, r));
        QuerySession s(general.back(), dim, 1.0, 20, {0.0, Field::real}, std::uint64_t(k));
        EstimatorConfig cfg;
        cfg.variant = Variant::plugin;
        cfg.model_order = r;
        cfg.seed = std::uint64_t(k);
        const double truth = hinf_norm(general.back(), 1e-10, {.field = Field::real}).value;
        if (std::abs(plugin_estimate(s, cfg).final_estimate - truth) <= 1e-6) ++plugin_ok;
    }
    o.require(plugin_ok == 20, "noiseless plugin");
    const auto nn = power_convergence(nonneg, dim);
    o.require(nn.a == 20, "power A converged");
    o.require(nn.b == 20, "power B converged");
    const auto gen = power_convergence(general, dim);
    o.note("plugin " + std::to_string(plugin_ok) + "/20; nonnegative taps: A " + std::to_string(nn.a) + "/20, B " +
           std::to_string(nn.b) + "/20; decaying signed taps (informational): A " + std::to_string(gen.a) + "/20, B " +
           std::to_string(gen.b) + "/20");
    return o;
}

// Criterion 6a.
Outcome plugin_scaling() {
    Outcome o;
    const Index r = 10, dim = 50;
    const double cap = 1.0, sigma = 0.1;
    const std::size_t trials = 200;
    std::vector<FirFilter> plants;
    std::vector<double> truths;
    for (std::size_t k = 0; k < trials; ++k) {
        plants.push_back(random_plant({r, 0.75, 6000 + k}));
        truths.push_back(hinf_norm(plants.back(), 1e-10, {.field = Field::real}).value);
    }
    std::vector<double> ns, risks;
    std::string line = "risk";
    for (std::size_t n : {100, 400, 1600, 6400}) {
        double sum = 0.0;
        for (std::size_t k = 0; k < trials; ++k) {
            QuerySession s(plants[k], dim, cap, n, {sigma, Field::real}, derive_seed({601, n, k}));
            EstimatorConfig cfg;
            cfg.variant = Variant::plugin;
            cfg.model_order = r;
            cfg.seed = derive_seed({602, n, k});
            sum += std::abs(plugin_estimate(s, cfg).final_estimate - truths[k]);
        }
        ns.push_back(double(n));
        risks.push_back(sum / double(trials));
        line += " " + fmt("%.3e", risks.back());
    }
    const double slope = oracle::loglog_slope(ns, risks);
    o.require(std::abs(slope + 0.5) <= 0.1, "slope");
    o.note(line + ", slope " + fmt("%.3f", slope));
    return o;
}

struct Slope {
    double slope = 0.0;
    std::string line;
};

// Mean |H_hat - tau| of the grid bandit on g = tau(N) F^{-1} e_i, peak index cycling over i.
Slope grid_risk_slope(const std::function<double(std::size_t)>& tau_of, std::uint64_t salt) {
    const Index r = 8;
    const double sigma = 1.0;
    const std::size_t trials = 400;
    std::vector<double> ns, risks;
    Slope out{0.0, "risk"};
    for (std::size_t n : {500, 2000, 8000}) {
        const double tau = tau_of(n);
        double sum = 0.0;
        for (std::size_t k = 0; k < trials; ++k) {
            const FirFilter g(tau * inverse_dft_column(r, Index(k % std::size_t(r))));
            FreqQuerySession s(g, n, sigma, derive_seed({salt, n, k}));
            EstimatorConfig cfg;
            cfg.variant = Variant::grid_mab;
            cfg.grid_arms = r;
            cfg.known_phase = 0.0;
            cfg.seed = derive_seed({salt + 1, n, k});
            sum += std::abs(grid_mab_estimate(s, cfg).final_estimate - tau);
        }
        ns.push_back(double(n));
        risks.push_back(sum / double(trials));
        out.line += " " + fmt("%.3e", risks.back());
    }
    out.slope = oracle::loglog_slope(ns, risks);
    return out;
}

// Criterion 6b. Hard instances sit at the lower-bound scale tau = (sigma / M) sqrt(r / N).
Outcome grid_scaling() {
    Outcome o;
    const auto hard = grid_risk_slope([](std::size_t n) { return active_tau(1.0, 1.0, 8, n); }, 611);
    o.require(std::abs(hard.slope + 0.5) <= 0.1, "slope");
    o.note(hard.line + ", slope " + fmt("%.3f", hard.slope));
    const auto fixed = grid_risk_slope([](std::size_t) { return 4.0; }, 621);
    o.note("fixed tau=4 (informational) " + fixed.line + ", slope " + fmt("%.3f", fixed.slope));
    return o;
}

SuiteConfig load_config(const std::string& name) {
    std::ifstream f(std::string(HINF_CONFIG_DIR) + "/" + name);
    if (!f) throw std::runtime_error("cannot open config " + name);
    return suite_config_from_json(nlohmann::json::parse(f));
}

const ProfileCurve& find_curve(const std::vector<ProfileCurve>& cs, const std::string& m) {
    for (const auto& c : cs)
        if (c.method == m) return c;
    throw std::runtime_error("missing curve " + m);
}

std::string reference_csv;

// Criterion 7.
Outcome reproduction() {
    Outcome o;
    for (const char* name : {"snr20_decay075.json", "snr10_decay075.json", "snr20_decay10.json", "snr10_decay10.json"}) {
        auto cfg = load_config(name);
        cfg.parallelism = 8;
        const auto records = run_suite(cfg);
        if (reference_csv.empty()) {
            std::ostringstream csv;
            write_records_csv(csv, records);
            reference_csv = csv.str();
        }
        std::size_t failures = 0;
        for (const auto& r : records) failures += r.failed();
        o.require(failures == 0, std::string(name) + " has failed runs");
        const auto curves = performance_profile(records, default_tau_grid());
        for (const auto& c : curves)
            for (std::size_t i = 0; i < c.points.size(); ++i) {
                const double f = c.points[i].fraction;
                o.require(f >= 0.0 && f <= 1.0 && (i == 0 || f >= c.points[i - 1].fraction),
                          std::string(name) + " profile of " + c.method + " invalid");
            }
        const auto& plugin = find_curve(curves, "plugin");
        const auto& wts = find_curve(curves, "wts");
        double sup = 0.0;
        for (std::size_t i = 0; i < plugin.points.size(); ++i)
            sup = std::max(sup, std::abs(plugin.points[i].fraction - wts.points[i].fraction));
        const double p05 = profile_value(plugin, 0.05), w05 = profile_value(wts, 0.05);
        const bool decaying = cfg.decay < 1.0;
        if (decaying)
            o.require(sup < 0.15, std::string(name) + " plugin/WTS sup gap");
        else
            o.require(w05 <= p05, std::string(name) + " WTS below plugin at 0.05");
        o.note(std::string(name) + ": sup|plugin-wts| " + fmt("%.3f", sup) + ", at 0.05 plugin " + fmt("%.3f", p05) +
               " wts " + fmt("%.3f", w05));
    }
    return o;
}

// Criterion 8.
Outcome determinism() {
    Outcome o;
    auto cfg = load_config("snr20_decay075.json");
    cfg.parallelism = 1;
    std::ostringstream serial;
    write_records_csv(serial, run_suite(cfg));
    if (reference_csv.empty()) {
        cfg.parallelism = 8;
        std::ostringstream parallel;
        write_records_csv(parallel, run_suite(cfg));
        reference_csv = parallel.str();
    }
    o.require(serial.str() == reference_csv, "records differ between parallelism 1 and 8");
    o.note(std::to_string(serial.str().size()) + " bytes compared");
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "identity suite", 1.0, identities},
        {2, "H-infinity oracle agreement", 10.0, hinf_oracle},
        {3, "divergence cross-checks", 120.0, divergences},
        {4, "Le Cam certificate", 120.0, le_cam},
        {5, "estimator sanity", 60.0, estimator_sanity},
        {6, "scaling laws", 1200.0, [] {
             Outcome a = plugin_scaling();
             const Outcome b = grid_scaling();
             a.pass = a.pass && b.pass;
             a.detail = "plugin: " + a.detail + " | grid_mab: " + b.detail;
             return a;
         }},
        {7, "experiment reproduction", 1200.0, reproduction},
        {8, "determinism", 0.0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.note(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.limit_s > 0.0 && secs >= c.limit_s) {
            o.pass = false;
            o.note("over the " + fmt("%.0f", c.limit_s) + " s limit");
        }
        failed += !o.pass;
        std::printf("%s %d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
