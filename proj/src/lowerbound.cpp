#include "hinf/lowerbound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hinf/oracle.hpp"
#include "hinf/parallel.hpp"
#include "hinf/rng.hpp"
#include "hinf/signals.hpp"

namespace hinf {

namespace {

constexpr double kMaxExponent = 700.0;

McEstimate summarize(const std::vector<double>& xs) {
    McEstimate est;
    est.samples = xs.size();
    if (xs.empty()) return est;
    double sum = 0.0;
    for (double x : xs) sum += x;
    est.mean = sum / double(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - est.mean) * (x - est.mean);
        est.std_err = std::sqrt(ss / double(xs.size() - 1) / double(xs.size()));
    }
    return est;
}

double log_sum_exp(const std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

void check_sigma(double sigma, const char* who) {
    if (!(sigma > 0.0)) throw std::invalid_argument(std::string(who) + ": sigma must be positive");
}

}  // namespace

FinitePrior::FinitePrior(std::vector<CVec> s, std::optional<double> tau) : support(std::move(s)), active_tau(tau) {
    if (support.empty()) throw std::invalid_argument("FinitePrior: support must be nonempty");
    for (const auto& th : support)
        if (th.size() != support.front().size())
            throw DimensionError("FinitePrior: support vectors must share one length");
}

FinitePrior zero_prior(Index r) { return FinitePrior({CVec::Zero(r)}); }

const char* to_string(DivergenceMethod m) {
    switch (m) {
        case DivergenceMethod::closed_form: return "closed_form";
        case DivergenceMethod::enumeration: return "enumeration";
        case DivergenceMethod::monte_carlo: return "monte_carlo";
    }
    return "unknown";
}

void DivergenceReport::finalize() {
    double tv = 1.0;
    if (kl) tv = std::min(tv, std::sqrt(std::max(0.0, *kl) / 2.0));
    if (chi_sq) tv = std::min(tv, std::sqrt(std::max(0.0, *chi_sq)));
    tv_upper = tv;
}

nlohmann::json to_json(const DivergenceReport& r) {
    nlohmann::json j;
    j["kl"] = r.kl ? nlohmann::json(*r.kl) : nlohmann::json(nullptr);
    j["chi_sq"] = r.chi_sq ? nlohmann::json(*r.chi_sq) : nlohmann::json(nullptr);
    j["tv_upper"] = r.tv_upper;
    j["method"] = to_string(r.method);
    j["mc_std_err"] = r.mc_std_err ? nlohmann::json(*r.mc_std_err) : nlohmann::json(nullptr);
    if (r.closed_bound) j["closed_bound"] = *r.closed_bound;
    return j;
}

nlohmann::json to_json(const LeCamCertificate& c) {
    return {{"separation", c.separation}, {"tv_upper", c.tv_upper}, {"risk_lower", c.risk_lower}};
}

FinitePrior active_hard_prior(Index r, double tau) {
    if (r < 1) throw std::invalid_argument("active_hard_prior: r must be >= 1");
    if (!(tau > 0.0)) throw std::invalid_argument("active_hard_prior: tau must be positive");
    std::vector<CVec> support;
    support.reserve(static_cast<std::size_t>(r));
    for (Index i = 0; i < r; ++i) support.push_back(tau * inverse_dft_column(r, i));
    return FinitePrior(std::move(support), tau);
}

double active_tau(double sigma, double input_cap, Index r, std::size_t budget) {
    return sigma / input_cap * std::sqrt(double(r) / double(budget));
}

double active_kl_bound(double tau, std::size_t budget, double input_cap, double sigma, Index r) {
    return tau * tau * double(budget) * input_cap * input_cap / (2.0 * sigma * sigma * double(r));
}

double passive_tau(double sigma, Index r, std::size_t budget) {
    if (r < 5) throw std::invalid_argument("passive_tau: the construction needs r >= 5");
    return std::sqrt(sigma * sigma * double(r) * std::log(0.211 * double(r)) / (2.0 * double(budget)));
}

double passive_sample_requirement(Index r, double input_cap, double gamma) {
    const double lg = std::log(0.211 * double(r));
    return 2.0 / std::log(1.1) * double(r * r) * lg * lg * std::pow(input_cap, 4) / (gamma * gamma);
}

double kl_active_closed_form(std::span<const CVec> inputs, const CVec& theta, double sigma) {
    check_sigma(sigma, "kl_active_closed_form");
    double energy = 0.0;
    for (const auto& u : inputs) energy += convolve_truncated(theta, u, u.size()).squaredNorm();
    return energy / (2.0 * sigma * sigma);
}

DivergenceReport kl_mixture_upper(std::span<const CVec> inputs, const FinitePrior& prior, double sigma,
                                  double input_cap) {
    check_sigma(sigma, "kl_mixture_upper");
    for (const auto& u : inputs)
        if (u.norm() > input_cap * (1.0 + kInputCapSlack))
            throw InputTooLarge("kl_mixture_upper: an input exceeds the cap M");
    double kl = 0.0;
    for (const auto& th : prior.support) kl += kl_active_closed_form(inputs, th, sigma);
    DivergenceReport rep;
    rep.kl = kl * prior.weight();
    rep.method = DivergenceMethod::closed_form;
    if (prior.active_tau)
        rep.closed_bound = active_kl_bound(*prior.active_tau, inputs.size(), input_cap, sigma, prior.dim());
    rep.finalize();
    return rep;
}

double g_kernel(const CVec& theta1, const CVec& theta2, std::span<const CVec> inputs, double sigma) {
    check_sigma(sigma, "g_kernel");
    double exponent = 0.0;
    for (const auto& u : inputs) {
        const CVec a = convolve_truncated(theta1, u, u.size());
        const CVec b = convolve_truncated(theta2, u, u.size());
        exponent += a.dot(b).real();
    }
    exponent /= sigma * sigma;
    if (exponent > kMaxExponent)
        throw OverflowError("g_kernel: exponent " + std::to_string(exponent) + " overflows; scale tau down",
                            exponent);
    return std::exp(exponent);
}

DivergenceReport chi_sq_mixture(const FinitePrior& prior, std::span<const CVec> inputs, double sigma) {
    double total = 0.0;
    for (const auto& a : prior.support)
        for (const auto& b : prior.support) total += g_kernel(a, b, inputs, sigma);
    DivergenceReport rep;
    rep.chi_sq = std::max(0.0, total * prior.weight() * prior.weight() - 1.0);
    rep.method = DivergenceMethod::enumeration;
    rep.finalize();
    return rep;
}

CMat psd_sqrt(const CMat& sigma) {
    if (sigma.rows() != sigma.cols()) throw DimensionError("psd_sqrt: matrix must be square");
    const double scale = std::max(sigma.norm(), std::numeric_limits<double>::min());
    if ((sigma - sigma.adjoint()).norm() > 1e-10 * scale) throw NotPsdError("psd_sqrt: matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMat> es(sigma);
    RVec ev = es.eigenvalues();
    if (ev.minCoeff() < -1e-10 * scale)
        throw NotPsdError("psd_sqrt: eigenvalue " + std::to_string(ev.minCoeff()) + " is negative");
    ev = ev.cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

CMat psd_inv_sqrt(const CMat& sigma) {
    Eigen::SelfAdjointEigenSolver<CMat> es(sigma);
    const RVec ev = es.eigenvalues();
    if (ev.minCoeff() <= 1e-12 * std::max(ev.maxCoeff(), 0.0))
        throw NotPsdError("psd_inv_sqrt: matrix is singular or indefinite");
    return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
}

namespace {

SessionCovariance finish_covariance(CMat acc, std::size_t count) {
    SessionCovariance cov;
    cov.matrix = acc / double(count);
    cov.samples = count;
    Eigen::SelfAdjointEigenSolver<CMat> es(cov.matrix, Eigen::EigenvaluesOnly);
    cov.min_eigenvalue = es.eigenvalues().minCoeff();
    return cov;
}

}  // namespace

SessionCovariance session_covariance(std::span<const CVec> schedule) {
    if (schedule.empty()) throw std::invalid_argument("session_covariance: empty schedule");
    const Index dim = schedule.front().size();
    CMat acc = CMat::Zero(dim, dim);
    for (const auto& u : schedule) {
        const CMat t = toeplitz_matrix(u, dim);
        acc.noalias() += t.adjoint() * t;
    }
    return finish_covariance(std::move(acc), schedule.size());
}

SessionCovariance session_covariance(const std::function<CVec(Rng&)>& sampler, Index dim, std::size_t samples,
                                     std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("session_covariance: samples must be >= 1");
    Rng rng(seed);
    CMat acc = CMat::Zero(dim, dim);
    for (std::size_t s = 0; s < samples; ++s) {
        const CVec u = sampler(rng);
        if (u.size() != dim) throw DimensionError("session_covariance: sampler returned wrong length");
        const CMat t = toeplitz_matrix(u, dim);
        acc.noalias() += t.adjoint() * t;
    }
    return finish_covariance(std::move(acc), samples);
}

IndexSet admissible_index_set(const CMat& sigma) {
    const Index r = sigma.rows();
    Eigen::SelfAdjointEigenSolver<CMat> es(sigma, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 1e-12 * std::max(es.eigenvalues().maxCoeff(), 0.0))
        throw NotPsdError("admissible_index_set: Sigma is singular");
    const CMat f = dft_matrix(r);
    const CMat conj_root = f * psd_sqrt(sigma) * (f.adjoint() / double(r));
    IndexSet set;
    set.diag_values = conj_root.diagonal().real();
    set.mean = set.diag_values.mean();
    for (Index i = 0; i < r; ++i)
        if (set.diag_values(i) <= 2.0 * set.mean) set.indices.push_back(i);
    return set;
}

FinitePrior passive_hard_prior(const CMat& sigma, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("passive_hard_prior: tau must be positive");
    const Index r = sigma.rows();
    const IndexSet set = admissible_index_set(sigma);
    const CMat inv_root = psd_inv_sqrt(sigma);
    std::vector<CVec> support;
    for (Index i : set.indices) support.push_back(tau * inv_root * inverse_dft_column(r, i));
    return FinitePrior(std::move(support));
}

NormRange prior_norm_range(const FinitePrior& prior, double tol) {
    NormRange range{std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& th : prior.support) {
        const auto res = hinf_norm(FirFilter(th), tol);
        range.min = std::min(range.min, res.value);
        range.max = std::max(range.max, res.value + res.error_bound);
    }
    return range;
}

LeCamCertificate le_cam_certificate(const FinitePrior& prior1, const FinitePrior& prior2,
                                    const DivergenceReport& divergence) {
    const NormRange low = prior_norm_range(prior1);
    const NormRange high = prior_norm_range(prior2);
    const double c = 0.5 * (high.min - low.max);
    if (!(c > 0.0))
        throw std::invalid_argument("le_cam_certificate: priors are not separated (min over prior 2 = " +
                                    std::to_string(high.min) + ", max over prior 1 = " + std::to_string(low.max) +
                                    ")");
    LeCamCertificate cert;
    cert.separation = c;
    cert.tv_upper = std::clamp(divergence.tv_upper, 0.0, 1.0);
    cert.risk_lower = 0.5 * c * (1.0 - cert.tv_upper);
    return cert;
}

McEstimate empirical_bayes_risk(const EstimatorConfig& cfg, std::span<const FinitePrior> priors,
                                const SessionParams& session, std::size_t trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("empirical_bayes_risk: trials must be >= 1");
    if (priors.empty()) throw std::invalid_argument("empirical_bayes_risk: no priors");
    std::vector<double> errors(trials);
    parallel_for(trials, 0, [&](std::size_t i) {
        Rng rng(derive_seed({seed, i}));
        const auto& prior = priors[rng.index(priors.size())];
        const CVec& theta = prior.support[rng.index(prior.size())];
        FirFilter plant(theta);
        QuerySession s(plant, session.dim, session.input_cap, session.budget, {session.sigma, session.field},
                       derive_seed({seed, i, 1}));
        EstimatorConfig run_cfg = cfg;
        run_cfg.seed = derive_seed({seed, i, 2});
        const auto trace = run_estimator(s, run_cfg);
        const double truth = hinf_norm(plant, cfg.hinf_tol).value;
        errors[i] = std::abs(trace.final_estimate - truth);
    });
    return summarize(errors);
}

McEstimate estimate_tv_mc(const FinitePrior& prior1, const FinitePrior& prior2, std::span<const CVec> inputs,
                          double sigma, std::size_t samples, std::uint64_t seed) {
    check_sigma(sigma, "estimate_tv_mc");
    if (samples < 1) throw std::invalid_argument("estimate_tv_mc: samples must be >= 1");
    if (inputs.empty()) throw std::invalid_argument("estimate_tv_mc: no inputs");

    // Stacked noiseless responses T(theta) u_t for every support point.
    auto means_of = [&](const FinitePrior& p) {
        std::vector<CVec> out;
        for (const auto& th : p.support) {
            Index total = 0;
            for (const auto& u : inputs) total += u.size();
            CVec m(total);
            Index off = 0;
            for (const auto& u : inputs) {
                m.segment(off, u.size()) = convolve_truncated(th, u, u.size());
                off += u.size();
            }
            out.push_back(std::move(m));
        }
        return out;
    };
    const auto means1 = means_of(prior1);
    const auto means2 = means_of(prior2);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);

    auto log_mixture = [&](const std::vector<CVec>& means, const CVec& x) {
        std::vector<double> terms(means.size());
        for (std::size_t i = 0; i < means.size(); ++i) terms[i] = -(x - means[i]).squaredNorm() * inv2s2;
        return log_sum_exp(terms) - std::log(double(means.size()));
    };

    constexpr std::size_t kBlock = 4096;
    const std::size_t blocks = (samples + kBlock - 1) / kBlock;
    std::vector<std::size_t> hits1(blocks, 0), hits2(blocks, 0);
    parallel_for(blocks, 0, [&](std::size_t b) {
        Rng rng(derive_seed({seed, b}));
        const std::size_t count = std::min(kBlock, samples - b * kBlock);
        for (std::size_t s = 0; s < count; ++s) {
            for (int which = 0; which < 2; ++which) {
                const auto& means = which == 0 ? means1 : means2;
                CVec x = means[rng.index(means.size())];
                for (Index i = 0; i < x.size(); ++i) x(i) += rng.complex_normal(sigma);
                const bool in_set = log_mixture(means1, x) > log_mixture(means2, x);
                if (in_set) ++(which == 0 ? hits1[b] : hits2[b]);
            }
        }
    });
    std::size_t h1 = 0, h2 = 0;
    for (std::size_t b = 0; b < blocks; ++b) {
        h1 += hits1[b];
        h2 += hits2[b];
    }
    const double p1 = double(h1) / double(samples);
    const double p2 = double(h2) / double(samples);
    McEstimate est;
    est.mean = p1 - p2;
    est.std_err = std::sqrt((p1 * (1.0 - p1) + p2 * (1.0 - p2)) / double(samples));
    est.samples = samples;
    return est;
}

}  // namespace hinf
