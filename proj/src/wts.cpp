#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "hinf/estimators.hpp"

namespace hinf {

namespace {

std::vector<Complex> fft(const CVec& x) {
    std::vector<Complex> in(x.data(), x.data() + x.size()), out;
    Eigen::FFT<double> f;
    f.fwd(out, in);
    return out;
}

bool is_self_mirrored(Index idx, Index dim) { return idx == 0 || (dim % 2 == 0 && idx == dim / 2); }

}  // namespace

Index default_wts_bins(Index dim, Field field) { return field == Field::real ? dim / 2 + 1 : dim; }

Index bin_to_dft_index(Index k, Index bins, Index dim, Field field) {
    const Index max_bins = default_wts_bins(dim, field);
    if (bins < 1 || bins > max_bins)
        throw DimensionError("bin count " + std::to_string(bins) + " must lie in [1, " + std::to_string(max_bins) +
                             "]");
    if (k < 0 || k >= bins) throw DimensionError("bin index out of range");
    if (field == Field::complex) return k * dim / bins;
    if (bins == 1) return 0;
    return k * (dim / 2) / (bins - 1);
}

CVec power_profile_to_input(std::span<const double> profile, Index dim, double input_cap, Field field,
                            PhaseRule phase_rule, Rng* rng) {
    const Index bins = static_cast<Index>(profile.size());
    double total = 0.0;
    for (double p : profile) {
        if (!(p >= 0.0)) throw std::invalid_argument("power profile entries must be nonnegative");
        total += p;
    }
    if (!(total > 0.0)) throw std::invalid_argument("power profile must have positive mass");
    if (phase_rule == PhaseRule::random && rng == nullptr)
        throw std::invalid_argument("random phases need an Rng");

    std::vector<Complex> spectrum(static_cast<std::size_t>(dim), Complex(0.0));
    for (Index k = 0; k < bins; ++k) {
        const double p = profile[static_cast<std::size_t>(k)];
        if (p == 0.0) continue;
        const Index idx = bin_to_dft_index(k, bins, dim, field);
        double phase = 0.0;
        if (phase_rule == PhaseRule::random) {
            if (field == Field::real && is_self_mirrored(idx, dim))
                phase = rng->uniform() < 0.5 ? 0.0 : std::numbers::pi;
            else
                phase = 2.0 * std::numbers::pi * rng->uniform();
        }
        if (field == Field::real && !is_self_mirrored(idx, dim)) {
            const Complex c = std::polar(std::sqrt(p / 2.0), phase);
            spectrum[static_cast<std::size_t>(idx)] = c;
            spectrum[static_cast<std::size_t>(dim - idx)] = std::conj(c);
        } else {
            spectrum[static_cast<std::size_t>(idx)] = std::polar(std::sqrt(p), phase);
        }
    }
    std::vector<Complex> time;
    Eigen::FFT<double> f;
    f.inv(time, spectrum);
    CVec u(dim);
    for (Index n = 0; n < dim; ++n) {
        const Complex v = time[static_cast<std::size_t>(n)];
        u(n) = field == Field::real ? Complex(v.real(), 0.0) : v;
    }
    return u * (input_cap / u.norm());
}

WtsPosterior wts_posterior(Complex weighted_sum, double power_sum, double prior_std, double sigma) {
    const double lambda2 = prior_std * prior_std;
    const double sigma2 = sigma * sigma;
    if (sigma2 == 0.0) {
        if (power_sum > 0.0) return {weighted_sum / power_sum, 0.0};
        return {Complex(0.0), lambda2};
    }
    return {lambda2 * weighted_sum / (sigma2 + lambda2 * power_sum), lambda2 / (1.0 + lambda2 / sigma2 * power_sum)};
}

EstimateTrace wts_estimate(QuerySource& src, const EstimatorConfig& cfg) {
    validate(cfg);
    const Index dim = src.dim();
    const Field field = src.field();
    const Index bins = cfg.bins == 0 ? default_wts_bins(dim, field) : cfg.bins;
    if (bins > default_wts_bins(dim, field))
        throw DimensionError("wts: bin count exceeds what L = " + std::to_string(dim) + " supports");
    const std::size_t n = src.remaining();
    if (n < 1) throw BudgetExceeded("wts: no budget left");

    const double floor = 1e-3 / double(bins);
    Rng rng(derive_seed({cfg.seed, 0x777473ULL}));

    std::vector<Index> dft_index(static_cast<std::size_t>(bins));
    for (Index k = 0; k < bins; ++k) dft_index[static_cast<std::size_t>(k)] = bin_to_dft_index(k, bins, dim, field);

    std::vector<double> rho(static_cast<std::size_t>(bins), 1.0 / double(bins));
    std::vector<double> power_sum(static_cast<std::size_t>(bins), 0.0);
    std::vector<Complex> weighted_sum(static_cast<std::size_t>(bins), Complex(0.0));
    std::vector<Complex> post_mean(static_cast<std::size_t>(bins));
    std::vector<double> post_sd(static_cast<std::size_t>(bins));
    std::vector<int> wins(static_cast<std::size_t>(bins));

    EstimateTrace trace;
    trace.variant = Variant::wts;
    for (std::size_t t = 0; t < n; ++t) {
        const CVec u = power_profile_to_input(rho, dim, src.input_cap(), field, cfg.phase_rule, &rng);
        const CVec y = src.query(u);
        ++trace.queries_used;
        const auto uf = fft(u);
        const auto yf = fft(y);

        for (std::size_t k = 0; k < rho.size(); ++k) {
            // Bins with negligible excitation would divide by ~0.
            if (rho[k] < floor) continue;
            const auto idx = static_cast<std::size_t>(dft_index[k]);
            const Complex x = yf[idx] / uf[idx];
            power_sum[k] += rho[k];
            weighted_sum[k] += rho[k] * x;
        }

        for (std::size_t k = 0; k < rho.size(); ++k) {
            const auto post = wts_posterior(weighted_sum[k], power_sum[k], cfg.prior_std, cfg.noise_sigma);
            post_mean[k] = post.mean;
            post_sd[k] = std::sqrt(post.variance);
        }

        std::fill(wins.begin(), wins.end(), 0);
        for (int l = 0; l < cfg.posterior_samples; ++l) {
            std::size_t best = 0;
            double best_mag = -1.0;
            for (std::size_t k = 0; k < rho.size(); ++k) {
                // N_C(m, v): total variance v split evenly across the parts.
                const double s = post_sd[k] * std::numbers::sqrt2 / 2.0;
                const double mag = std::norm(post_mean[k] + Complex(s * rng.normal(), s * rng.normal()));
                if (mag > best_mag) {
                    best_mag = mag;
                    best = k;
                }
            }
            ++wins[best];
        }
        for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = double(wins[k]) / double(cfg.posterior_samples);

        double est = 0.0;
        for (std::size_t k = 0; k < rho.size(); ++k)
            if (power_sum[k] > 0.0) est = std::max(est, std::abs(weighted_sum[k] / power_sum[k]));
        trace.per_round.push_back(est);
    }
    trace.final_estimate = trace.per_round.back();
    return trace;
}

}  // namespace hinf
