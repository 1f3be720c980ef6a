#include "hinf/signals.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace hinf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Index next_pow2(Index n) {
    Index p = 1;
    while (p < n) p <<= 1;
    return p;
}

double golden_section_max(const FirFilter& g, double lo, double hi, double& arg) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto f = [&](double w) { return std::abs(freq_response(g, w)); };
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-13) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    arg = 0.5 * (a + b);
    return f(arg);
}

/// p(w) = |H(w)|^2 and its first two derivatives.
std::array<double, 3> power_derivatives(const FirFilter& g, double w) {
    Complex h = 0.0, h1 = 0.0, h2 = 0.0;
    for (Index k = 0; k < g.length(); ++k) {
        const Complex e = g[k] * std::polar(1.0, -w * double(k));
        const double dk = double(k);
        h += e;
        h1 += Complex(0.0, -dk) * e;
        h2 += -dk * dk * e;
    }
    return {std::norm(h), 2.0 * std::real(std::conj(h) * h1), 2.0 * (std::norm(h1) + std::real(std::conj(h) * h2))};
}

double wrap_angle(double w) {
    w = std::fmod(w, kTwoPi);
    if (w < 0) w += kTwoPi;
    return w;
}

}  // namespace

const char* to_string(Field f) { return f == Field::real ? "real" : "complex"; }

Field field_from_string(const std::string& s) {
    if (s == "real") return Field::real;
    if (s == "complex") return Field::complex;
    throw std::invalid_argument("unknown field '" + s + "' (expected real or complex)");
}

FirFilter::FirFilter(CVec coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.size() < 1) throw DimensionError("FirFilter: at least one tap is required");
    if (!coeffs_.allFinite()) throw std::invalid_argument("FirFilter: taps must be finite");
}

FirFilter FirFilter::from_real(std::span<const double> taps) {
    CVec c(static_cast<Index>(taps.size()));
    for (std::size_t i = 0; i < taps.size(); ++i) c(static_cast<Index>(i)) = taps[i];
    return FirFilter(std::move(c));
}

FirFilter FirFilter::from_real(const RVec& taps) { return FirFilter(taps.cast<Complex>()); }

CMat dft_matrix(Index r) {
    if (r < 1) throw DimensionError("dft_matrix: r must be positive");
    CMat f(r, r);
    for (Index j = 0; j < r; ++j)
        for (Index k = 0; k < r; ++k) f(j, k) = std::polar(1.0, -kTwoPi * double((j * k) % r) / double(r));
    return f;
}

CVec inverse_dft_column(Index r, Index i) {
    if (i < 0 || i >= r) throw DimensionError("inverse_dft_column: index out of range");
    CVec v(r);
    for (Index j = 0; j < r; ++j) v(j) = std::polar(1.0 / double(r), kTwoPi * double((i * j) % r) / double(r));
    return v;
}

RVec magnitude_on_grid(const FirFilter& g, Index grid_points) {
    if (grid_points < g.length())
        throw DimensionError("magnitude_on_grid: need at least r grid points");
    std::vector<Complex> padded(static_cast<std::size_t>(grid_points), Complex(0.0));
    for (Index k = 0; k < g.length(); ++k) padded[static_cast<std::size_t>(k)] = g[k];
    std::vector<Complex> spectrum;
    Eigen::FFT<double> fft;
    fft.fwd(spectrum, padded);
    RVec mag(grid_points);
    for (Index m = 0; m < grid_points; ++m) mag(m) = std::abs(spectrum[static_cast<std::size_t>(m)]);
    return mag;
}

HinfResult hinf_norm_on_grid(const FirFilter& g, Index grid_points, const HinfOptions& opts) {
    const Index r = g.length();
    HinfResult res;
    res.grid_points = grid_points;
    if (r == 1) {
        res.value = std::abs(g[0]);
        return res;
    }

    const RVec mag = magnitude_on_grid(g, grid_points);
    const Index P = grid_points;
    Index best = 0;
    for (Index m = 1; m < P; ++m)
        if (mag(m) > mag(best)) best = m;
    const double grid_max = mag(best);
    const double step = kTwoPi / double(P);

    // Local maxima of the circular grid, best first.
    std::vector<Index> peaks;
    for (Index m = 0; m < P; ++m) {
        const double prev = mag((m + P - 1) % P);
        const double next = mag((m + 1) % P);
        if (mag(m) >= prev && mag(m) >= next) peaks.push_back(m);
    }
    std::sort(peaks.begin(), peaks.end(), [&](Index a, Index b) { return mag(a) > mag(b); });
    if (peaks.size() > static_cast<std::size_t>(opts.refine_candidates))
        peaks.resize(static_cast<std::size_t>(opts.refine_candidates));

    struct Refined {
        Index center;
        double arg, p, dp, d2p;
    };
    std::vector<Refined> refined;
    double value = grid_max;
    double arg = step * double(best);
    for (Index m : peaks) {
        double w = 0.0;
        const double lo = step * double(m) - step, hi = step * double(m) + step;
        double v = golden_section_max(g, lo, hi, w);
        auto d = power_derivatives(g, w);
        // Golden section only resolves the flat top to ~sqrt(eps); polish with Newton on p'.
        for (int it = 0; it < 3 && d[2] < 0.0; ++it) {
            const double cand = std::clamp(w - d[1] / d[2], lo, hi);
            const auto dc = power_derivatives(g, cand);
            if (std::abs(dc[1]) >= std::abs(d[1])) break;
            w = cand;
            d = dc;
        }
        v = std::max(v, std::sqrt(d[0]));
        refined.push_back({m, w, d[0], d[1], d[2]});
        if (v > value) {
            value = v;
            arg = w;
        }
    }
    res.value = value;
    res.argmax_freq = wrap_angle(arg);
    if (opts.field == Field::real && res.argmax_freq > std::numbers::pi) res.argmax_freq = kTwoPi - res.argmax_freq;

    // Certificate for p = |H|^2, a real trigonometric polynomial of degree
    // n = r-1, so ||p^(k)|| <= n^k ||p|| (Bernstein). Away from the refined
    // peaks the nearest grid point loses at most n^2 step^2 / 8 of ||p||.
    // Within D of a refined peak, Taylor to third order gives
    // p <= p^ + |p'| D + max(0, p'' D^2 / 2 + n^3 ||p|| D^3 / 6).
    const double n = double(r - 1);
    const double shrink = n * n * step * step / 8.0;
    if (shrink >= 1.0) {
        res.error_bound = std::numeric_limits<double>::infinity();
        return res;
    }
    double bound = grid_max * grid_max / (1.0 - shrink);

    std::vector<Index> radius(refined.size(), 0);
    std::vector<char> covered(static_cast<std::size_t>(P), 0);
    for (std::size_t c = 0; c < refined.size(); ++c) {
        const auto& pk = refined[c];
        if (!(pk.d2p < 0.0)) continue;
        const double reach = 1.5 * n * std::sqrt(bound / (4.0 * -pk.d2p));
        radius[c] = std::clamp<Index>(Index(std::ceil(reach)) + 2, 2, std::max<Index>(2, P / 8));
        for (Index k = -radius[c] + 1; k <= radius[c] - 1; ++k)
            covered[static_cast<std::size_t>(((pk.center + k) % P + P) % P)] = 1;
    }
    double far = 0.0;
    for (Index m = 0; m < P; ++m)
        if (!covered[static_cast<std::size_t>(m)]) far = std::max(far, mag(m));

    for (int it = 0; it < 4; ++it) {
        double next = far * far + shrink * bound;
        for (std::size_t c = 0; c < refined.size(); ++c) {
            if (radius[c] == 0) continue;
            const auto& pk = refined[c];
            const double D = double(radius[c] + 1) * step;
            const double local = pk.p + std::abs(pk.dp) * D +
                                 std::max(0.0, 0.5 * pk.d2p * D * D + n * n * n * bound * D * D * D / 6.0);
            next = std::max(next, local);
        }
        if (next >= bound) break;
        bound = next;
    }
    // Floor at a few ulps: value itself carries rounding error.
    res.error_bound = std::max(4.0 * std::numeric_limits<double>::epsilon() * value, std::sqrt(bound) - value);
    return res;
}

HinfResult hinf_norm(const FirFilter& g, double tol, const HinfOptions& opts) {
    if (!(tol > 0.0)) throw std::invalid_argument("hinf_norm: tol must be positive");
    const Index r = g.length();
    Index grid = std::max(next_pow2(opts.min_grid), next_pow2(8 * r));
    HinfResult best;
    while (true) {
        best = hinf_norm_on_grid(g, grid, opts);
        if (best.error_bound <= tol) return best;
        if (grid * 2 > opts.max_grid) break;
        grid *= 2;
    }
    throw ToleranceError("hinf_norm: tolerance " + std::to_string(tol) + " not reachable with " +
                             std::to_string(grid) + " grid points; achievable bound is " +
                             std::to_string(best.error_bound),
                         best.error_bound);
}

double dft_norm_lower_bound(const FirFilter& g) {
    const CVec fg = dft_matrix(g.length()) * g.coeffs();
    return fg.cwiseAbs().maxCoeff();
}

double operator_norm(const CMat& m, const OperatorNormOptions& opts) {
    if (!m.allFinite()) throw std::invalid_argument("operator_norm: matrix has non-finite entries");
    if (m.size() == 0) return 0.0;
    const CMat gram = m.adjoint() * m;
    const Index n = gram.cols();
    CVec v(n);
    for (Index i = 0; i < n; ++i) v(i) = 1.3 + std::cos(0.7 * double(i + 1));
    v.normalize();

    double lambda = 0.0;
    for (int it = 0; it < opts.max_iterations; ++it) {
        CVec w = gram * v;
        double next = v.dot(w).real();
        double wn = w.norm();
        if (wn == 0.0) return 0.0;
        double residual = (w - next * v).norm();
        if (residual <= opts.tol * std::abs(next)) return std::sqrt(std::max(next, 0.0));
        // Stagnation at round-off level: the Rayleigh quotient no longer moves.
        if (it > 1000 && std::abs(next - lambda) <= 1e-16 * std::abs(next))
            return std::sqrt(std::max(next, 0.0));
        lambda = next;
        v = w / wn;
    }
    throw ConvergenceError("operator_norm: power iteration did not converge in " +
                           std::to_string(opts.max_iterations) + " iterations");
}

}  // namespace hinf
