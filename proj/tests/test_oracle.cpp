#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <sstream>

#include "hinf/oracle.hpp"
#include "hinf/rng.hpp"
#include "hinf/signals.hpp"
#include "oracles.hpp"

using namespace hinf;

namespace {

FirFilter random_filter(Rng& rng, Index r) {
    CVec v(r);
    for (auto& x : v) x = Complex(rng.normal(), rng.normal());
    return FirFilter(v);
}

template <typename S>
concept exposes_plant = requires(S& s) { s.plant(); } || requires(S& s) { s.plant_; } ||
                        requires(S& s) { s.coeffs(); } || requires(S& s) { s.filter(); };

}  // namespace

static_assert(!exposes_plant<QuerySource>);
static_assert(!exposes_plant<QuerySession>);
static_assert(!exposes_plant<FreqQuerySession>);
static_assert(exposes_plant<FirFilter>);

TEST_CASE("new_session validates parameters") {
    const FirFilter g(CVec::Ones(3));
    QuerySession s(g, 5, 1.0, 4, {0.1, Field::complex}, 1);
    CHECK(s.used() == 0);
    CHECK(s.remaining() == 4);
    CHECK_THROWS_AS(QuerySession(g, 2, 1.0, 4, {0.1, Field::complex}, 1), DimensionError);
    CHECK_THROWS_AS(QuerySession(g, 5, 0.0, 4, {0.1, Field::complex}, 1), std::invalid_argument);
    CHECK_THROWS_AS(QuerySession(g, 5, 1.0, 0, {0.1, Field::complex}, 1), std::invalid_argument);
    CHECK_THROWS_AS(QuerySession(g, 5, 1.0, 4, {-1.0, Field::complex}, 1), std::invalid_argument);
    CHECK_THROWS_AS(QuerySession(FirFilter(CVec::Constant(2, Complex(0, 1))), 5, 1.0, 4, {0.1, Field::real}, 1),
                    std::invalid_argument);
}

TEST_CASE("noiseless query is the truncated convolution") {
    Rng rng(1);
    const FirFilter g = random_filter(rng, 4);
    QuerySession s(g, 7, 2.0, 10, {0.0, Field::complex}, 3);
    for (int t = 0; t < 10; ++t) {
        const CVec u = 2.0 * rng.unit_sphere(7, Field::complex);
        CHECK((s.query(u) - oracle::toeplitz_entrywise(g.coeffs(), 7) * u).cwiseAbs().maxCoeff() < 1e-12);
    }
    QuerySession id(FirFilter(CVec::Ones(1)), 3, 1.0, 1, {0.0, Field::complex}, 0);
    CHECK(id.query(CVec::Unit(3, 0)) == CVec::Unit(3, 0));
}

TEST_CASE("same seed and inputs give identical transcripts") {
    Rng rng(2);
    const FirFilter g = random_filter(rng, 3);
    QuerySession a(g, 6, 1.0, 20, {0.3, Field::complex}, 42);
    QuerySession b(g, 6, 1.0, 20, {0.3, Field::complex}, 42);
    for (int t = 0; t < 20; ++t) {
        const CVec u = rng.unit_sphere(6, Field::complex);
        CHECK(a.query(u) == b.query(u));
    }
    std::ostringstream ta, tb;
    a.export_transcript(ta);
    b.export_transcript(tb);
    CHECK(ta.str() == tb.str());
}

TEST_CASE("noise at query t does not depend on earlier inputs") {
    const FirFilter g(CVec::Zero(2));
    QuerySession a(g, 4, 1.0, 3, {1.0, Field::complex}, 9);
    QuerySession b(g, 4, 1.0, 3, {1.0, Field::complex}, 9);
    a.query(CVec::Unit(4, 0));
    b.query(CVec::Unit(4, 3));
    a.query(CVec::Unit(4, 1));
    b.query(CVec::Unit(4, 2));
    CHECK(a.query(CVec::Zero(4)) == b.query(CVec::Zero(4)));
}

TEST_CASE("sample mean converges to T(g)u") {
    Rng rng(3);
    const FirFilter g = random_filter(rng, 3);
    const std::size_t n = 100000;
    const double sigma = 0.5;
    QuerySession s(g, 4, 1.0, n, {sigma, Field::complex}, 77);
    const CVec u = rng.unit_sphere(4, Field::complex);
    CVec mean = CVec::Zero(4);
    for (std::size_t t = 0; t < n; ++t) mean += s.query(u);
    mean /= double(n);
    const CVec expect = oracle::toeplitz_entrywise(g.coeffs(), 4) * u;
    const double tol = 4.0 * sigma * std::sqrt(2.0) / std::sqrt(double(n));
    for (Index i = 0; i < 4; ++i) {
        CHECK(std::abs(mean(i).real() - expect(i).real()) < tol);
        CHECK(std::abs(mean(i).imag() - expect(i).imag()) < tol);
    }
}

TEST_CASE("complex noise is white with per-part variance sigma^2") {
    const double sigma = 0.7;
    const std::size_t n = 100000;
    QuerySession s(FirFilter(CVec::Zero(1)), 1, 1.0, n, {sigma, Field::complex}, 5);
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const Complex e = s.query(CVec::Zero(1))(0);
        sxx += e.real() * e.real();
        syy += e.imag() * e.imag();
        sxy += e.real() * e.imag();
    }
    const double s2 = sigma * sigma;
    // Var of a squared N(0, s2) draw is 2 s2^2; of a product of independent draws s2^2.
    const double se_var = std::sqrt(2.0) * s2 / std::sqrt(double(n));
    const double se_cov = s2 / std::sqrt(double(n));
    CHECK(std::abs(sxx / double(n) - s2) < 5 * se_var);
    CHECK(std::abs(syy / double(n) - s2) < 5 * se_var);
    CHECK(std::abs(sxy / double(n)) < 5 * se_cov);
}

TEST_CASE("real mode keeps everything real") {
    QuerySession s(FirFilter::from_real(RVec::Ones(2)), 4, 1.0, 5, {0.2, Field::real}, 5);
    const CVec y = s.query(CVec::Unit(4, 0));
    CHECK(y.imag().isZero(0.0));
    CHECK_THROWS_AS(s.query(CVec::Constant(4, Complex(0, 0.1))), std::invalid_argument);
    CHECK(s.used() == 1);
}

TEST_CASE("budget and cap contracts") {
    QuerySession s(FirFilter(CVec::Ones(2)), 3, 1.0, 2, {0.1, Field::complex}, 1);
    CHECK_THROWS_AS(s.query(CVec::Constant(3, 1.0)), InputTooLarge);
    CHECK(s.used() == 0);
    CHECK(s.transcript().empty());
    CVec edge = CVec::Constant(3, 1.0);
    edge *= (1.0 + 1e-13) / edge.norm();
    s.query(edge);
    CHECK_THROWS_AS(s.query(CVec::Ones(2)), DimensionError);
    CHECK_THROWS_AS(s.query(CVec::Constant(3, std::numeric_limits<double>::quiet_NaN())), std::invalid_argument);
    s.query(CVec::Zero(3));
    CHECK_THROWS_AS(s.query(CVec::Zero(3)), BudgetExceeded);
    CHECK(s.used() == 2);
    CHECK(s.transcript().size() == 2);
}

TEST_CASE("budget safety under adversarial call sequences") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t budget = 1 + rng.index(10);
        QuerySession s(FirFilter(CVec::Ones(2)), 4, 1.0, budget, {0.1, Field::complex}, trial);
        std::size_t outputs = 0;
        for (int call = 0; call < 40; ++call) {
            CVec u;
            switch (rng.index(4)) {
                case 0: u = rng.unit_sphere(4, Field::complex); break;
                case 1: u = 5.0 * rng.unit_sphere(4, Field::complex); break;
                case 2: u = rng.unit_sphere(3, Field::complex); break;
                default: u = CVec::Zero(4); break;
            }
            try {
                s.query(u);
                ++outputs;
            } catch (const std::exception&) {
            }
            CHECK(s.used() <= budget);
            CHECK(s.transcript().size() == s.used());
        }
        CHECK(outputs <= budget);
        for (const auto& rec : s.transcript()) CHECK(rec.input.norm() <= 1.0 + 1e-12);
    }
}

TEST_CASE("transcript round trip through replay") {
    Rng rng(4);
    const FirFilter g = random_filter(rng, 3);
    QuerySession s(g, 5, 1.5, 6, {0.2, Field::complex}, 11);
    std::vector<CVec> inputs;
    for (int t = 0; t < 6; ++t) {
        inputs.push_back(1.5 * rng.unit_sphere(5, Field::complex));
        s.query(inputs.back());
    }
    std::stringstream buf;
    s.export_transcript(buf);
    auto replay = ReplaySession::from_jsonl(buf);
    CHECK(replay.budget() == 6);
    CHECK(replay.dim() == 5);
    CHECK(replay.input_cap() == doctest::Approx(1.5));
    CHECK(replay.field() == Field::complex);
    for (int t = 0; t < 6; ++t)
        CHECK((replay.query(inputs[std::size_t(t)]) - s.transcript()[std::size_t(t)].output).norm() < 1e-12);
    CHECK_THROWS_AS(replay.query(inputs[0]), BudgetExceeded);

    std::stringstream again;
    s.export_transcript(again);
    auto diverged = ReplaySession::from_jsonl(again, 2.0);
    CHECK(diverged.input_cap() == 2.0);
    CHECK_THROWS_AS(diverged.query(inputs[1]), ReplayMismatch);
}

TEST_CASE("frequency oracle") {
    const FirFilter g(CVec::Ones(2));
    FreqQuerySession s(g, 3, 0.0, 1);
    CHECK(std::abs(s.query_frequency(0.0) - 2.0) < 1e-15);
    s.query_frequency(1.0);
    s.query_frequency(2.0);
    CHECK_THROWS_AS(s.query_frequency(0.0), BudgetExceeded);

    Rng rng(6);
    const FirFilter h = random_filter(rng, 4);
    const std::size_t n = 10000;
    FreqQuerySession noisy(h, n, 1.0, 2);
    Complex mean = 0.0;
    for (std::size_t t = 0; t < n; ++t) mean += noisy.query_frequency(0.7);
    mean /= double(n);
    const Complex expect = freq_response(h, 0.7);
    CHECK(std::abs(mean.real() - expect.real()) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(mean.imag() - expect.imag()) < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("time-domain sinusoid emulates the frequency oracle") {
    Rng rng(12);
    const FirFilter g = random_filter(rng, 4);
    QuerySession s(g, 16, 1.0, 5, {0.0, Field::complex}, 0);
    for (double w : {0.0, 0.4, 2.0, 5.5}) {
        CHECK(std::abs(emulate_frequency_query(s, w, 4) - freq_response(g, w)) < 1e-12);
    }
}

TEST_CASE("snr") {
    const FirFilter g(CVec::Ones(1));
    CHECK(snr(QuerySession(g, 1, 1.0, 1, {0.05, Field::complex}, 0)) == doctest::Approx(20.0));
    CHECK(snr(QuerySession(g, 1, 1.0, 1, {0.1, Field::complex}, 0)) == doctest::Approx(10.0));
    CHECK(snr(QuerySession(g, 1, 2.0, 1, {0.1, Field::complex}, 0)) == doctest::Approx(20.0));
    CHECK(std::isinf(snr(QuerySession(g, 1, 1.0, 1, {0.0, Field::complex}, 0))));
}
