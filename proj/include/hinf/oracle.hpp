#pragma once

// The budgeted noisy query model. Estimators only ever see a QuerySource;
// plant coefficients are never reachable through it.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hinf/types.hpp"

namespace hinf {

class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputTooLarge : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ReplayMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NoiseModel {
    /// Per-component standard deviation. Complex mode draws real and
    /// imaginary parts independently, so E|eta_i|^2 = 2 sigma^2.
    double sigma = 0.0;
    Field field = Field::complex;
};

struct QueryRecord {
    std::size_t t = 0;
    CVec input;
    CVec output;
};

/// Estimator-facing handle: y = T(g) u + noise for ||u||_2 <= M, at most N times.
class QuerySource {
public:
    virtual ~QuerySource() = default;

    virtual CVec query(const CVec& u) = 0;

    virtual Index dim() const = 0;
    virtual double input_cap() const = 0;
    virtual std::size_t budget() const = 0;
    virtual std::size_t used() const = 0;
    virtual Field field() const = 0;

    std::size_t remaining() const { return budget() - used(); }
};

class QuerySession final : public QuerySource {
public:
    QuerySession(FirFilter plant, Index dim, double input_cap, std::size_t budget, NoiseModel noise,
                 std::uint64_t seed);

    CVec query(const CVec& u) override;

    Index dim() const override { return dim_; }
    double input_cap() const override { return cap_; }
    std::size_t budget() const override { return budget_; }
    std::size_t used() const override { return transcript_.size(); }
    Field field() const override { return noise_.field; }

    const NoiseModel& noise() const { return noise_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<QueryRecord>& transcript() const { return transcript_; }

    /// JSON lines, one {t, u, y} object per accepted query.
    void export_transcript(std::ostream& out) const;

private:
    FirFilter plant_;
    Index dim_;
    double cap_;
    std::size_t budget_;
    NoiseModel noise_;
    std::uint64_t seed_;
    std::vector<QueryRecord> transcript_;
};

/// Serves a recorded transcript back to an estimator. Each query must match
/// the recorded input, otherwise the replay has diverged.
class ReplaySession final : public QuerySource {
public:
    ReplaySession(std::vector<QueryRecord> records, double input_cap, Field field);

    /// Cap defaults to the largest recorded input norm.
    static ReplaySession from_jsonl(std::istream& in, std::optional<double> input_cap = std::nullopt);

    CVec query(const CVec& u) override;

    Index dim() const override { return dim_; }
    double input_cap() const override { return cap_; }
    std::size_t budget() const override { return records_.size(); }
    std::size_t used() const override { return next_; }
    Field field() const override { return field_; }

private:
    std::vector<QueryRecord> records_;
    Index dim_ = 0;
    double cap_;
    Field field_;
    std::size_t next_ = 0;
};

/// Frequency-domain query model: y = H(omega) + complex noise with per-part std sigma.
class FreqQuerySession {
public:
    FreqQuerySession(FirFilter plant, std::size_t budget, double sigma, std::uint64_t seed);

    Complex query_frequency(double omega);

    std::size_t budget() const { return budget_; }
    std::size_t used() const { return used_; }
    double sigma() const { return sigma_; }

private:
    FirFilter plant_;
    std::size_t budget_;
    double sigma_;
    std::uint64_t seed_;
    std::size_t used_ = 0;
};

/// M / sigma; infinity for a noiseless session.
double snr(const QuerySession& s);

/// Emulates a frequency query through a time-domain source of dimension >= 2r:
/// sends a sinusoid of norm M at omega and projects the steady-state part of
/// the response back onto it.
Complex emulate_frequency_query(QuerySource& src, double omega, Index plant_length);

/// Relative slack on the input-norm cap.
inline constexpr double kInputCapSlack = 1e-12;

}  // namespace hinf
