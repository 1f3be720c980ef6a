#include "hinf/oracle.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "hinf/json_io.hpp"
#include "hinf/rng.hpp"
#include "hinf/signals.hpp"

namespace hinf {

QuerySession::QuerySession(FirFilter plant, Index dim, double input_cap, std::size_t budget, NoiseModel noise,
                           std::uint64_t seed)
    : plant_(std::move(plant)), dim_(dim), cap_(input_cap), budget_(budget), noise_(noise), seed_(seed) {
    if (dim_ < plant_.length())
        throw DimensionError("QuerySession: L = " + std::to_string(dim_) + " must be at least r = " +
                             std::to_string(plant_.length()));
    if (!(cap_ > 0.0)) throw std::invalid_argument("QuerySession: input cap M must be positive");
    if (budget_ < 1) throw std::invalid_argument("QuerySession: budget N must be at least 1");
    if (!(noise_.sigma >= 0.0) || !std::isfinite(noise_.sigma))
        throw std::invalid_argument("QuerySession: sigma must be finite and nonnegative");
    if (noise_.field == Field::real && !plant_.is_real())
        throw std::invalid_argument("QuerySession: real mode requires a real plant");
    transcript_.reserve(budget_);
}

CVec QuerySession::query(const CVec& u) {
    if (used() >= budget_)
        throw BudgetExceeded("query budget of " + std::to_string(budget_) + " exhausted");
    if (u.size() != dim_)
        throw DimensionError("query: input has length " + std::to_string(u.size()) + ", expected L = " +
                             std::to_string(dim_));
    if (!u.allFinite()) throw std::invalid_argument("query: input must be finite");
    if (noise_.field == Field::real && !is_real_vector(u))
        throw std::invalid_argument("query: real mode requires a real input");
    const double nrm = u.norm();
    if (nrm > cap_ * (1.0 + kInputCapSlack))
        throw InputTooLarge("query: ||u||_2 = " + std::to_string(nrm) + " exceeds cap M = " + std::to_string(cap_));

    const std::size_t t = used();
    CVec y = convolve_truncated(plant_, u, dim_);
    if (noise_.sigma > 0.0) {
        Rng rng(derive_seed({seed_, t}));
        for (Index i = 0; i < dim_; ++i) {
            if (noise_.field == Field::real)
                y(i) += noise_.sigma * rng.normal();
            else
                y(i) += rng.complex_normal(noise_.sigma);
        }
    }
    transcript_.push_back({t, u, y});
    return y;
}

void QuerySession::export_transcript(std::ostream& out) const {
    for (const auto& rec : transcript_) {
        nlohmann::json j;
        j["t"] = rec.t;
        j["u"] = to_json_pairs(rec.input);
        j["y"] = to_json_pairs(rec.output);
        out << j.dump() << '\n';
    }
}

ReplaySession::ReplaySession(std::vector<QueryRecord> records, double input_cap, Field field)
    : records_(std::move(records)), cap_(input_cap), field_(field) {
    if (records_.empty()) throw std::invalid_argument("ReplaySession: transcript is empty");
    dim_ = records_.front().input.size();
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (records_[i].input.size() != dim_ || records_[i].output.size() != dim_)
            throw DimensionError("ReplaySession: record " + std::to_string(i) + " has inconsistent length");
        if (records_[i].t != i)
            throw std::invalid_argument("ReplaySession: records must be ordered by t starting at 0");
    }
}

ReplaySession ReplaySession::from_jsonl(std::istream& in, std::optional<double> input_cap) {
    std::vector<QueryRecord> records;
    std::string line;
    double cap = 0.0;
    bool real = true;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto j = nlohmann::json::parse(line);
        QueryRecord rec;
        rec.t = j.at("t").get<std::size_t>();
        rec.input = from_json_pairs(j.at("u"));
        rec.output = from_json_pairs(j.at("y"));
        cap = std::max(cap, rec.input.norm());
        real = real && is_real_vector(rec.input) && is_real_vector(rec.output);
        records.push_back(std::move(rec));
    }
    if (cap == 0.0) cap = 1.0;
    return ReplaySession(std::move(records), input_cap.value_or(cap), real ? Field::real : Field::complex);
}

CVec ReplaySession::query(const CVec& u) {
    if (next_ >= records_.size())
        throw BudgetExceeded("replay: transcript of " + std::to_string(records_.size()) + " queries exhausted");
    const auto& rec = records_[next_];
    if (u.size() != dim_) throw DimensionError("replay: input length mismatch");
    if ((u - rec.input).norm() > 1e-9 * std::max(1.0, rec.input.norm()))
        throw ReplayMismatch("replay: query " + std::to_string(next_) + " differs from the recorded input");
    ++next_;
    return rec.output;
}

FreqQuerySession::FreqQuerySession(FirFilter plant, std::size_t budget, double sigma, std::uint64_t seed)
    : plant_(std::move(plant)), budget_(budget), sigma_(sigma), seed_(seed) {
    if (budget_ < 1) throw std::invalid_argument("FreqQuerySession: budget must be at least 1");
    if (!(sigma_ >= 0.0)) throw std::invalid_argument("FreqQuerySession: sigma must be nonnegative");
}

Complex FreqQuerySession::query_frequency(double omega) {
    if (used_ >= budget_)
        throw BudgetExceeded("frequency query budget of " + std::to_string(budget_) + " exhausted");
    Complex y = freq_response(plant_, omega);
    if (sigma_ > 0.0) {
        Rng rng(derive_seed({seed_, used_}));
        y += rng.complex_normal(sigma_);
    }
    ++used_;
    return y;
}

double snr(const QuerySession& s) {
    if (s.noise().sigma == 0.0) return std::numeric_limits<double>::infinity();
    return s.input_cap() / s.noise().sigma;
}

Complex emulate_frequency_query(QuerySource& src, double omega, Index plant_length) {
    const Index dim = src.dim();
    if (dim < 2 * plant_length)
        throw DimensionError("emulate_frequency_query: need L >= 2r");
    if (src.field() == Field::real)
        throw std::invalid_argument("emulate_frequency_query: complex sinusoids need a complex session");
    CVec u(dim);
    for (Index n = 0; n < dim; ++n) u(n) = std::polar(1.0, omega * double(n));
    u *= src.input_cap() / u.norm();
    const CVec y = src.query(u);
    // Past the first r-1 samples the truncated convolution is in steady state:
    // y_n = H(omega) u_n.
    const Index start = plant_length - 1;
    const Index count = dim - start;
    return u.tail(count).dot(y.tail(count)) / u.tail(count).squaredNorm();
}

}  // namespace hinf
