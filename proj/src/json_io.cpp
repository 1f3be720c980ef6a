#include "hinf/json_io.hpp"

#include <stdexcept>

namespace hinf {

nlohmann::json to_json_pairs(const CVec& v) {
    auto arr = nlohmann::json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back({v(i).real(), v(i).imag()});
    return arr;
}

CVec from_json_pairs(const nlohmann::json& j) {
    if (!j.is_array()) throw std::invalid_argument("expected an array of [re, im] pairs");
    CVec v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& p = j[i];
        if (!p.is_array() || p.size() != 2) throw std::invalid_argument("expected an [re, im] pair");
        v(static_cast<Index>(i)) = Complex(p[0].get<double>(), p[1].get<double>());
    }
    return v;
}

CVec from_json_taps(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw std::invalid_argument("taps must be a nonempty array");
    if (j.front().is_array()) return from_json_pairs(j);
    CVec v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
    return v;
}

}  // namespace hinf
