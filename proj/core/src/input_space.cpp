#include "emuchain/input_space.hpp"

#include "emuchain/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace emuchain {

InputSpace::InputSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    std::set<std::string> seen;
    for (const auto& d : dims_) {
        if (d.name.empty()) throw InvalidArgument("input dimension with empty name");
        if (!seen.insert(d.name).second) {
            throw InvalidArgument("duplicate input dimension '" + d.name + "'");
        }
        if (!(std::isfinite(d.lower) && std::isfinite(d.upper) && d.lower < d.upper)) {
            throw InvalidArgument("dimension '" + d.name + "' needs finite lower < upper");
        }
    }
}

std::optional<std::size_t> InputSpace::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (dims_[i].name == name) return i;
    }
    return std::nullopt;
}

std::vector<std::string> InputSpace::names() const {
    std::vector<std::string> out;
    for (const auto& d : dims_) out.push_back(d.name);
    return out;
}

std::vector<std::string> InputSpace::decision_names() const {
    std::vector<std::string> out;
    for (const auto& d : dims_) {
        if (d.decision) out.push_back(d.name);
    }
    return out;
}

std::vector<std::string> InputSpace::parameter_names() const {
    std::vector<std::string> out;
    for (const auto& d : dims_) {
        if (!d.decision) out.push_back(d.name);
    }
    return out;
}

bool InputSpace::contains(std::span<const double> point) const {
    if (point.size() != dims_.size()) return false;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        if (!(point[i] >= dims_[i].lower && point[i] <= dims_[i].upper)) return false;
    }
    return true;
}

std::vector<double> InputSpace::to_unit(std::span<const double> point) const {
    if (point.size() != dims_.size()) {
        throw InvalidArgument("point has " + std::to_string(point.size()) + " coordinates, space has " +
                              std::to_string(dims_.size()));
    }
    std::vector<double> out(point.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        const auto& d = dims_[i];
        out[i] = 2.0 * (point[i] - d.lower) / (d.upper - d.lower) - 1.0;
    }
    return out;
}

std::vector<double> InputSpace::from_unit(std::span<const double> unit) const {
    if (unit.size() != dims_.size()) throw InvalidArgument("unit point dimension mismatch");
    std::vector<double> out(unit.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        const auto& d = dims_[i];
        out[i] = d.lower + 0.5 * (unit[i] + 1.0) * (d.upper - d.lower);
    }
    return out;
}

InputSpace InputSpace::subspace(const std::vector<std::string>& names) const {
    std::vector<Dimension> out;
    for (const auto& n : names) {
        auto i = index_of(n);
        if (!i) throw InvalidArgument("unknown dimension '" + n + "'");
        out.push_back(dims_[*i]);
    }
    return InputSpace(std::move(out));
}

}  // namespace emuchain
