#include "emuchain/utility.hpp"

#include "emuchain/error.hpp"
#include "emuchain/format.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace emuchain {

double AttributeUtility::operator()(double reward) const {
    const double x = sense == Sense::minimize ? -reward : reward;
    switch (form) {
        case UtilityForm::linear:
            return x;
        case UtilityForm::log_shifted:
            if (!(x + shift > 0.0)) {
                throw InvalidArgument("reward " + format_double(reward) + " is outside the log-shifted domain (shift " +
                                      format_double(shift) + ")");
            }
            return std::log(x + shift);
        case UtilityForm::negative_exponential:
            return -std::expm1(-risk * x) / risk;
        case UtilityForm::tabulated: {
            const auto it = std::upper_bound(table_x.begin(), table_x.end(), x);
            std::size_t hi = static_cast<std::size_t>(it - table_x.begin());
            hi = std::clamp<std::size_t>(hi, 1, table_x.size() - 1);
            const std::size_t lo = hi - 1;
            const double t = (x - table_x[lo]) / (table_x[hi] - table_x[lo]);
            return table_u[lo] + t * (table_u[hi] - table_u[lo]);
        }
    }
    return x;
}

bool AttributeUtility::strictly_concave() const {
    switch (form) {
        case UtilityForm::log_shifted: return true;
        case UtilityForm::negative_exponential: return risk > 0.0;
        default: return false;
    }
}

void AttributeUtility::validate() const {
    if (!(weight >= 0.0) || !std::isfinite(weight)) throw InvalidArgument("utility weights must be finite and >= 0");
    switch (form) {
        case UtilityForm::linear:
            break;
        case UtilityForm::log_shifted:
            if (!std::isfinite(shift)) throw InvalidArgument("log-shifted utility needs a finite shift");
            break;
        case UtilityForm::negative_exponential:
            if (!std::isfinite(risk) || risk == 0.0) throw InvalidArgument("negative-exponential utility needs a nonzero risk coefficient");
            break;
        case UtilityForm::tabulated:
            if (table_x.size() < 2 || table_x.size() != table_u.size()) {
                throw InvalidArgument("tabulated utility needs at least two (x, u) pairs");
            }
            for (std::size_t i = 1; i < table_x.size(); ++i) {
                if (!(table_x[i] > table_x[i - 1])) throw InvalidArgument("tabulated utility x values must increase strictly");
                if (!(table_u[i] > table_u[i - 1])) throw InvalidArgument("tabulated utility must be strictly increasing");
            }
            break;
    }
}

UtilitySpec::UtilitySpec(std::vector<AttributeUtility> attributes, double scale, double offset)
    : attributes_(std::move(attributes)), scale_(scale), offset_(offset) {
    validate();
}

void UtilitySpec::validate() const {
    if (attributes_.empty()) throw InvalidArgument("utility needs at least one attribute");
    if (!(scale_ > 0.0) || !std::isfinite(scale_) || !std::isfinite(offset_)) {
        throw InvalidArgument("utility scale must be positive and offset finite");
    }
    bool positive = false;
    std::set<std::string> names;
    for (const auto& a : attributes_) {
        a.validate();
        positive = positive || a.weight > 0.0;
        if (attributes_.size() > 1 && (a.attribute.empty() || !names.insert(a.attribute).second)) {
            throw InvalidArgument("multi-attribute utility needs distinct attribute names");
        }
    }
    if (!positive) throw InvalidArgument("at least one utility weight must be positive");
}

UtilitySpec UtilitySpec::linear(std::string attribute) {
    AttributeUtility a;
    a.attribute = std::move(attribute);
    return UtilitySpec({a});
}

UtilitySpec UtilitySpec::log_shifted(double shift, std::string attribute) {
    AttributeUtility a;
    a.attribute = std::move(attribute);
    a.form = UtilityForm::log_shifted;
    a.shift = shift;
    return UtilitySpec({a});
}

UtilitySpec UtilitySpec::negative_exponential(double risk, std::string attribute) {
    AttributeUtility a;
    a.attribute = std::move(attribute);
    a.form = UtilityForm::negative_exponential;
    a.risk = risk;
    return UtilitySpec({a});
}

double UtilitySpec::operator()(std::span<const double> rewards) const {
    if (rewards.size() != attributes_.size()) throw InvalidArgument("reward vector does not match utility attributes");
    double acc = 0.0;
    for (std::size_t k = 0; k < attributes_.size(); ++k) {
        if (attributes_[k].weight == 0.0) continue;
        acc += attributes_[k].weight * attributes_[k](rewards[k]);
    }
    return scale_ * acc + offset_;
}

double UtilitySpec::operator()(double reward) const {
    const double r[] = {reward};
    return (*this)(r);
}

UtilitySpec UtilitySpec::affine(double a, double b) const {
    if (!(a > 0.0)) throw InvalidArgument("affine utility transform needs a > 0");
    return UtilitySpec(attributes_, a * scale_, a * offset_ + b);
}

bool UtilitySpec::strictly_concave() const {
    return std::all_of(attributes_.begin(), attributes_.end(),
                       [](const auto& a) { return a.weight == 0.0 || a.strictly_concave(); });
}

void UtilitySpec::check_monotone(double lo, double hi, std::size_t probes) const {
    if (!(lo < hi) || probes < 2) throw InvalidArgument("monotonicity probe needs lo < hi and two probes");
    for (const auto& a : attributes_) {
        if (a.weight == 0.0) continue;
        double from = lo, to = hi;
        if (a.form == UtilityForm::log_shifted) {
            // Domain in reward terms: reward > -shift (maximize) or reward < shift (minimize).
            if (a.sense == Sense::maximize) from = std::max(from, std::nextafter(-a.shift, hi));
            else to = std::min(to, std::nextafter(a.shift, lo));
            if (!(from < to)) throw InvalidArgument("probe range misses the log-shifted domain of '" + a.attribute + "'");
        }
        double prev = 0.0;
        for (std::size_t i = 0; i < probes; ++i) {
            const double r = from + (to - from) * static_cast<double>(i) / static_cast<double>(probes - 1);
            const double u = a(r);
            if (i > 0) {
                const bool ok = a.sense == Sense::maximize ? u > prev : u < prev;
                if (!ok) {
                    throw InvalidArgument("utility of '" + a.attribute + "' is not strictly monotone near " + format_double(r));
                }
            }
            prev = u;
        }
    }
}

void Gamble::validate() const {
    if (outcomes.empty()) throw InvalidArgument("gamble needs at least one outcome");
    double total = 0.0;
    for (const auto& o : outcomes) {
        if (!(o.probability >= 0.0)) throw InvalidArgument("gamble probabilities must be >= 0");
        if (o.reward.size() != outcomes.front().reward.size() || o.reward.empty()) {
            throw InvalidArgument("gamble rewards must share one non-empty length");
        }
        total += o.probability;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("gamble probabilities must sum to 1");
}

std::vector<double> Gamble::expected_reward() const {
    validate();
    std::vector<double> out(outcomes.front().reward.size(), 0.0);
    for (const auto& o : outcomes) {
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += o.probability * o.reward[k];
    }
    return out;
}

double utility_of_gamble(const UtilitySpec& u, const Gamble& g) {
    g.validate();
    double acc = 0.0;
    for (const auto& o : g.outcomes) acc += o.probability * u(o.reward);
    return acc;
}

}  // namespace emuchain
