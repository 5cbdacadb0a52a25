#pragma once

#include <span>
#include <string>
#include <vector>

namespace emuchain {

enum class UtilityForm { linear, log_shifted, negative_exponential, tabulated };
enum class Sense { maximize, minimize };

// Utility of one attribute. The reward is first oriented (negated for
// minimize) and then passed through the form:
//   linear                x
//   log_shifted           log(x + shift), requires x + shift > 0
//   negative_exponential  (1 - exp(-risk * x)) / risk, risk != 0
//   tabulated             piecewise-linear through (table_x, table_u),
//                         extrapolated along the end segments
struct AttributeUtility {
    std::string attribute;
    UtilityForm form = UtilityForm::linear;
    double shift = 0.0;
    double risk = 1.0;
    std::vector<double> table_x;
    std::vector<double> table_u;
    double weight = 1.0;
    Sense sense = Sense::maximize;

    double operator()(double reward) const;
    bool strictly_concave() const;
    void validate() const;
};

// Additive multi-attribute utility, scale * sum_k w_k u_k(r_k) + offset.
class UtilitySpec {
public:
    UtilitySpec() = default;
    explicit UtilitySpec(std::vector<AttributeUtility> attributes, double scale = 1.0,
                         double offset = 0.0);

    static UtilitySpec linear(std::string attribute = {});
    static UtilitySpec log_shifted(double shift, std::string attribute = {});
    static UtilitySpec negative_exponential(double risk, std::string attribute = {});

    const std::vector<AttributeUtility>& attributes() const noexcept { return attributes_; }
    std::size_t size() const noexcept { return attributes_.size(); }
    double scale() const noexcept { return scale_; }
    double offset() const noexcept { return offset_; }

    // rewards[k] is the reward for attribute k.
    double operator()(std::span<const double> rewards) const;
    double operator()(double reward) const;

    // a * U + b, a > 0.
    UtilitySpec affine(double a, double b) const;

    bool strictly_concave() const;

    // Monotonicity probe over [lo, hi] for every attribute (restricted to the
    // log domain where relevant). Throws InvalidArgument on failure.
    void check_monotone(double lo, double hi, std::size_t probes = 101) const;

private:
    void validate() const;

    std::vector<AttributeUtility> attributes_;
    double scale_ = 1.0;
    double offset_ = 0.0;
};

struct GambleOutcome {
    std::vector<double> reward;
    double probability = 0.0;
};

struct Gamble {
    std::vector<GambleOutcome> outcomes;

    void validate() const;
    std::vector<double> expected_reward() const;
};

// Sum over outcomes of probability * U(reward).
double utility_of_gamble(const UtilitySpec& u, const Gamble& g);

}  // namespace emuchain
