#include "emuchain/decision.hpp"

#include "emuchain/error.hpp"
#include "emuchain/format.hpp"
#include "emuchain/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace emuchain {

GraphOutcomeSource::GraphOutcomeSource(ModelGraph graph, ExogenousSpec exogenous,
                                       std::vector<std::string> decision_names, std::size_t threads)
    : graph_(std::move(graph)), exogenous_(std::move(exogenous)), decision_names_(std::move(decision_names)),
      threads_(std::max<std::size_t>(1, threads)) {
    for (const auto& name : graph_.decision_names()) {
        if (std::find(decision_names_.begin(), decision_names_.end(), name) == decision_names_.end()) {
            throw InvalidArgument("decision '" + name + "' used by the graph is not in the decision vector");
        }
    }
}

RowMatrix GraphOutcomeSource::sample(std::span<const double> decision, std::size_t n, std::uint64_t seed) const {
    if (decision.size() != decision_names_.size()) throw InvalidArgument("decision vector has the wrong length");
    DecisionValues d;
    for (std::size_t i = 0; i < decision.size(); ++i) d[decision_names_[i]] = decision[i];
    PropagateOptions opts;
    opts.threads = threads_;
    return propagate(graph_, exogenous_, d, n, seed, opts).samples;
}

std::vector<std::size_t> utility_columns(const UtilitySpec& u, const std::vector<std::string>& attributes) {
    std::vector<std::size_t> out;
    if (u.size() == 1 && u.attributes().front().attribute.empty()) {
        if (attributes.size() != 1) {
            throw InvalidArgument("unnamed utility attribute is ambiguous over " + std::to_string(attributes.size()) + " outcome columns");
        }
        return {0};
    }
    for (const auto& a : u.attributes()) {
        const auto it = std::find(attributes.begin(), attributes.end(), a.attribute);
        if (it == attributes.end()) throw InvalidArgument("no outcome column for utility attribute '" + a.attribute + "'");
        out.push_back(static_cast<std::size_t>(it - attributes.begin()));
    }
    return out;
}

namespace {

// Mean and standard error that are exact for constant samples.
Estimate estimate_of(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (*lo == *hi) return {*lo, 0.0};
    return {mean(v), std::sqrt(sample_variance(v) / static_cast<double>(v.size()))};
}

std::uint64_t outcome_seed(std::uint64_t seed, std::size_t index) {
    return substream_seed(seed, "decision.outcome", index);
}

}  // namespace

Estimate expected_utility(const OutcomeSource& source, const UtilitySpec& u, std::span<const double> decision,
                          std::size_t n_samples, std::uint64_t seed) {
    if (n_samples == 0) throw InvalidArgument("expected utility needs at least one sample");
    const auto cols = utility_columns(u, source.attributes());
    const RowMatrix y = source.sample(decision, n_samples, seed);
    std::vector<double> values(static_cast<std::size_t>(y.rows()));
    std::vector<double> r(cols.size());
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        for (std::size_t k = 0; k < cols.size(); ++k) r[k] = y(i, static_cast<Eigen::Index>(cols[k]));
        try {
            values[static_cast<std::size_t>(i)] = u(r);
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("sample " + std::to_string(i) + " (" + join_doubles(r, ',') + "): " + e.what());
        }
    }
    return estimate_of(values);
}

DecisionEvaluator make_utility_evaluator(const OutcomeSource& source, const UtilitySpec& u, std::size_t n_samples,
                                         std::uint64_t seed) {
    return [&source, u, n_samples, seed](std::span<const double> d, std::size_t index) {
        return expected_utility(source, u, d, n_samples, outcome_seed(seed, index));
    };
}

DecisionEvaluator make_attribute_evaluator(const OutcomeSource& source, const std::string& attribute,
                                           std::size_t n_samples, std::uint64_t seed) {
    const UtilitySpec u = UtilitySpec::linear(attribute);
    return [&source, u, n_samples, seed](std::span<const double> d, std::size_t index) {
        return expected_utility(source, u, d, n_samples, outcome_seed(seed, index));
    };
}

DecisionSet::DecisionSet(InputSpace s, RowMatrix c) : space(std::move(s)), candidates(std::move(c)) {
    if (static_cast<std::size_t>(candidates.cols()) != space.size()) {
        throw InvalidArgument("candidate matrix columns do not match the decision space");
    }
    status.assign(size(), active_status);
}

std::vector<std::size_t> DecisionSet::active_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i) {
        if (active(i)) out.push_back(i);
    }
    return out;
}

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

RowMatrix unit_points(const DecisionSet& set) {
    RowMatrix out(set.candidates.rows(), set.candidates.cols());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto u = set.space.to_unit(set.decision(i));
        for (std::size_t j = 0; j < u.size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = u[j];
    }
    return out;
}

// Greedy farthest-point choice among `pool`, measured from already evaluated
// candidates; the first pick with nothing evaluated is the lowest index.
std::vector<std::size_t> farthest_points(const RowMatrix& unit, const std::vector<std::size_t>& pool,
                                         const std::vector<bool>& evaluated, std::size_t budget) {
    std::vector<double> dist(pool.size(), inf);
    for (std::size_t p = 0; p < pool.size(); ++p) {
        for (Eigen::Index e = 0; e < unit.rows(); ++e) {
            if (!evaluated[static_cast<std::size_t>(e)]) continue;
            dist[p] = std::min(dist[p], (unit.row(static_cast<Eigen::Index>(pool[p])) - unit.row(e)).squaredNorm());
        }
    }
    std::vector<std::size_t> picked;
    std::vector<bool> taken(pool.size(), false);
    while (picked.size() < std::min(budget, pool.size())) {
        std::size_t best = pool.size();
        for (std::size_t p = 0; p < pool.size(); ++p) {
            if (!taken[p] && (best == pool.size() || dist[p] > dist[best])) best = p;
        }
        taken[best] = true;
        picked.push_back(pool[best]);
        for (std::size_t p = 0; p < pool.size(); ++p) {
            dist[p] = std::min(dist[p], (unit.row(static_cast<Eigen::Index>(pool[p])) -
                                         unit.row(static_cast<Eigen::Index>(pool[best]))).squaredNorm());
        }
    }
    return picked;
}

// Bounds for one attribute: evaluated candidates use their own estimate,
// the rest the emulator fitted to all estimates so far.
std::vector<Bounds> attribute_bounds(const DecisionSet& set, const std::vector<std::optional<Estimate>>& evals,
                                     double k, const FitOptions& fit_options) {
    std::vector<std::size_t> done;
    double max_se = 0.0;
    for (std::size_t i = 0; i < evals.size(); ++i) {
        if (evals[i]) {
            done.push_back(i);
            max_se = std::max(max_se, evals[i]->standard_error);
        }
    }
    std::optional<Emulator> em;
    if (done.size() < set.size() && !done.empty()) {
        RowMatrix pts(static_cast<Eigen::Index>(done.size()), set.candidates.cols());
        RowMatrix y(static_cast<Eigen::Index>(done.size()), 1);
        for (std::size_t r = 0; r < done.size(); ++r) {
            pts.row(static_cast<Eigen::Index>(r)) = set.candidates.row(static_cast<Eigen::Index>(done[r]));
            y(static_cast<Eigen::Index>(r), 0) = evals[done[r]]->mean;
        }
        try {
            em.emplace(fit(DesignSet(set.space, pts, {"utility"}, y), "utility", fit_options));
        } catch (const FitError&) {
            em.reset();
        }
    }
    std::vector<Bounds> out(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (evals[i]) {
            const double w = k * evals[i]->standard_error;
            out[i] = {evals[i]->mean, evals[i]->mean - w, evals[i]->mean + w};
        } else if (em) {
            const Prediction p = em->predict(set.decision(i));
            const double w = k * std::sqrt(p.variance + max_se * max_se);
            out[i] = {p.mean, p.mean - w, p.mean + w};
        } else {
            out[i] = {std::numeric_limits<double>::quiet_NaN(), -inf, inf};
        }
    }
    return out;
}

}  // namespace

StagedResult staged_rejection(DecisionSet candidates, const DecisionEvaluator& evaluator,
                              const StagedOptions& options) {
    if (candidates.status.size() != candidates.size()) throw InvalidArgument("decision set status has the wrong length");
    if (candidates.active_indices().size() < 2) throw InvalidArgument("staged rejection needs at least two active candidates");
    if (!(options.k_bound > 0.0)) throw InvalidArgument("k_bound must be positive");
    if (options.stages == 0) throw InvalidArgument("staged rejection needs at least one stage");
    const std::size_t q = basis_size(options.fit.trend, candidates.space.size());
    if (options.budget < q) {
        throw InvalidArgument("budget " + std::to_string(options.budget) + " is smaller than the trend basis count " +
                              std::to_string(q));
    }

    StagedResult result;
    const std::size_t n = candidates.size();
    result.evaluations.assign(n, std::nullopt);
    const RowMatrix unit = unit_points(candidates);
    std::vector<bool> evaluated(n, false);

    for (std::size_t stage = 1; stage <= options.stages; ++stage) {
        std::vector<std::size_t> pool;
        for (std::size_t i : candidates.active_indices()) {
            if (!evaluated[i]) pool.push_back(i);
        }
        StageSummary summary;
        summary.stage = stage;
        for (std::size_t i : farthest_points(unit, pool, evaluated, options.budget)) {
            result.evaluations[i] = evaluator(candidates.decision(i), i);
            evaluated[i] = true;
            ++summary.evaluated;
        }
        result.bounds = attribute_bounds(candidates, result.evaluations, options.k_bound, options.fit);

        const auto active = candidates.active_indices();
        double max_lower = -inf;
        std::size_t keeper = active.front();
        for (std::size_t i : active) {
            if (result.bounds[i].lower > max_lower) {
                max_lower = result.bounds[i].lower;
                keeper = i;
            }
        }
        std::vector<std::size_t> reject;
        for (std::size_t i : active) {
            if (result.bounds[i].upper < max_lower) reject.push_back(i);
        }
        if (reject.size() == active.size()) std::erase(reject, keeper);
        for (std::size_t i : reject) candidates.status[i] = stage;
        summary.rejected = reject.size();
        summary.active = active.size() - reject.size();
        summary.max_lower = max_lower;
        result.stages.push_back(summary);
    }

    const auto active = candidates.active_indices();
    result.best = active.front();
    double lo = inf, hi = -inf;
    for (std::size_t i = 0; i < n; ++i) {
        const double m = result.bounds[i].mean;
        if (std::isnan(m)) continue;
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    for (std::size_t i : active) {
        const double m = result.bounds[i].mean;
        if (!std::isnan(m) && (std::isnan(result.bounds[result.best].mean) || m > result.bounds[result.best].mean)) {
            result.best = i;
        }
    }
    result.best_value = result.bounds[result.best].mean;
    const double slack = options.near_optimal_fraction * (hi > lo ? hi - lo : 0.0);
    for (std::size_t i : active) {
        if (result.bounds[i].mean >= result.best_value - slack) result.near_optimal.push_back(i);
    }
    result.set = std::move(candidates);
    return result;
}

bool dominates(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("dominance needs equal-length vectors");
    bool strict = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] < b[k]) return false;
        if (a[k] > b[k]) strict = true;
    }
    return strict;
}

std::vector<std::size_t> non_dominated(const RowMatrix& values) {
    std::vector<std::size_t> out;
    const auto m = static_cast<std::size_t>(values.cols());
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        bool dominated = false;
        for (Eigen::Index j = 0; j < values.rows() && !dominated; ++j) {
            dominated = j != i && dominates({values.data() + j * values.cols(), m}, {values.data() + i * values.cols(), m});
        }
        if (!dominated) out.push_back(static_cast<std::size_t>(i));
    }
    return out;
}

ParetoResult pareto_front(const DecisionSet& candidates, const std::vector<DecisionEvaluator>& evaluators,
                          const std::vector<Orientation>& orientation, const ParetoOptions& options) {
    if (evaluators.empty()) throw InvalidArgument("Pareto search needs at least one attribute");
    if (evaluators.size() != orientation.size()) {
        throw InvalidArgument("attribute count " + std::to_string(orientation.size()) + " does not match evaluator count " +
                              std::to_string(evaluators.size()));
    }
    const std::size_t n = candidates.size();
    if (n == 0) throw InvalidArgument("Pareto search needs candidates");
    if (!(options.k_bound > 0.0) || options.stages == 0) throw InvalidArgument("Pareto search needs k_bound > 0 and a stage");
    const std::size_t m = evaluators.size();
    const std::size_t budget = options.budget > 0 ? options.budget : (n + options.stages - 1) / options.stages;
    auto sign = [&](std::size_t k) { return orientation[k] == Orientation::maximize ? 1.0 : -1.0; };

    ParetoResult result;
    result.evaluations.assign(n, std::nullopt);
    const RowMatrix unit = unit_points(candidates);
    std::vector<bool> evaluated(n, false), removed(n, false);
    std::vector<std::size_t> available;
    for (std::size_t i = 0; i < n; ++i) {
        if (candidates.active(i)) available.push_back(i);
    }

    for (std::size_t stage = 1; stage <= options.stages; ++stage) {
        std::vector<std::size_t> pool;
        for (std::size_t i : available) {
            if (!evaluated[i] && !removed[i]) pool.push_back(i);
        }
        if (pool.empty()) break;
        const bool last = stage == options.stages;
        for (std::size_t i : farthest_points(unit, pool, evaluated, last ? pool.size() : budget)) {
            std::vector<Estimate> e;
            for (const auto& ev : evaluators) e.push_back(ev(candidates.decision(i), i));
            result.evaluations[i] = std::move(e);
            evaluated[i] = true;
        }
        if (last) break;

        // Oriented bounds per attribute; an unevaluated candidate is removed
        // when an evaluated one certainly dominates it.
        std::vector<std::vector<Bounds>> bounds(m);
        for (std::size_t k = 0; k < m; ++k) {
            std::vector<std::optional<Estimate>> col(n);
            for (std::size_t i = 0; i < n; ++i) {
                if (result.evaluations[i]) {
                    Estimate e = (*result.evaluations[i])[k];
                    e.mean *= sign(k);
                    col[i] = e;
                }
            }
            bounds[k] = attribute_bounds(candidates, col, options.k_bound, options.fit);
        }
        for (std::size_t c : available) {
            if (evaluated[c] || removed[c]) continue;
            for (std::size_t o : available) {
                if (!evaluated[o] || o == c) continue;
                bool all = true, strict = false;
                for (std::size_t k = 0; k < m && all; ++k) {
                    all = bounds[k][o].lower >= bounds[k][c].upper;
                    strict = strict || bounds[k][o].lower > bounds[k][c].upper;
                }
                if (all && strict) {
                    removed[c] = true;
                    result.eliminated.push_back(c);
                    break;
                }
            }
        }
    }

    std::vector<std::size_t> done;
    for (std::size_t i = 0; i < n; ++i) {
        if (evaluated[i]) done.push_back(i);
    }
    RowMatrix oriented(static_cast<Eigen::Index>(done.size()), static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < done.size(); ++r) {
        for (std::size_t k = 0; k < m; ++k) {
            oriented(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = sign(k) * (*result.evaluations[done[r]])[k].mean;
        }
    }
    const auto front = non_dominated(oriented);
    result.coordinates.resize(static_cast<Eigen::Index>(front.size()), static_cast<Eigen::Index>(m));
    for (std::size_t b = 0; b < front.size(); ++b) {
        result.boundary.push_back(done[front[b]]);
        for (std::size_t k = 0; k < m; ++k) {
            result.coordinates(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)) = (*result.evaluations[done[front[b]]])[k].mean;
        }
    }
    result.dominated_count = available.size() - result.boundary.size();

    // Epsilon-nondominated: no evaluated row dominates the row shifted up by
    // near_fraction of each attribute's range.
    std::vector<double> eps(m, 0.0);
    for (std::size_t k = 0; k < m && oriented.rows() > 0; ++k) {
        eps[k] = options.near_fraction * (oriented.col(static_cast<Eigen::Index>(k)).maxCoeff() -
                                          oriented.col(static_cast<Eigen::Index>(k)).minCoeff());
    }
    for (Eigen::Index r = 0; r < oriented.rows(); ++r) {
        std::vector<double> shifted(m);
        for (std::size_t k = 0; k < m; ++k) shifted[k] = oriented(r, static_cast<Eigen::Index>(k)) + eps[k];
        bool dominated = false;
        for (Eigen::Index o = 0; o < oriented.rows() && !dominated; ++o) {
            dominated = o != r && dominates({oriented.data() + o * oriented.cols(), m}, shifted);
        }
        if (!dominated) result.near_boundary.push_back(done[static_cast<std::size_t>(r)]);
    }
    return result;
}

RiskProfile risk_profile(const OutcomeSource& source, std::span<const double> decision, std::size_t n_samples,
                         std::uint64_t seed, const std::map<std::string, double>& thresholds) {
    if (n_samples == 0) throw InvalidArgument("risk profile needs at least one sample");
    RiskProfile rp;
    rp.decision.assign(decision.begin(), decision.end());
    rp.attributes = source.attributes();
    for (const auto& [name, t] : thresholds) {
        if (std::find(rp.attributes.begin(), rp.attributes.end(), name) == rp.attributes.end()) {
            throw InvalidArgument("threshold names unknown attribute '" + name + "'");
        }
    }
    rp.samples = source.sample(decision, n_samples, seed);
    for (std::size_t k = 0; k < rp.attributes.size(); ++k) {
        const Eigen::VectorXd c = rp.samples.col(static_cast<Eigen::Index>(k));
        const std::vector<double> v(c.data(), c.data() + c.size());
        AttributeSummary s;
        const Estimate e = estimate_of(v);
        s.mean = e.mean;
        s.variance = e.standard_error == 0.0 ? 0.0 : sample_variance(v);
        const auto q = quantiles(v, risk_quantile_levels);
        std::copy(q.begin(), q.end(), s.quantiles.begin());
        if (const auto it = thresholds.find(rp.attributes[k]); it != thresholds.end()) {
            s.threshold = it->second;
            const auto below = std::count_if(v.begin(), v.end(), [&](double x) { return x < it->second; });
            s.probability_below = static_cast<double>(below) / static_cast<double>(v.size());
        }
        rp.summary.push_back(s);
    }
    return rp;
}

StakeholderComparison compare_stakeholders(const DecisionSet& candidates,
                                           const std::vector<std::pair<std::string, DecisionEvaluator>>& stakeholders,
                                           const StagedOptions& options) {
    if (stakeholders.empty()) throw InvalidArgument("stakeholder comparison needs at least one stakeholder");
    StakeholderComparison out;
    std::set<std::size_t> common;
    for (std::size_t s = 0; s < stakeholders.size(); ++s) {
        out.stakeholders.push_back(stakeholders[s].first);
        const auto survivors = staged_rejection(candidates, stakeholders[s].second, options).set.active_indices();
        if (s == 0) common.insert(survivors.begin(), survivors.end());
        else {
            std::set<std::size_t> keep;
            for (std::size_t i : survivors) {
                if (common.count(i)) keep.insert(i);
            }
            common = std::move(keep);
        }
        out.survivors.push_back(survivors);
    }
    out.common.assign(common.begin(), common.end());
    return out;
}

}  // namespace emuchain
