#include "emuchain/report.hpp"

#include "emuchain/chain.hpp"
#include "emuchain/format.hpp"

#include <algorithm>

namespace emuchain {

namespace {

Json estimate_json(const Estimate& e) { return {{"mean", number_json(e.mean)}, {"standard_error", number_json(e.standard_error)}}; }

Json decision_json(const std::vector<std::string>& names, std::span<const double> d) {
    Json j = Json::object();
    for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = d[i];
    return j;
}

Json profile_json(const RiskProfile& p) {
    Json attrs = Json::array();
    for (std::size_t k = 0; k < p.attributes.size(); ++k) {
        const auto& s = p.summary[k];
        Json q = Json::object();
        for (std::size_t l = 0; l < risk_quantile_levels.size(); ++l) {
            q[format_double(risk_quantile_levels[l])] = number_json(s.quantiles[l]);
        }
        Json a{{"attribute", p.attributes[k]}, {"mean", number_json(s.mean)}, {"variance", number_json(s.variance)}, {"quantiles", q}};
        if (s.threshold) {
            a["threshold"] = *s.threshold;
            a["probability_below"] = s.probability_below;
        }
        attrs.push_back(std::move(a));
    }
    return {{"decision", p.decision}, {"attributes", attrs}, {"samples_csv", matrix_csv(p.attributes, p.samples)}};
}

}  // namespace

Json render_report(const ReportContent& c) {
    c.manifest.require_complete();
    Json j{{"kind", "report"},
           {"format_version", format_version},
           {"manifest", json_of(c.manifest)},
           {"seed", c.seed ? Json(*c.seed) : Json(nullptr)}};
    Json caveats = Json::array({independence_caveat});
    caveats.push_back("Discrepancy is zero-mean: bias correction of forecasts acts only through variance inflation.");
    for (const auto& n : c.notes) caveats.push_back(n);
    j["caveats"] = caveats;

    Json decisions = Json::object();
    if (c.decisions) {
        const auto& s = *c.decisions;
        const auto& st = s.staged;
        RowMatrix status(static_cast<Eigen::Index>(st.set.size()), 1);
        for (std::size_t i = 0; i < st.set.size(); ++i) status(static_cast<Eigen::Index>(i), 0) = static_cast<double>(st.set.status[i]);
        auto cols = s.decision_names;
        cols.push_back("rejected_at_stage");
        RowMatrix table(st.set.candidates.rows(), st.set.candidates.cols() + 1);
        table << st.set.candidates, status;
        Json stages = Json::array();
        for (const auto& g : st.stages) {
            stages.push_back({{"stage", g.stage}, {"evaluated", g.evaluated}, {"rejected", g.rejected},
                              {"active", g.active}, {"max_lower_bound", number_json(g.max_lower)}});
        }
        Json evals = Json::array();
        for (std::size_t i = 0; i < st.evaluations.size(); ++i) {
            if (st.evaluations[i]) evals.push_back({{"candidate", i}, {"utility", estimate_json(*st.evaluations[i])}});
        }
        Json profiles = Json::array();
        for (std::size_t p = 0; p < s.profiles.size(); ++p) {
            Json pj = profile_json(s.profiles[p]);
            pj["candidate"] = s.profiled[p];
            profiles.push_back(std::move(pj));
        }
        decisions = {{"candidates_csv", matrix_csv(cols, table)},
                     {"survivors", st.set.active_indices()},
                     {"best", {{"candidate", st.best}, {"decision", decision_json(s.decision_names, st.set.decision(st.best))},
                               {"emulated_utility", number_json(st.best_value)}}},
                     {"near_optimal", {{"epsilon", s.near_optimal_fraction}, {"candidates", st.near_optimal}}},
                     {"stages", stages},
                     {"evaluations", evals},
                     {"risk_profiles", profiles}};
    }
    j["decisions"] = decisions;

    if (c.pareto) {
        const auto& p = *c.pareto;
        Json orient = Json::array();
        for (auto o : p.orientation) orient.push_back(o == Orientation::maximize ? "max" : "min");
        Json boundary = Json::array();
        for (std::size_t b = 0; b < p.result.boundary.size(); ++b) {
            const std::size_t i = p.result.boundary[b];
            Json coords = Json::object();
            for (std::size_t k = 0; k < p.attributes.size(); ++k) {
                coords[p.attributes[k]] = number_json(p.result.coordinates(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k)));
            }
            boundary.push_back({{"candidate", i},
                                {"decision", decision_json(p.decision_names, {p.candidates.data() + i * p.candidates.cols(),
                                                                              static_cast<std::size_t>(p.candidates.cols())})},
                                {"attributes", coords}});
        }
        j["pareto"] = {{"attributes", p.attributes},
                       {"orientation", orient},
                       {"boundary", boundary},
                       {"dominated_count", p.result.dominated_count},
                       {"eliminated", p.result.eliminated},
                       {"near_boundary", {{"epsilon", p.near_fraction}, {"candidates", p.result.near_boundary}}},
                       {"scatter_csv", pareto_scatter_csv(p)}};
    } else {
        j["pareto"] = nullptr;
    }
    return j;
}

std::string quantile_fan_csv(const DecisionSection& s) {
    std::vector<std::string> cols{"candidate", "attribute_index"};
    for (double l : risk_quantile_levels) cols.push_back("q" + format_double(l));
    std::size_t rows = 0;
    for (const auto& p : s.profiles) rows += p.attributes.size();
    RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols.size()));
    Eigen::Index r = 0;
    for (std::size_t p = 0; p < s.profiles.size(); ++p) {
        for (std::size_t k = 0; k < s.profiles[p].attributes.size(); ++k, ++r) {
            m(r, 0) = static_cast<double>(s.profiled[p]);
            m(r, 1) = static_cast<double>(k);
            for (std::size_t l = 0; l < risk_quantile_levels.size(); ++l) {
                m(r, static_cast<Eigen::Index>(2 + l)) = s.profiles[p].summary[k].quantiles[l];
            }
        }
    }
    std::string out = "#attributes=";
    if (!s.profiles.empty()) {
        for (std::size_t k = 0; k < s.profiles.front().attributes.size(); ++k) {
            out += (k ? "," : "") + s.profiles.front().attributes[k];
        }
    }
    return out + "\n" + matrix_csv(cols, m);
}

std::string pareto_scatter_csv(const ParetoSection& p) {
    std::vector<std::string> cols{"candidate"};
    cols.insert(cols.end(), p.attributes.begin(), p.attributes.end());
    cols.push_back("on_boundary");
    std::vector<std::size_t> evaluated;
    for (std::size_t i = 0; i < p.result.evaluations.size(); ++i) {
        if (p.result.evaluations[i]) evaluated.push_back(i);
    }
    RowMatrix m(static_cast<Eigen::Index>(evaluated.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < evaluated.size(); ++r) {
        const std::size_t i = evaluated[r];
        const auto row = static_cast<Eigen::Index>(r);
        m(row, 0) = static_cast<double>(i);
        for (std::size_t k = 0; k < p.attributes.size(); ++k) m(row, static_cast<Eigen::Index>(1 + k)) = (*p.result.evaluations[i])[k].mean;
        const bool on = std::find(p.result.boundary.begin(), p.result.boundary.end(), i) != p.result.boundary.end();
        m(row, static_cast<Eigen::Index>(cols.size() - 1)) = on ? 1.0 : 0.0;
    }
    return matrix_csv(cols, m);
}

}  // namespace emuchain
