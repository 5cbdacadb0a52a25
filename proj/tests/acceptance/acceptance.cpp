// Acceptance harness: runs the ten top-level criteria and prints one
// PASS/FAIL line for each. Exit status is non-zero if any criterion fails.

#include "emuchain/calibration.hpp"
#include "emuchain/chain.hpp"
#include "emuchain/decision.hpp"
#include "emuchain/decision_tree.hpp"
#include "emuchain/design.hpp"
#include "emuchain/discrepancy.hpp"
#include "emuchain/emulator.hpp"
#include "emuchain/error.hpp"
#include "emuchain/io.hpp"
#include "emuchain/ledger.hpp"
#include "emuchain/report.hpp"
#include "emuchain/rng.hpp"
#include "emuchain/utility.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace emuchain;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects failed checks; the first few are echoed in the summary line.
class Checks {
public:
    void require(bool ok, const std::string& what) {
        if (!ok) failures_.push_back(what);
    }
    Outcome outcome(std::string summary) const {
        Outcome o;
        o.pass = failures_.empty();
        o.detail = std::move(summary);
        for (std::size_t i = 0; i < failures_.size() && i < 3; ++i) o.detail += "; " + failures_[i];
        if (failures_.size() > 3) o.detail += "; +" + std::to_string(failures_.size() - 3) + " more";
        return o;
    }

private:
    std::vector<std::string> failures_;
};

std::string num(double v) {
    std::ostringstream s;
    s.precision(8);
    s << v;
    return s.str();
}

// 1. Utility example reproduction.
Outcome utility_examples() {
    Checks c;
    const Gamble a{{{{0.0}, 1.0}}};
    const Gamble b{{{{20.0}, 0.1}, {{-1.0}, 0.9}}};
    const double eb = utility_of_gamble(UtilitySpec::linear(), b);
    c.require(eb == 1.1, "linear E[B] = " + num(eb));
    const auto log2 = UtilitySpec::log_shifted(2.0);
    const double ua = utility_of_gamble(log2, a), ub = utility_of_gamble(log2, b);
    c.require(ua > ub, "log-shifted U(A) " + num(ua) + " <= U(B) " + num(ub));
    return c.outcome("E[B]=" + num(eb) + ", U_log(A)=" + num(ua) + " > U_log(B)=" + num(ub));
}

// 2. Emulator agrees with the dense-solve oracle on small designs.
Outcome emulator_oracle() {
    Checks c;
    double worst_abs = 0.0, worst_interp = 0.0;
    std::size_t cases = 0;
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
        Rng rng(substream_seed(99, "acceptance.emulator", seed));
        const std::size_t d = 1 + seed % 3;
        const TrendBasis trend = static_cast<TrendBasis>(seed % 3);
        const std::size_t q = basis_size(trend, d);
        const std::size_t n = std::max<std::size_t>(q + 1, 2 + rng.index(5));
        if (n > 6) continue;
        std::vector<Dimension> dims;
        for (std::size_t k = 0; k < d; ++k) {
            const double lo = rng.uniform(-3.0, 1.0);
            dims.push_back({"x" + std::to_string(k), lo, lo + rng.uniform(0.5, 4.0)});
        }
        const InputSpace space(dims);
        const auto design = latin_hypercube(space, n, seed);
        Eigen::VectorXd y(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            const auto p = design.point(i);
            double v = 0.0;
            for (std::size_t k = 0; k < d; ++k) v += std::sin(1.3 * p[k] + static_cast<double>(k)) + 0.2 * p[k] * p[k];
            y(static_cast<Eigen::Index>(i)) = v;
        }
        ResidualProcessSpec r;
        r.variance = rng.uniform(0.5, 2.0);
        for (std::size_t k = 0; k < d; ++k) r.correlation_lengths.push_back(rng.uniform(0.3, 1.5));
        const Emulator em(space, design.points(), y, "y", trend, r);

        oracle::Gp gp;
        for (std::size_t i = 0; i < n; ++i) {
            const auto p = design.point(i);
            gp.points.emplace_back(p.begin(), p.end());
            gp.y.push_back(y(static_cast<Eigen::Index>(i)));
        }
        for (const auto& dim : space.dims()) {
            gp.lower.push_back(dim.lower);
            gp.upper.push_back(dim.upper);
        }
        gp.degree = static_cast<int>(trend);
        gp.variance = r.variance;
        gp.lengths = r.correlation_lengths;
        ++cases;

        for (int t = 0; t < 20; ++t) {
            std::vector<double> x(d);
            for (std::size_t k = 0; k < d; ++k) x[k] = rng.uniform(dims[k].lower, dims[k].upper);
            const auto p = em.predict(x);
            const auto [m, v] = gp.predict(x);
            worst_abs = std::max({worst_abs, std::abs(p.mean - m), std::abs(p.raw_variance - v)});
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto p = em.predict(design.point(i));
            const double yi = y(static_cast<Eigen::Index>(i));
            worst_interp = std::max(worst_interp, std::abs(p.mean - yi) / std::max(1.0, std::abs(yi)));
            c.require(std::abs(p.variance) <= 1e-8, "variance at a training point " + num(p.variance));
        }
    }
    c.require(cases >= 30, "too few cases: " + std::to_string(cases));
    c.require(worst_abs <= 1e-10, "mean/variance deviation " + num(worst_abs));
    c.require(worst_interp <= 1e-8, "interpolation deviation " + num(worst_interp));
    return c.outcome(std::to_string(cases) + " designs, max |diff| " + num(worst_abs) + ", interpolation rel " +
                     num(worst_interp));
}

// 3. Linear-Gaussian two-node chain: mean 3, variance 6.
Outcome chained_propagation() {
    Checks c;
    const auto chain = fixtures::linear_gaussian_chain();
    const std::size_t n = 100000;
    const auto r = propagate(chain.graph, chain.exogenous, {}, n, 31337);
    const double m = fixtures::column_mean(r.samples, 0);
    const double v = fixtures::column_variance(r.samples, 0);
    const double se_m = std::sqrt(6.0 / static_cast<double>(n));
    const double se_v = 6.0 * std::sqrt(2.0 / static_cast<double>(n - 1));
    c.require(std::abs(m - 3.0) <= 4.0 * se_m, "mean " + num(m));
    c.require(std::abs(v - 6.0) <= 4.0 * se_v, "variance " + num(v));
    return c.outcome("n=1e5 mean " + num(m) + " (z=" + num((m - 3.0) / se_m) + "), variance " + num(v) + " (z=" +
                     num((v - 6.0) / se_v) + ")");
}

// 4. History-matching coverage and implausibility spot values.
Outcome history_matching() {
    Checks c;
    // Spot values: residual 3 against three unit variances; residual 6
    // against (0, 0, 4).
    const InputSpace s({{"x", 0.0, 1.0}});
    const auto em = fixtures::exact_emulator(s, "y", [](std::span<const double> p) { return 10.0 * p[0]; });
    const std::vector<double> at{0.5};
    InternalDiscrepancy internal;
    internal.variance = {1.0};
    internal.correlation = Eigen::MatrixXd::Identity(1, 1);
    const DiscrepancySpec unit_disc({"y"}, internal, {ExternalMode::absolute, {1.0}, 1.0});
    const double mean = em->predict(at).mean;
    const double i1 = implausibility(*em, unit_disc, {"y", mean + 3.0, 1.0}, at);
    const double i2 = implausibility(*em, DiscrepancySpec::zero({"y"}), {"y", mean - 6.0, 4.0}, at);
    c.require(std::abs(i1 - 1.7320508) < 5e-8 && std::abs(i1 - std::sqrt(3.0)) < 1e-12, "spot value 1: " + num(i1));
    c.require(i2 == 3.0, "spot value 2: " + num(i2));

    // Coverage: truth x*, data f(x*) + measurement noise, emulators refitted
    // for every repetition on a fresh 20-run design.
    const InputSpace space({{"a", 0.0, 1.0}, {"b", 0.0, 1.0}});
    auto f1 = [](std::span<const double> p) { return std::sin(3.0 * p[0]) + p[1]; };
    auto f2 = [](std::span<const double> p) { return p[0] * p[1] + std::cos(2.0 * p[1]); };
    const double meas_var = 0.05 * 0.05;
    std::size_t retained = 0;
    const std::size_t reps = 500;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        auto design = latin_hypercube(space, 20, 1000 + rep);
        RowMatrix resp(20, 2);
        for (std::size_t i = 0; i < 20; ++i) {
            resp(static_cast<Eigen::Index>(i), 0) = f1(design.point(i));
            resp(static_cast<Eigen::Index>(i), 1) = f2(design.point(i));
        }
        design = design.with_responses({"f1", "f2"}, resp);
        const EmulatorSet ems{std::make_shared<const Emulator>(fit(design, "f1")),
                              std::make_shared<const Emulator>(fit(design, "f2"))};
        Rng rng(substream_seed(4, "acceptance.coverage", rep));
        RowMatrix cand(5, 2);
        for (Eigen::Index i = 0; i < 5; ++i) cand.row(i) << rng.uniform(), rng.uniform();
        const std::vector<double> truth{cand(0, 0), cand(0, 1)};
        const std::vector<Observation> obs{
            {"f1", f1(truth) + rng.normal(0.0, std::sqrt(meas_var)), meas_var},
            {"f2", f2(truth) + rng.normal(0.0, std::sqrt(meas_var)), meas_var}};
        const auto rs = history_match(ems, DiscrepancySpec::zero({"f1", "f2"}), obs, DesignSet(space, cand), 3.0);
        if (rs.retained[0]) ++retained;
    }
    const double frac = static_cast<double>(retained) / static_cast<double>(reps);
    c.require(frac >= 0.99, "coverage " + num(frac));
    return c.outcome("spot values " + num(i1) + ", " + num(i2) + "; truth retained " + std::to_string(retained) + "/" +
                     std::to_string(reps));
}

// 5. Staged rejection keeps the brute-force argmax.
Outcome staged_soundness() {
    Checks c;
    std::size_t kept = 0;
    std::size_t survivors_total = 0;
    const std::size_t surfaces = 100;
    for (std::size_t s = 0; s < surfaces; ++s) {
        Rng rng(substream_seed(5, "acceptance.surface", s));
        const double a = rng.uniform(0.5, 6.0), centre = rng.uniform(0.05, 0.95), level = rng.uniform(-2.0, 2.0);
        const double noise = rng.uniform(0.2, 1.0);
        auto u = [=](double d) { return level - a * (d - centre) * (d - centre); };
        const FunctionOutcomeSource source({"y"}, [=](std::span<const double> d, std::size_t n, std::uint64_t seed) {
            Rng r(seed);
            RowMatrix out(static_cast<Eigen::Index>(n), 1);
            for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i), 0) = u(d[0]) + r.normal(0.0, noise);
            return out;
        });
        RowMatrix grid(101, 1);
        std::size_t argmax = 0;
        for (Eigen::Index i = 0; i < 101; ++i) {
            grid(i, 0) = static_cast<double>(i) / 100.0;
            if (u(grid(i, 0)) > u(grid(static_cast<Eigen::Index>(argmax), 0))) argmax = static_cast<std::size_t>(i);
        }
        StagedOptions opt;
        opt.k_bound = 3.0;
        opt.stages = 4;
        const auto result = staged_rejection(DecisionSet(InputSpace({{"d", 0.0, 1.0, true}}), grid),
                                             make_utility_evaluator(source, UtilitySpec::linear(), 200, 900 + s), opt);
        survivors_total += result.set.active_indices().size();
        if (result.set.active(argmax)) ++kept;
        else c.require(false, "surface " + std::to_string(s) + " lost argmax " + std::to_string(argmax));
    }
    return c.outcome("argmax survived " + std::to_string(kept) + "/" + std::to_string(surfaces) +
                     ", mean survivors " + num(static_cast<double>(survivors_total) / static_cast<double>(surfaces)));
}

// 6. Staged Pareto boundary equals the brute-force non-dominated set.
Outcome pareto_equivalence() {
    Checks c;
    std::size_t total_boundary = 0, total_eliminated = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(substream_seed(6, "acceptance.pareto", seed));
        const double w = rng.uniform(1.0, 4.0), phase = rng.uniform(0.0, 3.0);
        auto f1 = [=](std::span<const double> d) { return d[0] + 0.3 * std::sin(w * d[1] + phase); };
        auto f2 = [=](std::span<const double> d) { return 1.0 - d[0] * d[0] + 0.5 * d[1] * (1.0 - d[1]); };
        RowMatrix cand(50, 2);
        for (Eigen::Index i = 0; i < 50; ++i) cand.row(i) << rng.uniform(), rng.uniform();
        const DecisionSet set(InputSpace({{"d1", 0.0, 1.0, true}, {"d2", 0.0, 1.0, true}}), cand);
        const std::vector<DecisionEvaluator> ev{
            [=](std::span<const double> d, std::size_t) { return Estimate{f1(d), 0.0}; },
            [=](std::span<const double> d, std::size_t) { return Estimate{f2(d), 0.0}; }};
        // Mixed orientation: f1 maximized, f2 minimized.
        const auto result = pareto_front(set, ev, {Orientation::maximize, Orientation::minimize});
        std::vector<oracle::Vec> rows;
        for (std::size_t i = 0; i < 50; ++i) rows.push_back({f1(set.decision(i)), -f2(set.decision(i))});
        const auto expect = oracle::non_dominated(rows);
        const std::set<std::size_t> got(result.boundary.begin(), result.boundary.end());
        c.require(got == std::set<std::size_t>(expect.begin(), expect.end()), "seed " + std::to_string(seed));
        total_boundary += expect.size();
        total_eliminated += result.eliminated.size();
    }
    return c.outcome("20 seeds x 50 candidates, " + std::to_string(total_boundary) + " boundary points, " +
                     std::to_string(total_eliminated) + " eliminated before evaluation");
}

// 7. Backward induction equals exhaustive policy enumeration.
Outcome backward_induction() {
    Checks c;
    std::size_t trees = 0;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(fs::path(EMUCHAIN_SOURCE_DIR) / "tests/data/trees")) {
        if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        const Json j = read_json(path);
        const auto tree = tree_from_json(j);
        const UtilitySpec u = j.contains("utility") ? utility_from_json(j.at("utility")) : UtilitySpec::linear();
        if (tree.decision_nodes().size() > 6) {
            c.require(false, path.filename().string() + " has more than 6 decision nodes");
            continue;
        }
        std::vector<oracle::TreeNode> ot;
        for (const auto& n : tree.nodes()) {
            oracle::TreeNode o;
            o.kind = static_cast<int>(n.kind);
            o.children = n.children;
            o.probabilities = n.probabilities;
            if (n.kind == TreeNodeKind::leaf) o.utility = u(n.reward);
            ot.push_back(o);
        }
        const auto sol = solve_tree(tree, u);
        const double best = oracle::enumerate_best(ot, tree.root());
        c.require(sol.value == best, path.filename().string() + " value " + num(sol.value) + " vs " + num(best));
        c.require(sol.policy == oracle::enumerate_policy(ot), path.filename().string() + " policy differs");
        ++trees;
    }
    c.require(trees >= 40, "corpus too small");
    return c.outcome(std::to_string(trees) + " trees");
}

// 8. Default relative external discrepancy at output scale 50 gives sd 5.
Outcome external_default() {
    Checks c;
    const auto spec = DiscrepancySpec::external_only({"y"}, ExternalMode::relative, {default_relative_external_scale});
    const std::size_t n = 100000;
    Rng rng(substream_seed(8, "acceptance.external"));
    const std::vector<double> point{0.0}, scale{50.0};
    double s = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = sample_discrepancy(spec, point, scale, rng)(0);
        s += v;
        ss += v * v;
    }
    const double m = s / static_cast<double>(n);
    const double sd = std::sqrt((ss - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
    const double se = 5.0 / std::sqrt(2.0 * static_cast<double>(n - 1));
    c.require(default_relative_external_scale == 0.10, "default scale");
    c.require(std::abs(sd - 5.0) <= 4.0 * se, "sd " + num(sd));
    return c.outcome("sd " + num(sd) + " (z=" + num((sd - 5.0) / se) + ")");
}

int run_demo(const fs::path& dir) {
    fs::remove_all(dir);
    const std::string cmd = "sh '" + std::string(EMUCHAIN_SOURCE_DIR) + "/demo/run_demo.sh' '" + EMUCHAIN_CLI +
                            "' '" + dir.string() + "' > '" + dir.string() + ".log' 2>&1";
    return std::system(cmd.c_str());
}

const fs::path work_dir = fs::path(EMUCHAIN_WORK_DIR) / "acceptance_demo";

// 9. End-to-end determinism of the demo report, plus the golden survivors.
Outcome determinism() {
    Checks c;
    const auto a = work_dir / "run_a", b = work_dir / "run_b";
    fs::create_directories(work_dir);
    const int ra = run_demo(a), rb = run_demo(b);
    c.require(ra == 0 && rb == 0, "demo failed, see " + a.string() + ".log");
    if (ra != 0 || rb != 0) return c.outcome("demo did not complete");
    const std::string ta = read_text(a / "report.json"), tb = read_text(b / "report.json");
    c.require(ta == tb, "report.json differs between runs");
    c.require(read_text(a / "decide_report.json") == read_text(b / "decide_report.json"), "decide report differs");
    c.require(read_text(a / "pareto_report.json") == read_text(b / "pareto_report.json"), "pareto report differs");
    const Json golden = read_json(fs::path(EMUCHAIN_SOURCE_DIR) / "demo/golden_survivors.json");
    const Json report = Json::parse(ta);
    c.require(report.at("decisions").at("survivors") == golden.at("survivors"), "survivors differ from golden");
    return c.outcome(std::to_string(ta.size()) + "-byte report identical across runs, survivors match golden");
}

// 10. Invariant suites.
Outcome invariants() {
    Checks c;
    // Argmax invariance under a U + b: expected utility over candidates and
    // tree policies.
    std::size_t affine_cases = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        Rng rng(substream_seed(10, "acceptance.affine", s));
        const double spread = rng.uniform(0.5, 3.0);
        const FunctionOutcomeSource source({"y"}, [=](std::span<const double> d, std::size_t n, std::uint64_t seed) {
            Rng r(seed);
            RowMatrix out(static_cast<Eigen::Index>(n), 1);
            for (std::size_t i = 0; i < n; ++i) {
                out(static_cast<Eigen::Index>(i), 0) = 3.0 * d[0] + spread * d[0] * r.normal();
            }
            return out;
        });
        const UtilitySpec base = UtilitySpec::negative_exponential(rng.uniform(0.2, 1.5));
        const UtilitySpec shifted = base.affine(rng.uniform(0.1, 20.0), rng.uniform(-50.0, 50.0));
        std::size_t arg_a = 0, arg_b = 0;
        double best_a = -INFINITY, best_b = -INFINITY;
        for (std::size_t i = 0; i < 21; ++i) {
            const std::vector<double> d{static_cast<double>(i) / 10.0};
            const double ea = expected_utility(source, base, d, 2000, substream_seed(s, "affine", i)).mean;
            const double eb = expected_utility(source, shifted, d, 2000, substream_seed(s, "affine", i)).mean;
            if (ea > best_a) best_a = ea, arg_a = i;
            if (eb > best_b) best_b = eb, arg_b = i;
        }
        c.require(arg_a == arg_b, "affine argmax case " + std::to_string(s));
        ++affine_cases;
    }
    for (const auto& e : fs::directory_iterator(fs::path(EMUCHAIN_SOURCE_DIR) / "tests/data/trees")) {
        if (e.path().extension() != ".json") continue;
        const auto tree = tree_from_json(read_json(e.path()));
        const auto u = UtilitySpec::log_shifted(10.0);
        c.require(solve_tree(tree, u).policy == solve_tree(tree, u.affine(7.5, -3.0)).policy,
                  "tree policy changed under affine map: " + e.path().filename().string());
        ++affine_cases;
    }

    // Retained-set monotonicity in the cutoff.
    std::size_t monotone_cases = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const InputSpace space({{"a", 0.0, 1.0}, {"b", 0.0, 1.0}});
        auto design = latin_hypercube(space, 15, 50 + s);
        RowMatrix resp(15, 1);
        for (std::size_t i = 0; i < 15; ++i) resp(static_cast<Eigen::Index>(i), 0) = std::exp(design.point(i)[0]) * design.point(i)[1];
        design = design.with_responses({"y"}, resp);
        const EmulatorSet ems{std::make_shared<const Emulator>(fit(design, "y"))};
        const auto cand = latin_hypercube(space, 400, 70 + s);
        const std::vector<Observation> obs{{"y", 0.9, 0.01}};
        const auto disc = DiscrepancySpec::external_only({"y"}, ExternalMode::absolute, {0.05});
        std::vector<bool> prev;
        for (double cut : {0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 10.0}) {
            const auto rs = history_match(ems, disc, obs, cand, cut);
            if (!prev.empty()) {
                for (std::size_t i = 0; i < prev.size(); ++i) {
                    c.require(!prev[i] || rs.retained[i], "cutoff monotonicity, case " + std::to_string(s));
                }
            }
            prev = rs.retained;
            ++monotone_cases;
        }
    }

    // Non-negative predictive variance at 1e4 random points.
    double min_raw = INFINITY;
    std::size_t points = 0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        const InputSpace space({{"a", -1.0, 2.0}, {"b", 0.0, 5.0}, {"c", 0.0, 1.0}});
        auto design = latin_hypercube(space, 30, 300 + s);
        RowMatrix resp(30, 1);
        for (std::size_t i = 0; i < 30; ++i) {
            const auto p = design.point(i);
            resp(static_cast<Eigen::Index>(i), 0) = std::sin(2.0 * p[0]) * p[1] + std::exp(p[2]);
        }
        design = design.with_responses({"y"}, resp);
        FitOptions fo;
        fo.trend = static_cast<TrendBasis>(s % 3);
        const Emulator em = fit(design, "y", fo);
        Rng rng(substream_seed(10, "acceptance.variance", s));
        for (int i = 0; i < 2000; ++i) {
            const std::vector<double> x{rng.uniform(-1.0, 2.0), rng.uniform(0.0, 5.0), rng.uniform(0.0, 1.0)};
            const auto p = em.predict(x);
            min_raw = std::min(min_raw, p.raw_variance);
            c.require(p.variance >= 0.0, "negative clamped variance");
            ++points;
        }
    }
    c.require(min_raw >= -1e-10, "raw variance " + num(min_raw));

    // Manifest completeness on every emitted report.
    std::size_t reports = 0;
    for (const char* name : {"report.json", "decide_report.json", "pareto_report.json"}) {
        const auto path = work_dir / "run_a" / name;
        if (!fs::exists(path)) {
            c.require(false, "missing " + path.string() + " (determinism run needed first)");
            continue;
        }
        const Manifest m = manifest_from_json(read_json(path).at("manifest"));
        std::set<SourceKind> kinds;
        for (const auto& src : m.sources()) kinds.insert(src.kind);
        c.require(m.complete() && kinds.size() == 9 && m.sources().size() == 9, std::string(name) + " manifest incomplete");
        ++reports;
    }
    bool refused = false;
    try {
        ReportContent content;
        content.manifest = Manifest({{SourceKind::functional, Quantified{"emulator"}}});
        render_report(content);
    } catch (const Error&) {
        refused = true;
    }
    c.require(refused, "report rendered with an incomplete manifest");

    return c.outcome(std::to_string(affine_cases) + " affine cases, " + std::to_string(monotone_cases) +
                     " cutoff steps, " + std::to_string(points) + " variance points (min raw " + num(min_raw) + "), " +
                     std::to_string(reports) + " reports with nine-source manifests");
}

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "utility example reproduction", 1.0, utility_examples},
        {2, "emulator oracle equivalence", 10.0, emulator_oracle},
        {3, "chained propagation analytic check", 30.0, chained_propagation},
        {4, "history-matching coverage", 120.0, history_matching},
        {5, "staged rejection soundness", 120.0, staged_soundness},
        {6, "Pareto oracle equivalence", 30.0, pareto_equivalence},
        {7, "backward induction", 10.0, backward_induction},
        {8, "external discrepancy default", 10.0, external_default},
        {9, "end-to-end determinism", 300.0, determinism},
        {10, "invariant suites", 300.0, invariants},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = cr.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs >= cr.limit_seconds) {
            o.pass = false;
            o.detail += "; runtime " + num(secs) + " s over limit " + num(cr.limit_seconds) + " s";
        }
        std::printf("%s C%d %s [%.2f s]: %s\n", o.pass ? "PASS" : "FAIL", cr.id, cr.name, secs, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
