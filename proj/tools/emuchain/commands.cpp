#include "commands.hpp"

#include "emuchain/calibration.hpp"
#include "emuchain/chain.hpp"
#include "emuchain/decision.hpp"
#include "emuchain/decision_tree.hpp"
#include "emuchain/design.hpp"
#include "emuchain/discrepancy.hpp"
#include "emuchain/emulator.hpp"
#include "emuchain/error.hpp"
#include "emuchain/format.hpp"
#include "emuchain/io.hpp"
#include "emuchain/report.hpp"
#include "emuchain/simulator.hpp"

#include <chrono>
#include <memory>

namespace emuchain::cli {

namespace fs = std::filesystem;

namespace {

using Registry = std::vector<std::pair<CLI::App*, Action>>;

fs::path base_of(const fs::path& p) { return p.has_parent_path() ? p.parent_path() : fs::path("."); }

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty() || !out.empty()) out.push_back(cur);
    return out;
}

TrendBasis parse_trend(const std::string& s) {
    if (s == "constant") return TrendBasis::constant;
    if (s == "linear") return TrendBasis::linear;
    if (s == "quadratic") return TrendBasis::quadratic;
    throw InvalidArgument("unknown trend '" + s + "'");
}

std::optional<InputSpace> optional_space(const std::string& path, RunRecord& rec) {
    if (path.empty()) return std::nullopt;
    rec.inputs.emplace_back(path);
    return space_from_json(read_json(path));
}

DesignSet load_design(const std::string& path, const std::optional<InputSpace>& space, RunRecord& rec) {
    rec.inputs.emplace_back(path);
    return read_design_csv(path, space ? &*space : nullptr);
}

// Manifest for a report: a freshly built one from --manifest, else the one
// already pinned in the lock file.
Manifest report_manifest(const std::string& config, const fs::path& lock, RunRecord& rec) {
    if (!config.empty()) {
        rec.inputs.emplace_back(config);
        Manifest m = build_manifest(analysis_config_from_json(read_json(config)));
        rec.manifest = m;
        return m;
    }
    if (fs::exists(lock)) {
        const LockFile l = read_lock(lock);
        if (l.manifest) return *l.manifest;
    }
    throw InvalidArgument("report needs a complete uncertainty manifest; pass --manifest");
}

std::string summary(const Json& j) { return j.dump() + "\n"; }

struct GraphInputs {
    std::string graph, exo;
};

void add_graph_options(CLI::App* sub, GraphInputs& g) {
    sub->add_option("--graph", g.graph, "Model graph document")->required();
    sub->add_option("--exo", g.exo, "Exogenous input document")->required();
}

ExogenousSpec load_exogenous(const std::string& path, RunRecord& rec) {
    rec.inputs.emplace_back(path);
    return exogenous_from_json(read_json(path), base_of(path));
}

ModelGraph load_graph(const std::string& path, RunRecord& rec) {
    rec.inputs.emplace_back(path);
    return read_graph(path);
}

}  // namespace

fs::path lock_path(const Context& ctx, const fs::path& output) {
    if (!ctx.lock.empty()) return ctx.lock;
    return (output.empty() ? fs::path(".") : base_of(output)) / "analysis.lock.json";
}

void add_design(CLI::App& app, Registry& out) {
    struct Opts {
        std::string space, out;
        std::size_t n = 0, candidates = 16;
        std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("design", "Maximin jittered Latin hypercube design");
    sub->add_option("--space", o->space, "Input space document")->required();
    sub->add_option("--n", o->n, "Number of runs (default 10 per dimension)");
    sub->add_option("--seed", o->seed, "Master seed")->required();
    sub->add_option("--candidates", o->candidates, "Maximin candidates")->capture_default_str();
    sub->add_option("--out", o->out, "Design CSV")->required();
    out.emplace_back(sub, [o] {
        RunRecord rec;
        rec.seed = o->seed;
        const auto space = *optional_space(o->space, rec);
        LatinHypercubeOptions lo;
        lo.maximin_candidates = o->candidates;
        const auto design = latin_hypercube(space, o->n ? o->n : default_run_count(space), o->seed, lo);
        write_text_atomic(o->out, design_csv(design));
        rec.output = o->out;
        return rec;
    });
}

void add_run(CLI::App& app, Registry& out) {
    struct Opts {
        std::string design, sim, outputs, out, space;
        double timeout = 60.0;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("run", "Evaluate a design on an external simulator");
    sub->add_option("--design", o->design, "Design CSV")->required();
    sub->add_option("--space", o->space, "Input space document when the CSV has no #space line");
    sub->add_option("--sim", o->sim, "Simulator command (line protocol on stdin/stdout)")->required();
    sub->add_option("--outputs", o->outputs, "Comma-separated output names")->required();
    sub->add_option("--timeout", o->timeout, "Per-evaluation timeout in seconds")->capture_default_str();
    sub->add_option("--out", o->out, "Runs CSV")->required();
    out.emplace_back(sub, [o] {
        RunRecord rec;
        const auto design = load_design(o->design, optional_space(o->space, rec), rec);
        const auto handle = SimulatorHandle::external(
            o->sim, design.space().size(), split_list(o->outputs),
            std::chrono::milliseconds(static_cast<long long>(o->timeout * 1000.0)));
        RunOptions ro;
        ro.threads = default_thread_count();
        write_text_atomic(o->out, design_csv(run_design(handle, design, ro)));
        rec.output = o->out;
        return rec;
    });
}

void add_fit(CLI::App& app, Registry& out) {
    struct Opts {
        std::string runs, output, trend = "linear", mode = "ml", hyper, coarse, out;
        bool log = false;
        std::optional<double> rho;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("fit", "Fit an emulator to one output of a runs CSV");
    sub->add_option("--runs,--design", o->runs, "Runs CSV")->required();
    sub->add_option("--output", o->output, "Output column to emulate")->required();
    sub->add_option("--trend", o->trend, "constant, linear or quadratic")->capture_default_str();
    sub->add_option("--mode", o->mode, "ml (likelihood search) or fixed")->capture_default_str();
    sub->add_option("--hyper", o->hyper, "Residual hyperparameter document (required for fixed mode)");
    sub->add_flag("--log", o->log, "Emulate the log of the output");
    sub->add_option("--coarse-runs", o->coarse, "Coarse-model runs CSV for a multi-level fit");
    sub->add_option("--rho", o->rho, "Fix the multi-level coupling instead of fitting it");
    sub->add_option("--out", o->out, "Emulator document")->required();
    out.emplace_back(sub, [o] {
        RunRecord rec;
        const auto design = load_design(o->runs, std::nullopt, rec);
        FitOptions fo;
        fo.trend = parse_trend(o->trend);
        if (o->mode == "fixed") fo.mode = HyperMode::fixed;
        else if (o->mode != "ml") throw InvalidArgument("unknown fit mode '" + o->mode + "'");
        if (!o->hyper.empty()) {
            rec.inputs.emplace_back(o->hyper);
            fo.hyper = residual_from_json(read_json(o->hyper));
        }
        if (o->log) fo.transform = OutputTransform::log;
        Json em;
        if (!o->coarse.empty()) {
            const auto coarse = load_design(o->coarse, std::nullopt, rec);
            em = json_of(fit_multilevel(coarse, design, o->output, fo, o->rho).fine);
        } else {
            if (o->rho) throw InvalidArgument("--rho needs --coarse-runs");
            em = json_of(fit(design, o->output, fo));
        }
        write_json(o->out, em);
        rec.output = o->out;
        rec.stdout_text = summary({{"output", o->output}, {"residual", em["residual"]}, {"warnings", em["warnings"]}});
        return rec;
    });
}

void add_validate(CLI::App& app, Registry& out) {
    struct Opts {
        std::string em, out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("validate", "Leave-one-out diagnostics for an emulator");
    sub->add_option("--em", o->em, "Emulator document")->required();
    sub->add_option("--out", o->out, "Diagnostics document (default: stdout)");
    out.emplace_back(sub, [o] {
        RunRecord rec;
        rec.inputs.emplace_back(o->em);
        const auto report = validate_loo(emulator_from_json(read_json(o->em)));
        Json errs = Json::array();
        for (double e : report.standardized_errors) errs.push_back(number_json(e));
        const Json j{{"kind", "validation"}, {"format_version", format_version}, {"standardized_errors", errs},
                     {"degenerate", report.degenerate}, {"within_2", report.within_2}, {"within_3", report.within_3}};
        if (o->out.empty()) {
            rec.stdout_text = dump_json(j);
        } else {
            write_json(o->out, j);
            rec.output = o->out;
        }
        return rec;
    });
}

void add_discrepancy(CLI::App& app, Registry& out) {
    struct Opts {
        std::string outputs, external = "relative", scale, base, sim, plan, out, trend = "linear";
        double inflation = 1.0, timeout = 60.0;
        std::uint64_t seed = 0;
        bool emulate = false;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("discrepancy", "Assess internal and specify external discrepancy");
    sub->add_option("--outputs", o->outputs, "Comma-separated model outputs")->required();
    sub->add_option("--external", o->external, "relative or absolute")->capture_default_str();
    sub->add_option("--scale", o->scale, "Comma-separated external scales (relative default 0.1)");
    sub->add_option("--inflation", o->inflation, "External inflation factor")->capture_default_str();
    sub->add_option("--base,--design", o->base, "Base points CSV for internal assessment");
    sub->add_option("--sim", o->sim, "Simulator accepting base inputs followed by perturbations");
    sub->add_option("--plan", o->plan, "Perturbation plan document");
    sub->add_option("--seed", o->seed, "Master seed for perturbations");
    sub->add_option("--timeout", o->timeout, "Per-evaluation timeout in seconds")->capture_default_str();
    sub->add_flag("--emulate", o->emulate, "Emulate internal log-variance over the input space");
    sub->add_option("--trend", o->trend, "Trend for variance emulation")->capture_default_str();
    sub->add_option("--out", o->out, "Discrepancy document")->required();
    out.emplace_back(sub, [o] {
        RunRecord rec;
        const auto outputs = split_list(o->outputs);
        ExternalDiscrepancy ext;
        if (o->external == "relative") ext.mode = ExternalMode::relative;
        else if (o->external == "absolute") ext.mode = ExternalMode::absolute;
        else throw InvalidArgument("unknown external mode '" + o->external + "'");
        if (!o->scale.empty()) {
            for (const auto& s : split_list(o->scale)) ext.scale.push_back(parse_double(s));
            if (ext.scale.size() == 1 && outputs.size() > 1) ext.scale.assign(outputs.size(), ext.scale.front());
        } else if (ext.mode == ExternalMode::relative) {
            ext.scale.assign(outputs.size(), default_relative_external_scale);
        } else {
            throw InvalidArgument("absolute external discrepancy needs --scale");
        }
        ext.inflation = o->inflation;
        DiscrepancySpec spec(outputs, {}, ext);
        const bool internal = !o->base.empty() || !o->sim.empty() || !o->plan.empty();
        if (internal) {
            if (o->base.empty() || o->sim.empty() || o->plan.empty()) {
                throw InvalidArgument("internal assessment needs --base, --sim and --plan together");
            }
            rec.seed = o->seed;
            const auto base = load_design(o->base, std::nullopt, rec);
            rec.inputs.emplace_back(o->plan);
            const auto plan = plan_from_json(read_json(o->plan));
            const auto handle = SimulatorHandle::external(
                o->sim, base.space().size() + plan.extra_inputs(), outputs,
                std::chrono::milliseconds(static_cast<long long>(o->timeout * 1000.0)));
            RunOptions ro;
            ro.threads = default_thread_count();
            spec = assess_internal(handle, base, plan, o->seed, ro).with_external(ext);
            if (o->emulate) spec = emulate_internal(spec, parse_trend(o->trend));
        } else if (o->emulate) {
            throw InvalidArgument("--emulate needs an internal assessment");
        }
        write_json(o->out, json_of(spec));
        rec.output = o->out;
        return rec;
    });
}

void add_match(CLI::App& app, Registry& out) {
    struct Opts {
        std::vector<std::string> em;
        std::string disc, obs, candidates, space, out;
        double cutoff = default_implausibility_cutoff;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("match", "History matching by implausibility");
    sub->add_option("--em", o->em, "Emulator document, one per observed output (repeatable)")->required();
    sub->add_option("--disc", o->disc, "Discrepancy document")->required();
    sub->add_option("--obs", o->obs, "Observations document")->required();
    sub->add_option("--candidates", o->candidates, "Candidate points CSV")->required();
    sub->add_option("--space", o->space, "Input space document when the CSV has no #space line");
    sub->add_option("--cutoff", o->cutoff, "Implausibility cutoff")->capture_default_str();
    sub->add_option("--out", o->out, "Retained-space document")->required();
    out.emplace_back(sub, [o] {
        RunRecord rec;
        RetainedDocument doc;
        for (const auto& p : o->em) {
            rec.inputs.emplace_back(p);
            doc.emulators.push_back(std::make_shared<const Emulator>(emulator_from_json(read_json(p))));
        }
        rec.inputs.emplace_back(o->disc);
        doc.discrepancy = discrepancy_from_json(read_json(o->disc));
        rec.inputs.emplace_back(o->obs);
        const auto obs = observations_from_json(read_json(o->obs));
        const auto cand = load_design(o->candidates, optional_space(o->space, rec), rec);
        doc.retained = history_match(doc.emulators, doc.discrepancy, obs, cand, o->cutoff);
        write_json(o->out, json_of(doc));
        rec.output = o->out;
        rec.stdout_text = summary({{"retained", doc.retained.retained_count()},
                                   {"candidates", doc.retained.retained.size()},
                                   {"notes", doc.retained.notes}});
        return rec;
    });
}

void add_forecast(CLI::App& app, Registry& out) {
    struct Opts {
        std::string retained, out;
        std::size_t n = 10000;
        std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("forecast", "Forecast samples over a retained space");
    sub->add_option("--retained", o->retained, "Retained-space document")->required();
    sub->add_option("--n", o->n, "Number of samples")->capture_default_str();
    sub->add_option("--seed", o->seed, "Master seed")->required();
    sub->add_option("--out", o->out, "Samples CSV")->required();
    out.emplace_back(sub, [o] {
        RunRecord rec;
        rec.seed = o->seed;
        rec.inputs.emplace_back(o->retained);
        const auto doc = retained_from_json(read_json(o->retained));
        const auto samples = forecast(doc.emulators, doc.discrepancy, doc.retained, o->n, o->seed);
        std::vector<std::string> cols;
        for (const auto& em : doc.emulators) cols.push_back(em->output());
        write_text_atomic(o->out, matrix_csv(cols, samples));
        rec.output = o->out;
        return rec;
    });
}

void add_propagate(CLI::App& app, Registry& out) {
    struct Opts {
        GraphInputs g;
        std::string decide, out;
        std::size_t n = 10000;
        std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("propagate", "Monte Carlo propagation through a model graph");
    add_graph_options(sub, o->g);
    sub->add_option("--decide", o->decide, "Decision values document");
    sub->add_option("--n", o->n, "Number of samples")->capture_default_str();
    sub->add_option("--seed", o->seed, "Master seed")->required();
    sub->add_option("--out", o->out, "Samples CSV")->required();
    out.emplace_back(sub, [o] {
        RunRecord rec;
        rec.seed = o->seed;
        const auto graph = load_graph(o->g.graph, rec);
        const auto exo = load_exogenous(o->g.exo, rec);
        DecisionValues d;
        if (!o->decide.empty()) {
            rec.inputs.emplace_back(o->decide);
            d = decisions_from_json(read_json(o->decide));
        }
        PropagateOptions po;
        po.threads = default_thread_count();
        const auto r = propagate(graph, exo, d, o->n, o->seed, po);
        write_text_atomic(o->out, matrix_csv(r.columns, r.samples));
        rec.output = o->out;
        return rec;
    });
}

namespace {

struct ReportOutputs {
    std::string report, plot_data, manifest;
};

void add_report_options(CLI::App* sub, ReportOutputs& r) {
    sub->add_option("--report", r.report, "Report document")->required();
    sub->add_option("--manifest", r.manifest, "Analysis configuration used to build the uncertainty manifest");
    sub->add_option("--plot-data", r.plot_data, "Directory for quantile-fan and Pareto-scatter CSVs");
}

std::map<std::string, double> parse_thresholds(const std::vector<std::string>& items) {
    std::map<std::string, double> out;
    for (const auto& t : items) {
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw InvalidArgument("threshold '" + t + "' must be attribute=value");
        out[t.substr(0, eq)] = parse_double(t.substr(eq + 1));
    }
    return out;
}

}  // namespace

void add_decide(CLI::App& app, Registry& out, const Context& ctx) {
    struct Opts {
        GraphInputs g;
        ReportOutputs r;
        std::string utility, grid, space, trend = "linear";
        std::size_t stages = 4, budget = 12, n_inner = 1000, risk_n = 2000;
        double k_bound = 3.0, epsilon = 0.05;
        std::vector<std::string> thresholds;
        std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("decide", "Staged expected-utility rejection over a decision grid");
    add_graph_options(sub, o->g);
    sub->add_option("--utility", o->utility, "Utility document")->required();
    sub->add_option("--grid", o->grid, "Candidate decisions CSV")->required();
    sub->add_option("--space", o->space, "Decision space document when the CSV has no #space line");
    sub->add_option("--stages", o->stages, "Rejection stages")->capture_default_str();
    sub->add_option("--budget", o->budget, "New evaluations per stage")->capture_default_str();
    sub->add_option("--k-bound", o->k_bound, "Bound width in standard deviations")->capture_default_str();
    sub->add_option("--n-inner", o->n_inner, "Monte Carlo samples per evaluation")->capture_default_str();
    sub->add_option("--risk-n", o->risk_n, "Samples per risk profile")->capture_default_str();
    sub->add_option("--epsilon", o->epsilon, "Near-optimal fraction of the utility range")->capture_default_str();
    sub->add_option("--threshold", o->thresholds, "attribute=value for P(outcome < value) (repeatable)");
    sub->add_option("--trend", o->trend, "Trend of the utility emulator")->capture_default_str();
    sub->add_option("--seed", o->seed, "Master seed")->required();
    add_report_options(sub, o->r);
    out.emplace_back(sub, [o, &ctx] {
        RunRecord rec;
        rec.seed = o->seed;
        const Manifest manifest = report_manifest(o->r.manifest, lock_path(ctx, o->r.report), rec);
        const auto graph = load_graph(o->g.graph, rec);
        const auto exo = load_exogenous(o->g.exo, rec);
        rec.inputs.emplace_back(o->utility);
        const auto u = utility_from_json(read_json(o->utility));
        const auto grid = load_design(o->grid, optional_space(o->space, rec), rec);
        const auto names = grid.space().names();
        const GraphOutcomeSource source(graph, exo, names, default_thread_count());
        StagedOptions so;
        so.k_bound = o->k_bound;
        so.stages = o->stages;
        so.budget = o->budget;
        so.fit.trend = parse_trend(o->trend);
        so.near_optimal_fraction = o->epsilon;
        DecisionSection section;
        section.decision_names = names;
        section.near_optimal_fraction = o->epsilon;
        section.staged = staged_rejection(DecisionSet(grid.space(), grid.points()),
                                          make_utility_evaluator(source, u, o->n_inner, o->seed), so);
        const auto thresholds = parse_thresholds(o->thresholds);
        for (std::size_t i : section.staged.set.active_indices()) {
            section.profiled.push_back(i);
            section.profiles.push_back(risk_profile(source, section.staged.set.decision(i), o->risk_n,
                                                    substream_seed(o->seed, "report.risk", i), thresholds));
        }
        ReportContent content;
        content.manifest = manifest;
        content.seed = o->seed;
        content.decisions = section;
        write_json(o->r.report, render_report(content));
        if (!o->r.plot_data.empty()) {
            write_text_atomic(fs::path(o->r.plot_data) / "quantile_fan.csv", quantile_fan_csv(section));
        }
        rec.output = o->r.report;
        rec.stdout_text = summary({{"survivors", section.staged.set.active_indices()},
                                   {"best", section.staged.best},
                                   {"near_optimal", section.staged.near_optimal}});
        return rec;
    });
}

void add_pareto(CLI::App& app, Registry& out, const Context& ctx) {
    struct Opts {
        GraphInputs g;
        ReportOutputs r;
        std::string grid, space, attrs, trend = "linear";
        std::size_t stages = 3, budget = 0, n_inner = 1000;
        double k_bound = 3.0, epsilon = 0.05;
        std::uint64_t seed = 0;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("pareto", "Pareto boundary of expected attributes over a decision grid");
    add_graph_options(sub, o->g);
    sub->add_option("--grid", o->grid, "Candidate decisions CSV")->required();
    sub->add_option("--space", o->space, "Decision space document when the CSV has no #space line");
    sub->add_option("--attrs", o->attrs, "Attributes with orientation, e.g. cost:min,benefit:max")->required();
    sub->add_option("--stages", o->stages, "Elimination stages")->capture_default_str();
    sub->add_option("--budget", o->budget, "Evaluations per stage (0: even split)")->capture_default_str();
    sub->add_option("--k-bound", o->k_bound, "Bound width in standard deviations")->capture_default_str();
    sub->add_option("--n-inner", o->n_inner, "Monte Carlo samples per evaluation")->capture_default_str();
    sub->add_option("--epsilon", o->epsilon, "Near-boundary fraction of each attribute range")->capture_default_str();
    sub->add_option("--trend", o->trend, "Trend of the attribute emulators")->capture_default_str();
    sub->add_option("--seed", o->seed, "Master seed")->required();
    add_report_options(sub, o->r);
    out.emplace_back(sub, [o, &ctx] {
        RunRecord rec;
        rec.seed = o->seed;
        const Manifest manifest = report_manifest(o->r.manifest, lock_path(ctx, o->r.report), rec);
        const auto graph = load_graph(o->g.graph, rec);
        const auto exo = load_exogenous(o->g.exo, rec);
        const auto grid = load_design(o->grid, optional_space(o->space, rec), rec);
        const auto names = grid.space().names();
        const GraphOutcomeSource source(graph, exo, names, default_thread_count());
        ParetoSection section;
        section.decision_names = names;
        section.candidates = grid.points();
        section.near_fraction = o->epsilon;
        std::vector<DecisionEvaluator> evaluators;
        for (const auto& a : split_list(o->attrs)) {
            const auto colon = a.rfind(':');
            if (colon == std::string::npos) throw InvalidArgument("attribute '" + a + "' must be name:min or name:max");
            const auto dir = a.substr(colon + 1);
            if (dir != "min" && dir != "max") throw InvalidArgument("orientation of '" + a + "' must be min or max");
            section.attributes.push_back(a.substr(0, colon));
            section.orientation.push_back(dir == "max" ? Orientation::maximize : Orientation::minimize);
            evaluators.push_back(make_attribute_evaluator(source, section.attributes.back(), o->n_inner, o->seed));
        }
        ParetoOptions po;
        po.k_bound = o->k_bound;
        po.stages = o->stages;
        po.budget = o->budget;
        po.fit.trend = parse_trend(o->trend);
        po.near_fraction = o->epsilon;
        section.result = pareto_front(DecisionSet(grid.space(), grid.points()), evaluators, section.orientation, po);
        ReportContent content;
        content.manifest = manifest;
        content.seed = o->seed;
        content.pareto = section;
        write_json(o->r.report, render_report(content));
        if (!o->r.plot_data.empty()) {
            write_text_atomic(fs::path(o->r.plot_data) / "pareto_scatter.csv", pareto_scatter_csv(section));
        }
        rec.output = o->r.report;
        rec.stdout_text = summary({{"boundary", section.result.boundary}, {"dominated", section.result.dominated_count}});
        return rec;
    });
}

void add_tree(CLI::App& app, Registry& out) {
    struct Opts {
        std::string tree, utility, out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("tree", "Solve a decision tree by backward induction");
    sub->add_option("--tree", o->tree, "Decision tree document")->required();
    sub->add_option("--utility", o->utility, "Utility document (default: linear)");
    sub->add_option("--out", o->out, "Solution document (default: stdout)");
    out.emplace_back(sub, [o] {
        RunRecord rec;
        rec.inputs.emplace_back(o->tree);
        const auto tree = tree_from_json(read_json(o->tree));
        UtilitySpec u = UtilitySpec::linear();
        if (!o->utility.empty()) {
            rec.inputs.emplace_back(o->utility);
            u = utility_from_json(read_json(o->utility));
        }
        const auto sol = solve_tree(tree, u);
        Json policy = Json::array();
        for (const auto& [node, child] : sol.policy) {
            const auto& n = tree.node(node);
            Json p{{"node", node}, {"choice", child}, {"child", n.children[child]}};
            if (!n.label.empty()) p["label"] = n.label;
            if (!n.options.empty()) p["option"] = n.options[child];
            policy.push_back(std::move(p));
        }
        Json values = Json::array();
        for (double v : sol.node_values) values.push_back(number_json(v));
        const Json j{{"kind", "tree_solution"}, {"format_version", format_version}, {"value", number_json(sol.value)},
                     {"policy", policy}, {"node_values", values}};
        if (o->out.empty()) {
            rec.stdout_text = dump_json(j);
        } else {
            write_json(o->out, j);
            rec.output = o->out;
        }
        return rec;
    });
}

void add_audit(CLI::App& app, Registry& out, const Context& ctx) {
    auto* sub = app.add_subcommand("audit", "Audit-trail operations");
    sub->require_subcommand(1);
    auto* verify = sub->add_subcommand("verify", "Verify the manifest and hash chain of a lock file");
    out.emplace_back(verify, [&ctx] {
        const fs::path path = lock_path(ctx, {});
        const LockFile lock = read_lock(path);
        RunRecord rec;
        rec.stdout_text = summary({{"lock", path.string()}, {"records", lock.audit.size()},
                                   {"manifest", lock.manifest.has_value()}, {"verified", true}});
        return rec;
    });
}

void add_report(CLI::App& app, Registry& out, const Context& ctx) {
    struct Opts {
        std::vector<std::string> from;
        std::string manifest, out;
    };
    auto o = std::make_shared<Opts>();
    auto* sub = app.add_subcommand("report", "Assemble a manifest-gated report from earlier results");
    sub->add_option("--from", o->from, "decide/pareto report to include (repeatable)");
    sub->add_option("--manifest", o->manifest, "Analysis configuration used to build the uncertainty manifest");
    sub->add_option("--out", o->out, "Report document")->required();
    out.emplace_back(sub, [o, &ctx] {
        RunRecord rec;
        ReportContent content;
        content.manifest = report_manifest(o->manifest, lock_path(ctx, o->out), rec);
        Json decisions = Json::object(), pareto = nullptr, seed = nullptr;
        for (const auto& p : o->from) {
            rec.inputs.emplace_back(p);
            const Json j = read_json(p);
            if (!j.contains("kind") || j.at("kind") != "report") throw FormatError(p + " is not a report");
            if (j.contains("decisions") && !j.at("decisions").empty()) decisions = j.at("decisions");
            if (j.contains("pareto") && !j.at("pareto").is_null()) pareto = j.at("pareto");
            if (seed.is_null() && j.contains("seed")) seed = j.at("seed");
        }
        Json r = render_report(content);
        r["decisions"] = decisions;
        r["pareto"] = pareto;
        r["seed"] = seed;
        write_json(o->out, r);
        rec.output = o->out;
        return rec;
    });
}

}  // namespace emuchain::cli
