#include "emuchain/chain.hpp"

#include "emuchain/error.hpp"
#include "emuchain/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

namespace emuchain {

std::vector<std::string> ModelNode::output_names() const {
    std::vector<std::string> out;
    for (const auto& em : emulators) out.push_back(em->output());
    return out;
}

const InputSpace& ModelNode::input_space() const {
    if (emulators.empty()) throw InvalidArgument("node '" + name + "' has no emulators");
    return emulators.front()->space();
}

namespace {

std::pair<std::string, std::string> split_column(const std::string& column) {
    const auto dot = column.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == column.size()) {
        throw InvalidArgument("terminal column '" + column + "' must be written node.output");
    }
    return {column.substr(0, dot), column.substr(dot + 1)};
}

std::size_t position(const std::vector<std::string>& names, const std::string& name) {
    const auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? names.size() : static_cast<std::size_t>(it - names.begin());
}

}  // namespace

ModelGraph::ModelGraph(std::vector<ModelNode> nodes, std::vector<std::string> terminal)
    : nodes_(std::move(nodes)), terminal_(std::move(terminal)) {
    if (nodes_.empty()) throw InvalidArgument("model graph needs at least one node");
    std::vector<std::string> names;
    for (const auto& n : nodes_) {
        if (n.name.empty() || n.name.find('.') != std::string::npos) {
            throw InvalidArgument("node name '" + n.name + "' must be non-empty and contain no '.'");
        }
        if (position(names, n.name) != names.size()) throw InvalidArgument("duplicate node '" + n.name + "'");
        names.push_back(n.name);
        if (n.emulators.empty()) throw InvalidArgument("node '" + n.name + "' has no emulators");
        for (const auto& em : n.emulators) {
            if (!em) throw InvalidArgument("node '" + n.name + "' has a null emulator");
            if (!(em->space() == n.emulators.front()->space())) {
                throw InvalidArgument("emulators of node '" + n.name + "' do not share an input space");
            }
        }
        const auto outs = n.output_names();
        std::set<std::string> unique(outs.begin(), outs.end());
        if (unique.size() != outs.size()) throw InvalidArgument("node '" + n.name + "' repeats an output");
        for (const auto& o : n.discrepancy.outputs()) {
            if (!unique.count(o)) {
                throw InvalidArgument("discrepancy of node '" + n.name + "' names unknown output '" + o + "'");
            }
        }
    }

    // Bindings: every input dimension exactly once, sources must exist.
    const std::size_t count = nodes_.size();
    std::vector<std::set<std::size_t>> deps(count);
    for (std::size_t k = 0; k < count; ++k) {
        const auto& n = nodes_[k];
        const auto& space = n.input_space();
        std::vector<int> bound(space.size(), 0);
        for (const auto& b : n.bindings) {
            const auto dim = space.index_of(b.input);
            if (!dim) throw InvalidArgument("node '" + n.name + "' binds unknown input '" + b.input + "'");
            if (++bound[*dim] > 1) throw InvalidArgument("node '" + n.name + "' binds input '" + b.input + "' twice");
            if (const auto* up = std::get_if<UpstreamRef>(&b.source)) {
                const std::size_t j = position(names, up->node);
                if (j == count) throw InvalidArgument("node '" + n.name + "' references unknown node '" + up->node + "'");
                const auto outs = nodes_[j].output_names();
                if (position(outs, up->output) == outs.size()) {
                    throw InvalidArgument("node '" + up->node + "' has no output '" + up->output + "'");
                }
                deps[k].insert(j);
            } else if (const auto* c = std::get_if<ConstantValue>(&b.source)) {
                if (!std::isfinite(c->value)) throw InvalidArgument("constant binding must be finite");
            }
        }
        for (std::size_t d = 0; d < space.size(); ++d) {
            if (bound[d] == 0) {
                throw InvalidArgument("input '" + space.dim(d).name + "' of node '" + n.name + "' is unbound");
            }
        }
    }

    // Kahn's algorithm, lowest index first among ready nodes.
    std::vector<std::size_t> indegree(count, 0);
    for (std::size_t k = 0; k < count; ++k) indegree[k] = deps[k].size();
    std::vector<bool> done(count, false);
    while (order_.size() < count) {
        std::size_t next = count;
        for (std::size_t k = 0; k < count; ++k) {
            if (!done[k] && indegree[k] == 0) {
                next = k;
                break;
            }
        }
        if (next == count) throw InvalidArgument("model graph contains a cycle");
        done[next] = true;
        order_.push_back(next);
        for (std::size_t k = 0; k < count; ++k) {
            if (deps[k].count(next)) --indegree[k];
        }
    }

    if (terminal_.empty()) {
        std::vector<bool> used(count, false);
        for (const auto& d : deps) {
            for (std::size_t j : d) used[j] = true;
        }
        for (std::size_t k = 0; k < count; ++k) {
            if (used[k]) continue;
            for (const auto& o : nodes_[k].output_names()) terminal_.push_back(nodes_[k].name + "." + o);
        }
    }
    for (const auto& col : terminal_) {
        const auto [node_name, output] = split_column(col);
        const auto outs = node(node_name).output_names();
        if (position(outs, output) == outs.size()) throw InvalidArgument("unknown terminal column '" + col + "'");
    }
}

const ModelNode& ModelGraph::node(const std::string& name) const {
    for (const auto& n : nodes_) {
        if (n.name == name) return n;
    }
    throw InvalidArgument("unknown node '" + name + "'");
}

std::vector<std::string> ModelGraph::exogenous_names() const {
    std::vector<std::string> out;
    for (std::size_t k : order_) {
        for (const auto& b : nodes_[k].bindings) {
            if (const auto* e = std::get_if<ExogenousRef>(&b.source)) {
                if (position(out, e->name) == out.size()) out.push_back(e->name);
            }
        }
    }
    return out;
}

std::vector<std::string> ModelGraph::decision_names() const {
    std::vector<std::string> out;
    for (std::size_t k : order_) {
        for (const auto& b : nodes_[k].bindings) {
            if (const auto* d = std::get_if<DecisionRef>(&b.source)) {
                if (position(out, d->name) == out.size()) out.push_back(d->name);
            }
        }
    }
    return out;
}

ModelGraph ModelGraph::with_discrepancy(const std::string& name, DiscrepancySpec disc) const {
    auto nodes = nodes_;
    bool found = false;
    for (auto& n : nodes) {
        if (n.name == name) {
            n.discrepancy = std::move(disc);
            found = true;
        }
    }
    if (!found) throw InvalidArgument("unknown node '" + name + "'");
    return ModelGraph(std::move(nodes), terminal_);
}

bool ExogenousSpec::provides(const std::string& name) const {
    if (inputs.count(name)) return true;
    for (const auto& t : tables) {
        if (position(t.columns, name) != t.columns.size()) return true;
    }
    return false;
}

namespace {

// Per-input resolution plan for one node, precomputed once per propagate call.
struct Slot {
    enum class Kind { upstream, exogenous, decision, constant } kind;
    std::size_t a = 0;  // node index, or exogenous index
    std::size_t b = 0;  // output index
    double value = 0.0;
};

struct Plan {
    std::vector<std::vector<Slot>> slots;                // per node, per input dim
    std::vector<std::vector<std::optional<std::size_t>>> disc_index;  // per node, per output
    std::vector<std::pair<std::size_t, std::size_t>> terminal;
    std::vector<std::string> exogenous;
};

Plan make_plan(const ModelGraph& graph, const ExogenousSpec& exo, const DecisionValues& decisions) {
    Plan plan;
    const auto& nodes = graph.nodes();
    std::vector<std::string> node_names;
    for (const auto& n : nodes) node_names.push_back(n.name);

    // Every exogenous source is drawn, needed or not, so that adding
    // an unused input never changes the draws of the others.
    for (const auto& [name, dist] : exo.inputs) plan.exogenous.push_back(name);
    for (const auto& t : exo.tables) {
        if (t.columns.empty() || t.rows.rows() == 0 || static_cast<std::size_t>(t.rows.cols()) != t.columns.size()) {
            throw InvalidArgument("empirical exogenous table is empty or has mismatched columns");
        }
        for (const auto& c : t.columns) {
            if (position(plan.exogenous, c) != plan.exogenous.size()) {
                throw InvalidArgument("exogenous input '" + c + "' is provided twice");
            }
            plan.exogenous.push_back(c);
        }
    }
    for (const auto& [name, dist] : exo.inputs) {
        if (const auto* u = std::get_if<UniformDistribution>(&dist)) {
            if (!(u->lower < u->upper)) throw InvalidArgument("uniform exogenous '" + name + "' needs lower < upper");
        } else if (const auto* g = std::get_if<NormalDistribution>(&dist)) {
            if (!(g->sd >= 0.0) || !std::isfinite(g->mean)) throw InvalidArgument("normal exogenous '" + name + "' needs sd >= 0");
        }
    }

    plan.slots.resize(nodes.size());
    plan.disc_index.resize(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const auto& n = nodes[k];
        const auto& space = n.input_space();
        plan.slots[k].resize(space.size());
        for (const auto& b : n.bindings) {
            Slot& s = plan.slots[k][*space.index_of(b.input)];
            if (const auto* up = std::get_if<UpstreamRef>(&b.source)) {
                s.kind = Slot::Kind::upstream;
                s.a = position(node_names, up->node);
                s.b = position(nodes[s.a].output_names(), up->output);
            } else if (const auto* e = std::get_if<ExogenousRef>(&b.source)) {
                s.kind = Slot::Kind::exogenous;
                s.a = position(plan.exogenous, e->name);
                if (s.a == plan.exogenous.size()) {
                    throw InvalidArgument("no value or distribution for exogenous input '" + e->name + "'");
                }
            } else if (const auto* d = std::get_if<DecisionRef>(&b.source)) {
                s.kind = Slot::Kind::decision;
                const auto it = decisions.find(d->name);
                if (it == decisions.end()) throw InvalidArgument("no value for decision '" + d->name + "'");
                s.value = it->second;
            } else {
                s.kind = Slot::Kind::constant;
                s.value = std::get<ConstantValue>(b.source).value;
            }
        }
        for (const auto& o : n.output_names()) plan.disc_index[k].push_back(n.discrepancy.output_index(o));
    }
    for (const auto& col : graph.terminal()) {
        const auto [node_name, output] = split_column(col);
        const std::size_t k = position(node_names, node_name);
        plan.terminal.emplace_back(k, position(nodes[k].output_names(), output));
    }
    return plan;
}

void draw_exogenous(const ExogenousSpec& exo, std::size_t sample, Rng& rng, std::vector<double>& out) {
    std::size_t j = 0;
    for (const auto& [name, dist] : exo.inputs) {
        if (const auto* f = std::get_if<FixedValue>(&dist)) {
            out[j++] = f->value;
        } else if (const auto* u = std::get_if<UniformDistribution>(&dist)) {
            out[j++] = rng.uniform(u->lower, u->upper);
        } else {
            const auto& g = std::get<NormalDistribution>(dist);
            out[j++] = rng.normal(g.mean, g.sd);
        }
    }
    for (const auto& t : exo.tables) {
        const auto rows = static_cast<std::uint64_t>(t.rows.rows());
        const auto r = static_cast<Eigen::Index>(t.sequential ? sample % rows : rng.index(rows));
        for (Eigen::Index c = 0; c < t.rows.cols(); ++c) out[j++] = t.rows(r, c);
    }
}

}  // namespace

PropagationResult propagate(const ModelGraph& graph, const ExogenousSpec& exogenous,
                            const DecisionValues& decisions, std::size_t n_samples, std::uint64_t seed,
                            const PropagateOptions& options) {
    if (n_samples == 0) throw InvalidArgument("propagate needs at least one sample");
    const Plan plan = make_plan(graph, exogenous, decisions);
    const auto& nodes = graph.nodes();

    PropagationResult result;
    result.columns = graph.terminal();
    result.seed = seed;
    result.samples.resize(static_cast<Eigen::Index>(n_samples), static_cast<Eigen::Index>(plan.terminal.size()));
    if (options.keep_trace) {
        for (const auto& n : nodes) {
            const auto m = static_cast<Eigen::Index>(n.emulators.size());
            result.trace[n.name] = NodeTrace{RowMatrix::Zero(static_cast<Eigen::Index>(n_samples), m),
                                             RowMatrix::Zero(static_cast<Eigen::Index>(n_samples), m)};
        }
    }
    std::vector<NodeTrace*> traces(nodes.size(), nullptr);
    if (options.keep_trace) {
        for (std::size_t k = 0; k < nodes.size(); ++k) traces[k] = &result.trace[nodes[k].name];
    }

    auto run_range = [&](std::size_t begin, std::size_t end) {
        std::vector<double> exo_values(plan.exogenous.size());
        std::vector<std::vector<double>> values(nodes.size());
        std::vector<double> point, scale;
        for (std::size_t i = begin; i < end; ++i) {
            Rng erng = Rng::substream(seed, "chain.exogenous", i);
            draw_exogenous(exogenous, i, erng, exo_values);
            for (std::size_t k : graph.order()) {
                const auto& n = nodes[k];
                point.resize(plan.slots[k].size());
                for (std::size_t d = 0; d < point.size(); ++d) {
                    const Slot& s = plan.slots[k][d];
                    switch (s.kind) {
                        case Slot::Kind::upstream: point[d] = values[s.a][s.b]; break;
                        case Slot::Kind::exogenous: point[d] = exo_values[s.a]; break;
                        default: point[d] = s.value; break;
                    }
                }
                Rng mrng = Rng::substream(seed, "chain.emulator", i, k);
                auto& out = values[k];
                out.resize(n.emulators.size());
                scale.assign(n.discrepancy.output_count(), 0.0);
                for (std::size_t j = 0; j < n.emulators.size(); ++j) {
                    const Prediction p = n.emulators[j]->predict(point);
                    const double z = mrng.normal();
                    out[j] = p.variance == 0.0 ? p.mean : p.mean + std::sqrt(p.variance) * z;
                    if (plan.disc_index[k][j]) scale[*plan.disc_index[k][j]] = p.mean;
                    if (traces[k]) traces[k]->model(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = out[j];
                }
                if (n.discrepancy.output_count() == 0 || n.discrepancy.is_zero()) continue;
                Rng drng = Rng::substream(seed, "chain.discrepancy", i, k);
                const Eigen::VectorXd delta = sample_discrepancy(n.discrepancy, point, scale, drng);
                for (std::size_t j = 0; j < out.size(); ++j) {
                    if (!plan.disc_index[k][j]) continue;
                    const double dj = delta(static_cast<Eigen::Index>(*plan.disc_index[k][j]));
                    out[j] += dj;
                    if (traces[k]) traces[k]->discrepancy(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dj;
                }
            }
            for (std::size_t c = 0; c < plan.terminal.size(); ++c) {
                const auto [k, j] = plan.terminal[c];
                result.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = values[k][j];
            }
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, n_samples));
    if (threads == 1) {
        run_range(0, n_samples);
        return result;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> workers;
        const std::size_t chunk = (n_samples + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            const std::size_t begin = t * chunk, end = std::min(n_samples, begin + chunk);
            if (begin >= end) break;
            workers.emplace_back([&, begin, end] {
                try {
                    run_range(begin, end);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
    return result;
}

CombinedEmulators emulate_combined(const ModelGraph& graph, const ExogenousSpec& exogenous,
                                   const DesignSet& decision_grid, std::size_t n_inner, std::uint64_t seed,
                                   const std::string& terminal_column, const FitOptions& fit_options) {
    if (n_inner < 30) throw InvalidArgument("combined emulation needs at least 30 inner samples");
    if (decision_grid.runs() < 2) throw InvalidArgument("combined emulation needs at least two grid decisions");
    const auto& space = decision_grid.space();
    const auto needed = graph.decision_names();
    for (const auto& name : needed) {
        if (!space.index_of(name)) throw InvalidArgument("decision grid lacks decision '" + name + "'");
    }
    std::size_t column = 0;
    if (!terminal_column.empty()) {
        column = position(graph.terminal(), terminal_column);
        if (column == graph.terminal().size()) throw InvalidArgument("unknown terminal column '" + terminal_column + "'");
    } else if (graph.terminal().size() != 1) {
        throw InvalidArgument("graph has several terminal columns; name the one to emulate");
    }

    const auto n = static_cast<Eigen::Index>(decision_grid.runs());
    RowMatrix responses(n, 2);
    for (Eigen::Index g = 0; g < n; ++g) {
        const auto x = decision_grid.point(static_cast<std::size_t>(g));
        if (!space.contains(x)) throw InvalidArgument("decision grid point outside the decision space");
        DecisionValues d;
        for (std::size_t i = 0; i < space.size(); ++i) d[space.dim(i).name] = x[i];
        const auto r = propagate(graph, exogenous, d, n_inner, substream_seed(seed, "chain.combined", static_cast<std::uint64_t>(g)));
        const Eigen::VectorXd col = r.samples.col(static_cast<Eigen::Index>(column));
        const std::span<const double> s{col.data(), static_cast<std::size_t>(col.size())};
        responses(g, 0) = mean(s);
        responses(g, 1) = std::log(std::max(sample_variance(s), variance_floor));
    }
    const DesignSet data = decision_grid.with_responses({"mean", "log_variance"}, responses);
    FitOptions opts = fit_options;
    opts.transform = OutputTransform::none;
    return CombinedEmulators{fit(data, "mean", opts), fit(data, "log_variance", opts)};
}

}  // namespace emuchain
