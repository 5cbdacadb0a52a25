#include "emuchain/discrepancy.hpp"

#include "emuchain/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

namespace emuchain {

void PerturbationPlan::validate() const {
    if (replicates < 2) throw InvalidArgument("perturbation plan needs at least 2 replicates");
    for (const auto& t : targets) {
        if (!(std::isfinite(t.scale) && t.scale >= 0.0)) {
            throw InvalidArgument("perturbation target '" + t.name + "' needs a non-negative scale");
        }
        if (t.length == 0) throw InvalidArgument("perturbation target '" + t.name + "' has zero length");
    }
}

std::size_t PerturbationPlan::extra_inputs() const {
    std::size_t n = 0;
    for (const auto& t : targets) n += t.length;
    return n;
}

DiscrepancySpec::DiscrepancySpec(std::vector<std::string> outputs, InternalDiscrepancy internal,
                                 ExternalDiscrepancy external)
    : outputs_(std::move(outputs)), internal_(std::move(internal)), external_(std::move(external)) {
    const std::size_t k = outputs_.size();
    if (internal_.variance.empty()) internal_.variance.assign(k, 0.0);
    if (internal_.correlation.size() == 0) internal_.correlation = Eigen::MatrixXd::Identity(k, k);
    if (external_.scale.empty()) external_.scale.assign(k, 0.0);
    check();
}

DiscrepancySpec DiscrepancySpec::zero(std::vector<std::string> outputs) {
    ExternalDiscrepancy ext;
    ext.mode = ExternalMode::absolute;
    return DiscrepancySpec(std::move(outputs), {}, ext);
}

DiscrepancySpec DiscrepancySpec::external_only(std::vector<std::string> outputs, ExternalMode mode,
                                               std::vector<double> scale) {
    ExternalDiscrepancy ext;
    ext.mode = mode;
    ext.scale = std::move(scale);
    return DiscrepancySpec(std::move(outputs), {}, ext);
}

void DiscrepancySpec::check() const {
    const std::size_t k = outputs_.size();
    if (k == 0) throw InvalidArgument("discrepancy needs at least one output");
    if (std::set<std::string>(outputs_.begin(), outputs_.end()).size() != k) {
        throw InvalidArgument("duplicate discrepancy output names");
    }
    if (internal_.variance.size() != k) throw InvalidArgument("internal variance count does not match outputs");
    for (double v : internal_.variance) {
        if (!(std::isfinite(v) && v >= 0.0)) throw InvalidArgument("internal variances must be >= 0");
    }
    const auto& r = internal_.correlation;
    if (static_cast<std::size_t>(r.rows()) != k || static_cast<std::size_t>(r.cols()) != k) {
        throw InvalidArgument("correlation matrix must be " + std::to_string(k) + "x" + std::to_string(k));
    }
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        if (std::abs(r(i, i) - 1.0) > 1e-12) throw InvalidArgument("correlation matrix needs a unit diagonal");
        for (Eigen::Index j = 0; j < i; ++j) {
            if (std::abs(r(i, j) - r(j, i)) > 1e-12) throw InvalidArgument("correlation matrix is not symmetric");
        }
    }
    if (k > 1) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10) {
            throw InvalidArgument("correlation matrix is not positive semi-definite");
        }
    }
    if (!internal_.variance_emulators.empty() && internal_.variance_emulators.size() != k) {
        throw InvalidArgument("need one variance emulator per output");
    }
    if (external_.scale.size() != k) throw InvalidArgument("external scale count does not match outputs");
    for (double s : external_.scale) {
        if (!(std::isfinite(s) && s >= 0.0)) throw InvalidArgument("external scales must be >= 0");
    }
    if (!(std::isfinite(external_.inflation) && external_.inflation >= 0.0)) {
        throw InvalidArgument("external inflation must be >= 0");
    }
}

std::optional<std::size_t> DiscrepancySpec::output_index(const std::string& name) const {
    for (std::size_t i = 0; i < outputs_.size(); ++i) {
        if (outputs_[i] == name) return i;
    }
    return std::nullopt;
}

DiscrepancySpec DiscrepancySpec::with_internal(InternalDiscrepancy internal) const {
    DiscrepancySpec out(outputs_, std::move(internal), external_);
    out.notes_ = notes_;
    return out;
}

DiscrepancySpec DiscrepancySpec::with_external(ExternalDiscrepancy external) const {
    DiscrepancySpec out(outputs_, internal_, std::move(external));
    out.notes_ = notes_;
    return out;
}

std::vector<double> DiscrepancySpec::internal_variance(std::span<const double> point) const {
    if (internal_.variance_emulators.empty()) return internal_.variance;
    std::vector<double> out(outputs_.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::exp(internal_.variance_emulators[i]->predict(point).mean);
    }
    return out;
}

std::vector<double> DiscrepancySpec::external_sd(std::span<const double> output_scale) const {
    std::vector<double> out(outputs_.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double s = external_.scale[i] * external_.inflation;
        if (external_.mode == ExternalMode::relative && s != 0.0) {
            if (output_scale.size() != out.size()) {
                throw InvalidArgument("relative external discrepancy needs one output scale per output");
            }
            s *= std::abs(output_scale[i]);
        }
        out[i] = s;
    }
    return out;
}

Eigen::MatrixXd DiscrepancySpec::covariance(std::span<const double> point, std::span<const double> output_scale) const {
    const auto k = static_cast<Eigen::Index>(outputs_.size());
    const auto var = internal_variance(point);
    const auto ext = external_sd(output_scale);
    Eigen::MatrixXd c(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            c(i, j) = internal_.correlation(i, j) * std::sqrt(var[i] * var[j]);
        }
        c(i, i) = var[i] + ext[i] * ext[i];
    }
    return c;
}

double DiscrepancySpec::total_variance(std::size_t output, std::span<const double> point,
                                       std::span<const double> output_scale) const {
    const auto var = internal_variance(point);
    const auto ext = external_sd(output_scale);
    return var.at(output) + ext.at(output) * ext.at(output);
}

bool DiscrepancySpec::is_zero() const {
    if (!internal_.variance_emulators.empty()) return false;
    for (double v : internal_.variance) {
        if (v != 0.0) return false;
    }
    if (external_.inflation == 0.0) return true;
    for (double s : external_.scale) {
        if (s != 0.0) return false;
    }
    return true;
}

Eigen::VectorXd sample_discrepancy(const DiscrepancySpec& spec, std::span<const double> point,
                                   std::span<const double> output_scale, Rng& rng) {
    const auto k = static_cast<Eigen::Index>(spec.output_count());
    if (!output_scale.empty() && static_cast<Eigen::Index>(output_scale.size()) != k) {
        throw InvalidArgument("output scale has " + std::to_string(output_scale.size()) + " entries, discrepancy has " +
                              std::to_string(k) + " outputs");
    }
    if (spec.is_zero()) return Eigen::VectorXd::Zero(k);
    const Eigen::MatrixXd cov = spec.covariance(point, output_scale);

    const bool diagonal = (cov - Eigen::MatrixXd(cov.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
    Eigen::VectorXd out(k);
    if (diagonal) {
        for (Eigen::Index i = 0; i < k; ++i) out(i) = std::sqrt(cov(i, i)) * rng.normal();
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    Eigen::VectorXd lambda = es.eigenvalues();
    const double scale = std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
    if (lambda.minCoeff() < -1e-10 * scale) {
        throw InvalidArgument("assembled discrepancy covariance is not positive semi-definite");
    }
    Eigen::VectorXd z(k);
    for (Eigen::Index i = 0; i < k; ++i) z(i) = std::sqrt(std::max(0.0, lambda(i))) * rng.normal();
    return es.eigenvectors() * z;
}

DiscrepancySpec assess_internal(const SimulatorHandle& handle, const DesignSet& base_points,
                                const PerturbationPlan& plan, std::uint64_t seed, const RunOptions& options) {
    plan.validate();
    const std::size_t base_dims = base_points.space().size();
    if (handle.input_count() != base_dims + plan.extra_inputs()) {
        throw InvalidArgument("simulator takes " + std::to_string(handle.input_count()) + " inputs but the plan supplies " +
                              std::to_string(base_dims) + " base + " + std::to_string(plan.extra_inputs()) +
                              " perturbation inputs");
    }
    const std::size_t n = base_points.runs();
    if (n == 0) throw InvalidArgument("internal discrepancy assessment needs base points");
    const std::size_t k = handle.output_names().size();
    const std::size_t reps = plan.replicates;

    // One flat design over (base point, replicate) so run order is fixed.
    const std::size_t width = base_dims + plan.extra_inputs();
    std::vector<std::vector<double>> inputs(n * reps, std::vector<double>(width));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < reps; ++r) {
            Rng rng = Rng::substream(seed, "discrepancy.perturb", i, r);
            auto& x = inputs[i * reps + r];
            auto p = base_points.point(i);
            std::copy(p.begin(), p.end(), x.begin());
            std::size_t c = base_dims;
            for (const auto& t : plan.targets) {
                for (std::size_t s = 0; s < t.length; ++s) {
                    const double delta = t.distribution == PerturbationDistribution::normal
                                             ? t.scale * rng.normal()
                                             : t.scale * (2.0 * rng.uniform() - 1.0);
                    x[c++] = t.nominal + delta;
                }
            }
        }
    }

    std::vector<std::vector<double>> outputs(inputs.size());
    std::vector<char> ok(inputs.size(), 0);
    const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, inputs.size());
    std::atomic<std::size_t> next{0};
    auto work = [&](SimulatorHandle h) {
        for (std::size_t j = next++; j < inputs.size(); j = next++) {
            try {
                outputs[j] = h.evaluate(inputs[j]);
                ok[j] = 1;
            } catch (const SimulatorError&) {
            }
        }
    };
    if (threads == 1) {
        work(handle);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t == 0 ? handle : handle.clone());
    }

    RowMatrix variances(n, k);
    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(k, k);
    double dof = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<const std::vector<double>*> good;
        for (std::size_t r = 0; r < reps; ++r) {
            if (ok[i * reps + r]) good.push_back(&outputs[i * reps + r]);
        }
        if (good.size() < 2) {
            throw SimulatorError("base point " + std::to_string(i) + " has only " + std::to_string(good.size()) +
                                 " successful replicates (need 2)");
        }
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
        for (auto* g : good) mean += Eigen::Map<const Eigen::VectorXd>(g->data(), k);
        mean /= static_cast<double>(good.size());
        Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(k, k);
        for (auto* g : good) {
            Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(g->data(), k) - mean;
            ss += c * c.transpose();
        }
        const double m = static_cast<double>(good.size() - 1);
        for (std::size_t j = 0; j < k; ++j) variances(i, j) = ss(j, j) / m;
        pooled += ss;
        dof += m;
    }
    pooled /= dof;

    InternalDiscrepancy internal;
    internal.variance.resize(k);
    internal.correlation = Eigen::MatrixXd::Identity(k, k);
    for (std::size_t a = 0; a < k; ++a) {
        internal.variance[a] = pooled(a, a);
        for (std::size_t b = 0; b < a; ++b) {
            const double denom = std::sqrt(pooled(a, a) * pooled(b, b));
            const double rho = denom > 0.0 ? std::clamp(pooled(a, b) / denom, -1.0, 1.0) : 0.0;
            internal.correlation(a, b) = internal.correlation(b, a) = rho;
        }
    }
    internal.assessed = AssessedVariances{base_points.space(), base_points.points(), std::move(variances)};

    ExternalDiscrepancy external;
    external.mode = ExternalMode::absolute;
    DiscrepancySpec spec(handle.output_names(), std::move(internal), external);
    const bool forcing = std::any_of(plan.targets.begin(), plan.targets.end(),
                                     [](const auto& t) { return t.kind == PerturbationKind::forcing; });
    if (forcing) {
        spec.add_note("forcing-series perturbations are drawn independently across time steps; "
                      "temporal correlation is not represented");
    }
    if (!handle.deterministic()) {
        spec.add_note("simulator is non-deterministic; replicate variance includes its intrinsic noise");
    }
    return spec;
}

DiscrepancySpec emulate_internal(const DiscrepancySpec& spec, TrendBasis trend) {
    const auto& assessed = spec.internal().assessed;
    if (!assessed) throw InvalidArgument("emulate_internal needs point-attached variances from assess_internal");
    const std::size_t n = static_cast<std::size_t>(assessed->points.rows());
    const std::size_t q = basis_size(trend, assessed->space.size());
    if (n < q) {
        throw FitError("variance emulation needs at least " + std::to_string(q) + " base points, have " +
                       std::to_string(n));
    }
    InternalDiscrepancy internal = spec.internal();
    internal.variance_emulators.clear();
    FitOptions options;
    options.trend = trend;
    for (std::size_t j = 0; j < spec.output_count(); ++j) {
        RowMatrix y(n, 1);
        for (std::size_t i = 0; i < n; ++i) y(i, 0) = std::log(std::max(assessed->variances(i, j), variance_floor));
        DesignSet d(assessed->space, assessed->points, {"log_variance." + spec.outputs()[j]}, std::move(y));
        internal.variance_emulators.push_back(
            std::make_shared<const Emulator>(fit(d, "log_variance." + spec.outputs()[j], options)));
    }
    return spec.with_internal(std::move(internal));
}

}  // namespace emuchain
