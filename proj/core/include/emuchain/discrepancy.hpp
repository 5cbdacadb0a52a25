#pragma once

#include "emuchain/design.hpp"
#include "emuchain/emulator.hpp"
#include "emuchain/rng.hpp"
#include "emuchain/simulator.hpp"

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace emuchain {

enum class PerturbationKind { parameter, forcing, state_noise };
enum class PerturbationDistribution { uniform, normal };

// One internal-discrepancy input. The simulator receives nominal + delta,
// where delta ~ Uniform(-scale, scale) or Normal(0, scale^2). Forcing series
// occupy `length` consecutive inputs, each perturbed independently.
struct PerturbationTarget {
    std::string name;
    PerturbationKind kind = PerturbationKind::parameter;
    PerturbationDistribution distribution = PerturbationDistribution::normal;
    double scale = 0.0;
    double nominal = 0.0;
    std::size_t length = 1;
};

struct PerturbationPlan {
    std::vector<PerturbationTarget> targets;
    std::size_t replicates = 2;

    void validate() const;
    // Inputs appended after the base point when calling the simulator.
    std::size_t extra_inputs() const;
};

// Per-base-point sample variances, kept so they can be emulated over the
// input space.
struct AssessedVariances {
    InputSpace space;
    RowMatrix points;
    RowMatrix variances;  // runs x outputs
};

struct InternalDiscrepancy {
    std::vector<double> variance;  // pooled over base points, per output
    Eigen::MatrixXd correlation;   // across outputs
    std::optional<AssessedVariances> assessed;
    // One log-variance emulator per output once emulate_internal has run.
    std::vector<std::shared_ptr<const Emulator>> variance_emulators;
};

enum class ExternalMode { relative, absolute };

struct ExternalDiscrepancy {
    ExternalMode mode = ExternalMode::relative;
    std::vector<double> scale;  // per output; relative scales multiply |model output|
    double inflation = 1.0;     // calibration adjustment applied to every scale
};

inline constexpr double default_relative_external_scale = 0.10;
inline constexpr double variance_floor = 1e-12;

// Model-minus-reality error for one model's outputs: an internal part assessed
// on the simulator and an independent external part. Zero-mean Gaussian.
class DiscrepancySpec {
public:
    DiscrepancySpec() = default;
    DiscrepancySpec(std::vector<std::string> outputs, InternalDiscrepancy internal,
                    ExternalDiscrepancy external);

    static DiscrepancySpec zero(std::vector<std::string> outputs);
    static DiscrepancySpec external_only(std::vector<std::string> outputs, ExternalMode mode,
                                         std::vector<double> scale);

    const std::vector<std::string>& outputs() const noexcept { return outputs_; }
    std::size_t output_count() const noexcept { return outputs_.size(); }
    std::optional<std::size_t> output_index(const std::string& name) const;
    const InternalDiscrepancy& internal() const noexcept { return internal_; }
    const ExternalDiscrepancy& external() const noexcept { return external_; }
    const std::vector<std::string>& notes() const noexcept { return notes_; }

    DiscrepancySpec with_internal(InternalDiscrepancy internal) const;
    DiscrepancySpec with_external(ExternalDiscrepancy external) const;
    void add_note(std::string note) { notes_.push_back(std::move(note)); }

    // Internal variance per output at a model input point. Uses the variance
    // emulators when present, otherwise the pooled constants.
    std::vector<double> internal_variance(std::span<const double> point) const;

    // External standard deviations given the model output at the point.
    std::vector<double> external_sd(std::span<const double> output_scale) const;

    // internal covariance (variances with the pooled correlation) + diag(external^2).
    Eigen::MatrixXd covariance(std::span<const double> point,
                               std::span<const double> output_scale) const;

    double total_variance(std::size_t output, std::span<const double> point,
                          std::span<const double> output_scale) const;

    // True when every variance and scale is exactly zero.
    bool is_zero() const;

private:
    void check() const;

    std::vector<std::string> outputs_;
    InternalDiscrepancy internal_;
    ExternalDiscrepancy external_;
    std::vector<std::string> notes_;
};

// Zero-mean multivariate normal draw with covariance(point, output_scale).
Eigen::VectorXd sample_discrepancy(const DiscrepancySpec& spec, std::span<const double> point,
                                   std::span<const double> output_scale, Rng& rng);

// Runs plan.replicates perturbed evaluations at every base point. The
// handle's input count must be base dims + plan.extra_inputs().
DiscrepancySpec assess_internal(const SimulatorHandle& handle, const DesignSet& base_points,
                                const PerturbationPlan& plan, std::uint64_t seed,
                                const RunOptions& options = {});

// Fits a log-variance emulator per output over the assessed base points.
DiscrepancySpec emulate_internal(const DiscrepancySpec& spec,
                                 TrendBasis trend = TrendBasis::linear);

}  // namespace emuchain
