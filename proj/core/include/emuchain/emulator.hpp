#pragma once

#include "emuchain/design.hpp"
#include "emuchain/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace emuchain {

enum class TrendBasis { constant, linear, quadratic };

std::size_t basis_size(TrendBasis basis, std::size_t dims);

// Polynomial basis evaluated at a point already mapped onto [-1, 1]^d.
// Quadratic includes all products z_i z_j with i <= j.
Eigen::VectorXd basis_row(TrendBasis basis, std::span<const double> unit_point);

// Squared-exponential residual process,
//   k(a, b) = variance * exp(-0.5 * sum_i ((a_i - b_i) / length_i)^2),
// with distances measured in standardized [-1, 1] coordinates. The nugget is
// added to the diagonal of the training covariance only.
struct ResidualProcessSpec {
    double variance = 1.0;
    std::vector<double> correlation_lengths;
    double nugget = 0.0;

    void validate(std::size_t dims) const;
};

enum class OutputTransform { none, log };

class Emulator;

// Link to a cheaper emulator for multi-level fits: the fine trend becomes
// rho * coarse_mean(x) + polynomial correction. With rho fixed the coarse
// term is an offset; otherwise rho is the first regression coefficient.
struct MultilevelLink {
    std::shared_ptr<const Emulator> coarse;
    std::optional<double> fixed_rho;
};

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;      // clamped at zero
    double raw_variance = 0.0;  // before clamping, for diagnostics
    bool extrapolated = false;  // point outside the design's input box
};

struct LikelihoodSearch {
    std::size_t sweeps = 3;
    std::size_t grid_points = 17;
    double min_length = 0.05;
    double max_length = 10.0;
    double relative_nugget = 1e-8;
    std::size_t max_nugget_raises = 8;
};

enum class HyperMode { fixed, maximize_likelihood };

struct FitOptions {
    TrendBasis trend = TrendBasis::linear;
    HyperMode mode = HyperMode::maximize_likelihood;
    // Required in fixed mode; in likelihood mode it seeds the search.
    std::optional<ResidualProcessSpec> hyper;
    LikelihoodSearch search;
    // With log the emulator models log y; predictions stay on that scale.
    OutputTransform transform = OutputTransform::none;
};

// Global polynomial trend plus a Gaussian-process residual, fitted by
// generalized least squares given the residual hyperparameters.
class Emulator {
public:
    // Assembles the solve state for fixed hyperparameters. Throws FitError if
    // the basis matrix is rank deficient or the covariance is not positive
    // definite.
    Emulator(InputSpace space, RowMatrix points, Eigen::VectorXd responses, std::string output,
             TrendBasis trend, ResidualProcessSpec residual,
             OutputTransform transform = OutputTransform::none,
             std::optional<MultilevelLink> link = std::nullopt);

    Prediction predict(std::span<const double> point) const;

    // One draw from Normal(mean, variance) of predict.
    double sample(std::span<const double> point, Rng& rng) const;

    const InputSpace& space() const noexcept { return space_; }
    const std::string& output() const noexcept { return output_; }
    TrendBasis trend() const noexcept { return trend_; }
    const ResidualProcessSpec& residual() const noexcept { return residual_; }
    OutputTransform transform() const noexcept { return transform_; }
    const std::optional<MultilevelLink>& link() const noexcept { return link_; }

    const RowMatrix& points() const noexcept { return points_; }
    const Eigen::VectorXd& responses() const noexcept { return responses_; }
    std::size_t runs() const noexcept { return static_cast<std::size_t>(points_.rows()); }

    // Regression coefficients. For a free multi-level link the first entry is rho.
    const Eigen::VectorXd& coefficients() const noexcept { return beta_; }
    // K^{-1} (y - H beta).
    const Eigen::VectorXd& residual_weights() const noexcept { return weights_; }
    double rho() const;

    double trend_value(std::span<const double> point) const;

    // Gaussian log marginal likelihood of the responses with beta at its GLS value.
    double log_likelihood() const noexcept { return log_likelihood_; }
    // (y - H beta)' K^{-1} (y - H beta) and log|K|, the two likelihood terms.
    double quadratic_form() const noexcept { return quad_form_; }
    double log_determinant() const noexcept { return log_det_; }

    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    void add_warning(std::string message) { warnings_.push_back(std::move(message)); }

    // Same hyperparameters and link, one training row removed.
    Emulator without_run(std::size_t i) const;

private:
    Eigen::VectorXd regressors(std::span<const double> point, std::span<const double> unit) const;
    double offset(std::span<const double> point) const;
    double kernel(std::span<const double> a_unit, std::span<const double> b_unit) const;

    InputSpace space_;
    RowMatrix points_;
    RowMatrix unit_points_;
    Eigen::VectorXd responses_;
    std::string output_;
    TrendBasis trend_;
    ResidualProcessSpec residual_;
    OutputTransform transform_;
    std::optional<MultilevelLink> link_;

    bool regression_only_ = false;  // variance and nugget both zero
    Eigen::LLT<Eigen::MatrixXd> chol_;
    Eigen::MatrixXd whitened_basis_;  // L^{-1} H
    Eigen::LLT<Eigen::MatrixXd> gls_chol_;  // H' K^{-1} H
    Eigen::VectorXd beta_;
    Eigen::VectorXd weights_;
    double log_likelihood_ = 0.0;
    double quad_form_ = 0.0;
    double log_det_ = 0.0;
    std::vector<std::string> warnings_;
};

// Fits one output column of a design.
Emulator fit(const DesignSet& design, const std::string& output, const FitOptions& options = {});

// Fine-level emulator whose trend is rho * coarse mean + polynomial correction,
// all fitted on the fine runs. Passing fixed_rho = 0 reduces to a plain fit.
struct MultilevelFit {
    std::shared_ptr<const Emulator> coarse;
    Emulator fine;
};
MultilevelFit fit_multilevel(const DesignSet& coarse_design, const DesignSet& fine_design,
                             const std::string& output, const FitOptions& options = {},
                             std::optional<double> fixed_rho = std::nullopt);

struct ValidationReport {
    std::vector<double> standardized_errors;  // NaN where the variance degenerated
    std::vector<std::size_t> degenerate;
    double within_2 = 0.0;
    double within_3 = 0.0;
};

// Leave-one-out validation by refitting at the same hyperparameters.
ValidationReport validate_loo(const Emulator& em);

}  // namespace emuchain
