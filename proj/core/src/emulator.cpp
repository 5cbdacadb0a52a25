#include "emuchain/emulator.hpp"

#include "emuchain/error.hpp"
#include "emuchain/format.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace emuchain {
namespace {

class NotPositiveDefinite : public FitError {
public:
    using FitError::FitError;
};

std::string conditioning_note(const Eigen::MatrixXd& k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    return "min eigenvalue " + format_double(lo) + ", max eigenvalue " + format_double(hi) +
           ", condition estimate " + format_double(lo > 0 ? hi / lo : std::numeric_limits<double>::infinity());
}

Eigen::VectorXd transformed(const Eigen::VectorXd& y, OutputTransform t) {
    if (t == OutputTransform::none) return y;
    if ((y.array() <= 0.0).any()) throw FitError("log transform needs strictly positive responses");
    return y.array().log().matrix();
}

}  // namespace

std::size_t basis_size(TrendBasis basis, std::size_t dims) {
    switch (basis) {
        case TrendBasis::constant: return 1;
        case TrendBasis::linear: return 1 + dims;
        case TrendBasis::quadratic: return 1 + dims + dims * (dims + 1) / 2;
    }
    return 1;
}

Eigen::VectorXd basis_row(TrendBasis basis, std::span<const double> z) {
    const std::size_t d = z.size();
    Eigen::VectorXd h(basis_size(basis, d));
    Eigen::Index k = 0;
    h(k++) = 1.0;
    if (basis == TrendBasis::constant) return h;
    for (std::size_t i = 0; i < d; ++i) h(k++) = z[i];
    if (basis == TrendBasis::linear) return h;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) h(k++) = z[i] * z[j];
    }
    return h;
}

void ResidualProcessSpec::validate(std::size_t dims) const {
    if (!(std::isfinite(variance) && variance >= 0.0)) throw InvalidArgument("residual variance must be >= 0");
    if (!(std::isfinite(nugget) && nugget >= 0.0)) throw InvalidArgument("nugget must be >= 0");
    if (correlation_lengths.size() != dims) {
        throw InvalidArgument("expected " + std::to_string(dims) + " correlation lengths, got " +
                              std::to_string(correlation_lengths.size()));
    }
    for (double l : correlation_lengths) {
        if (!(std::isfinite(l) && l > 0.0)) throw InvalidArgument("correlation lengths must be > 0");
    }
}

Emulator::Emulator(InputSpace space, RowMatrix points, Eigen::VectorXd responses, std::string output,
                   TrendBasis trend, ResidualProcessSpec residual, OutputTransform transform,
                   std::optional<MultilevelLink> link)
    : space_(std::move(space)),
      points_(std::move(points)),
      responses_(std::move(responses)),
      output_(std::move(output)),
      trend_(trend),
      residual_(std::move(residual)),
      transform_(transform),
      link_(std::move(link)) {
    const auto n = points_.rows();
    if (n == 0) throw FitError("emulator needs at least one run");
    if (static_cast<std::size_t>(points_.cols()) != space_.size()) throw FitError("design/space dimension mismatch");
    if (responses_.size() != n) throw FitError("response count does not match run count");
    residual_.validate(space_.size());
    if (link_) {
        if (!link_->coarse) throw FitError("multi-level link without a coarse emulator");
        if (link_->coarse->space().names() != space_.names()) {
            throw FitError("coarse and fine emulators must share the input space");
        }
    }

    unit_points_.resize(n, points_.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        auto u = space_.to_unit({points_.data() + i * points_.cols(), static_cast<std::size_t>(points_.cols())});
        for (Eigen::Index j = 0; j < points_.cols(); ++j) unit_points_(i, j) = u[static_cast<std::size_t>(j)];
    }

    Eigen::VectorXd y = transformed(responses_, transform_);
    Eigen::Index q = 0;
    Eigen::MatrixXd h;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::span<const double> p{points_.data() + i * points_.cols(), static_cast<std::size_t>(points_.cols())};
        std::span<const double> u{unit_points_.data() + i * unit_points_.cols(),
                                  static_cast<std::size_t>(unit_points_.cols())};
        Eigen::VectorXd row = regressors(p, u);
        if (i == 0) {
            q = row.size();
            h.resize(n, q);
        }
        h.row(i) = row.transpose();
        y(i) -= offset(p);
    }
    if (n < q) {
        throw FitError("rank-deficient basis matrix: " + std::to_string(n) + " runs for " + std::to_string(q) +
                       " trend terms");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(h);
    if (qr.rank() < q) {
        throw FitError("rank-deficient basis matrix: rank " + std::to_string(qr.rank()) + " of " +
                       std::to_string(q) + " trend terms");
    }

    if (residual_.variance == 0.0 && residual_.nugget == 0.0) {
        regression_only_ = true;
        beta_ = qr.solve(y);
        weights_ = Eigen::VectorXd::Zero(n);
        const double rss = (y - h * beta_).squaredNorm();
        quad_form_ = rss;
        log_likelihood_ = rss <= 1e-20 * std::max(1.0, y.squaredNorm()) ? std::numeric_limits<double>::infinity()
                                                                        : -std::numeric_limits<double>::infinity();
        return;
    }

    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::span<const double> ui{unit_points_.data() + i * unit_points_.cols(),
                                   static_cast<std::size_t>(unit_points_.cols())};
        for (Eigen::Index j = 0; j <= i; ++j) {
            std::span<const double> uj{unit_points_.data() + j * unit_points_.cols(),
                                       static_cast<std::size_t>(unit_points_.cols())};
            k(i, j) = k(j, i) = kernel(ui, uj);
        }
        k(i, i) += residual_.nugget;
    }
    chol_.compute(k);
    bool ok = chol_.info() == Eigen::Success;
    if (ok) {
        const auto diag = chol_.matrixLLT().diagonal();
        ok = diag.allFinite() && (diag.array() > 0.0).all() &&
             diag.minCoeff() > 1e-10 * std::sqrt(std::max(residual_.variance, residual_.nugget));
    }
    if (!ok) throw NotPositiveDefinite("kernel matrix not positive definite after nugget: " + conditioning_note(k));

    const auto lower = chol_.matrixL();
    whitened_basis_ = lower.solve(h);
    gls_chol_.compute(whitened_basis_.transpose() * whitened_basis_);
    if (gls_chol_.info() != Eigen::Success) throw FitError("generalized least squares system is singular");
    const Eigen::VectorXd wy = lower.solve(y);
    beta_ = gls_chol_.solve(whitened_basis_.transpose() * wy);
    const Eigen::VectorXd wr = wy - whitened_basis_ * beta_;
    weights_ = chol_.matrixU().solve(wr);
    quad_form_ = wr.squaredNorm();
    log_det_ = 2.0 * chol_.matrixLLT().diagonal().array().log().sum();
    log_likelihood_ = -0.5 * (quad_form_ + log_det_ + static_cast<double>(n) * std::log(2.0 * std::numbers::pi));
}

double Emulator::kernel(std::span<const double> a, std::span<const double> b) const {
    double r2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = (a[i] - b[i]) / residual_.correlation_lengths[i];
        r2 += t * t;
    }
    return residual_.variance * std::exp(-0.5 * r2);
}

Eigen::VectorXd Emulator::regressors(std::span<const double> point, std::span<const double> unit) const {
    Eigen::VectorXd h = basis_row(trend_, unit);
    if (link_ && !link_->fixed_rho) {
        Eigen::VectorXd full(h.size() + 1);
        full(0) = link_->coarse->predict(point).mean;
        full.tail(h.size()) = h;
        return full;
    }
    return h;
}

double Emulator::offset(std::span<const double> point) const {
    if (link_ && link_->fixed_rho) return *link_->fixed_rho * link_->coarse->predict(point).mean;
    return 0.0;
}

double Emulator::rho() const {
    if (!link_) return 0.0;
    if (link_->fixed_rho) return *link_->fixed_rho;
    return beta_(0);
}

double Emulator::trend_value(std::span<const double> point) const {
    auto unit = space_.to_unit(point);
    return offset(point) + regressors(point, unit).dot(beta_);
}

Prediction Emulator::predict(std::span<const double> point) const {
    if (point.size() != space_.size()) {
        throw InvalidArgument("emulator '" + output_ + "' expects " + std::to_string(space_.size()) +
                              " inputs, got " + std::to_string(point.size()));
    }
    const auto unit = space_.to_unit(point);
    const Eigen::VectorXd h = regressors(point, unit);
    Prediction p;
    p.extrapolated = !space_.contains(point);
    p.mean = offset(point) + h.dot(beta_);
    if (regression_only_) return p;

    const auto n = unit_points_.rows();
    Eigen::VectorXd kx(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        kx(i) = kernel(unit, {unit_points_.data() + i * unit_points_.cols(), static_cast<std::size_t>(unit_points_.cols())});
    }
    p.mean += kx.dot(weights_);
    const Eigen::VectorXd v = chol_.matrixL().solve(kx);
    const Eigen::VectorXd u = h - whitened_basis_.transpose() * v;
    p.raw_variance = residual_.variance - v.squaredNorm() + u.dot(gls_chol_.solve(u));
    p.variance = std::max(0.0, p.raw_variance);
    return p;
}

double Emulator::sample(std::span<const double> point, Rng& rng) const {
    const Prediction p = predict(point);
    const double z = rng.normal();
    if (p.variance == 0.0) return p.mean;
    return p.mean + std::sqrt(p.variance) * z;
}

Emulator Emulator::without_run(std::size_t i) const {
    const auto n = points_.rows();
    if (i >= static_cast<std::size_t>(n)) throw InvalidArgument("run index out of range");
    RowMatrix pts(n - 1, points_.cols());
    Eigen::VectorXd y(n - 1);
    for (Eigen::Index r = 0, k = 0; r < n; ++r) {
        if (static_cast<std::size_t>(r) == i) continue;
        pts.row(k) = points_.row(r);
        y(k) = responses_(r);
        ++k;
    }
    return Emulator(space_, std::move(pts), std::move(y), output_, trend_, residual_, transform_, link_);
}

namespace {

struct Problem {
    const InputSpace& space;
    const RowMatrix& points;
    const Eigen::VectorXd& y;
    const std::string& output;
    const FitOptions& options;
    const std::optional<MultilevelLink>& link;

    Emulator build(const ResidualProcessSpec& spec) const {
        return Emulator(space, points, y, output, options.trend, spec, options.transform, link);
    }
};

// Builds with the given spec, raising the nugget on factorization failure.
Emulator build_with_nugget_raise(const Problem& pb, ResidualProcessSpec spec) {
    std::vector<std::string> warnings;
    const double base = 1e-8 * std::max(spec.variance, 1e-300);
    for (std::size_t attempt = 0;; ++attempt) {
        try {
            Emulator em = pb.build(spec);
            for (auto& w : warnings) em.add_warning(std::move(w));
            return em;
        } catch (const NotPositiveDefinite& e) {
            if (attempt >= pb.options.search.max_nugget_raises) throw;
            const double raised = std::max(spec.nugget * 10.0, base);
            warnings.push_back("nugget raised from " + format_double(spec.nugget) + " to " + format_double(raised) +
                               " after factorization failure (" + e.what() + ")");
            spec.nugget = raised;
        }
    }
}

std::vector<double> log_grid(const LikelihoodSearch& s) {
    std::vector<double> g(std::max<std::size_t>(s.grid_points, 2));
    const double a = std::log(s.min_length), b = std::log(s.max_length);
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(g.size() - 1));
    }
    return g;
}

Emulator fit_problem(const Problem& pb) {
    const std::size_t d = pb.space.size();
    if (pb.options.mode == HyperMode::fixed) {
        if (!pb.options.hyper) throw InvalidArgument("fixed hyperparameter mode needs hyperparameter values");
        return build_with_nugget_raise(pb, *pb.options.hyper);
    }

    ResidualProcessSpec seed;
    if (pb.options.hyper) {
        seed = *pb.options.hyper;
    } else {
        const Eigen::VectorXd yt = transformed(pb.y, pb.options.transform);
        const double mean = yt.mean();
        const double var = yt.size() > 1 ? (yt.array() - mean).square().sum() / static_cast<double>(yt.size() - 1) : 0.0;
        seed.variance = var > 0.0 ? var : 1.0;
        seed.correlation_lengths.assign(d, 0.5);
        seed.nugget = pb.options.search.relative_nugget * seed.variance;
    }
    seed.validate(d);

    // Data lying in the span of the trend: no residual process at all.
    {
        ResidualProcessSpec none = seed;
        none.variance = 0.0;
        none.nugget = 0.0;
        Emulator reg = pb.build(none);
        if (std::isinf(reg.log_likelihood()) && reg.log_likelihood() > 0) return reg;
    }

    Emulator seeded = build_with_nugget_raise(pb, seed);
    const double seed_loglik = seeded.log_likelihood();
    const double rel_nugget = seeded.residual().variance > 0.0 ? seeded.residual().nugget / seeded.residual().variance
                                                               : pb.options.search.relative_nugget;
    const double n = static_cast<double>(pb.points.rows());
    const double log2pi = std::log(2.0 * std::numbers::pi);

    // Profile likelihood over the lengths, with the variance at its closed
    // form optimum S / n for correlation matrix R + g I.
    struct Profiled {
        double loglik = -std::numeric_limits<double>::infinity();
        double sigma2 = 0.0;
    };
    auto profile = [&](const std::vector<double>& lengths) {
        ResidualProcessSpec unit;
        unit.variance = 1.0;
        unit.nugget = rel_nugget;
        unit.correlation_lengths = lengths;
        Profiled out;
        try {
            Emulator em = pb.build(unit);
            const double s2 = em.quadratic_form() / n;
            if (s2 > 0.0 && std::isfinite(s2)) {
                out.sigma2 = s2;
                out.loglik = -0.5 * (n * std::log(s2) + em.log_determinant() + n + n * log2pi);
            }
        } catch (const NotPositiveDefinite&) {
        }
        return out;
    };

    std::vector<double> lengths = seeded.residual().correlation_lengths;
    Profiled best = profile(lengths);
    const auto grid = log_grid(pb.options.search);
    for (std::size_t sweep = 0; sweep < pb.options.search.sweeps; ++sweep) {
        bool moved = false;
        for (std::size_t axis = 0; axis < d; ++axis) {
            std::vector<double> trial = lengths;
            for (double g : grid) {
                trial[axis] = g;
                Profiled p = profile(trial);
                if (p.loglik > best.loglik) {
                    best = p;
                    lengths = trial;
                    moved = true;
                }
            }
        }
        if (!moved) break;
    }

    if (!(best.loglik >= seed_loglik)) return seeded;
    ResidualProcessSpec fitted;
    fitted.variance = best.sigma2;
    fitted.correlation_lengths = lengths;
    fitted.nugget = rel_nugget * best.sigma2;
    Emulator em = build_with_nugget_raise(pb, fitted);
    if (!(em.log_likelihood() >= seed_loglik)) return seeded;
    for (const auto& w : seeded.warnings()) em.add_warning(w);
    return em;
}

}  // namespace

Emulator fit(const DesignSet& design, const std::string& output, const FitOptions& options) {
    if (!design.has_responses()) throw FitError("design has no responses to fit");
    const Eigen::VectorXd y = design.response(output);
    const std::optional<MultilevelLink> no_link;
    Problem pb{design.space(), design.points(), y, output, options, no_link};
    return fit_problem(pb);
}

MultilevelFit fit_multilevel(const DesignSet& coarse_design, const DesignSet& fine_design, const std::string& output,
                             const FitOptions& options, std::optional<double> fixed_rho) {
    if (coarse_design.space().names() != fine_design.space().names()) {
        throw FitError("coarse and fine designs must share the input space");
    }
    const std::size_t q = basis_size(options.trend, fine_design.space().size()) + (fixed_rho ? 0 : 1);
    if (fine_design.runs() < q) {
        throw FitError("fine design has " + std::to_string(fine_design.runs()) + " runs, correction needs at least " +
                       std::to_string(q));
    }
    auto coarse = std::make_shared<const Emulator>(fit(coarse_design, output, options));
    if (!fine_design.has_responses()) throw FitError("fine design has no responses to fit");
    const Eigen::VectorXd y = fine_design.response(output);
    const std::optional<MultilevelLink> link = MultilevelLink{coarse, fixed_rho};
    Problem pb{fine_design.space(), fine_design.points(), y, output, options, link};
    return MultilevelFit{coarse, fit_problem(pb)};
}

ValidationReport validate_loo(const Emulator& em) {
    const std::size_t n = em.runs();
    const std::size_t q = basis_size(em.trend(), em.space().size()) + (em.link() && !em.link()->fixed_rho ? 1 : 0);
    if (n < q + 2) {
        throw FitError("leave-one-out needs at least " + std::to_string(q + 2) + " runs, emulator has " +
                       std::to_string(n));
    }
    ValidationReport report;
    report.standardized_errors.resize(n);
    std::size_t finite = 0, in2 = 0, in3 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Emulator loo = em.without_run(i);
        std::span<const double> x{em.points().data() + i * em.points().cols(), static_cast<std::size_t>(em.points().cols())};
        const Prediction p = loo.predict(x);
        double y = em.responses()(static_cast<Eigen::Index>(i));
        if (em.transform() == OutputTransform::log) y = std::log(y);
        const double resid = y - p.mean;
        double z;
        if (p.raw_variance > 0.0) {
            z = resid / std::sqrt(p.raw_variance);
        } else if (std::abs(resid) <= 1e-10 * (std::abs(y) + 1.0)) {
            z = 0.0;
        } else {
            z = std::numeric_limits<double>::quiet_NaN();
            report.degenerate.push_back(i);
        }
        report.standardized_errors[i] = z;
        if (std::isfinite(z)) {
            ++finite;
            if (std::abs(z) <= 2.0) ++in2;
            if (std::abs(z) <= 3.0) ++in3;
        }
    }
    if (finite > 0) {
        report.within_2 = static_cast<double>(in2) / static_cast<double>(finite);
        report.within_3 = static_cast<double>(in3) / static_cast<double>(finite);
    }
    return report;
}

}  // namespace emuchain
