#include "emuchain/calibration.hpp"

#include "emuchain/error.hpp"
#include "emuchain/format.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace emuchain {

const Emulator& find_emulator(const EmulatorSet& emulators, const std::string& output) {
    for (const auto& em : emulators) {
        if (em && em->output() == output) return *em;
    }
    throw InvalidArgument("no emulator for output '" + output + "'");
}

namespace {

std::size_t discrepancy_index(const DiscrepancySpec& disc, const std::string& output) {
    auto idx = disc.output_index(output);
    if (!idx) throw InvalidArgument("discrepancy has no output '" + output + "'");
    return *idx;
}

struct VarianceParts {
    double residual = 0.0;
    double known = 0.0;     // emulator + internal discrepancy + measurement
    double external = 0.0;  // external discrepancy variance at inflation 1
};

VarianceParts variance_parts(const Emulator& em, const DiscrepancySpec& disc, const Observation& obs,
                             std::span<const double> point) {
    const Prediction p = em.predict(point);
    const std::size_t j = discrepancy_index(disc, obs.output);
    std::vector<double> scale(disc.output_count(), 0.0);
    scale[j] = p.mean;
    VarianceParts parts;
    parts.residual = obs.value - p.mean;
    parts.known = p.variance + disc.internal_variance(point)[j] + obs.measurement_variance;
    const auto ext = disc.external_sd(scale);
    parts.external = ext[j] * ext[j];
    return parts;
}

}  // namespace

double implausibility(const Emulator& em, const DiscrepancySpec& disc, const Observation& obs,
                      std::span<const double> point) {
    if (em.output() != obs.output) {
        throw InvalidArgument("emulator output '" + em.output() + "' does not match observation '" + obs.output + "'");
    }
    if (!(obs.measurement_variance >= 0.0)) throw InvalidArgument("measurement variance must be >= 0");
    const VarianceParts v = variance_parts(em, disc, obs, point);
    const double total = v.known + v.external;
    if (total <= 0.0) return v.residual == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(v.residual) / std::sqrt(total);
}

std::size_t RetainedSpace::retained_count() const {
    return static_cast<std::size_t>(std::count(retained.begin(), retained.end(), true));
}

double RetainedSpace::retained_fraction() const {
    return retained.empty() ? 0.0 : static_cast<double>(retained_count()) / static_cast<double>(retained.size());
}

RowMatrix RetainedSpace::retained_points() const {
    RowMatrix out(retained_count(), points.cols());
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < retained.size(); ++i) {
        if (retained[i]) out.row(k++) = points.row(static_cast<Eigen::Index>(i));
    }
    return out;
}

double RetainedSpace::max_implausibility(std::size_t candidate) const {
    return implausibility.row(static_cast<Eigen::Index>(candidate)).maxCoeff();
}

RetainedSpace history_match(const EmulatorSet& emulators, const DiscrepancySpec& disc,
                            const std::vector<Observation>& observations, const DesignSet& candidates, double cutoff) {
    if (observations.empty()) throw InvalidArgument("history matching needs at least one observation");
    if (candidates.runs() == 0) throw InvalidArgument("history matching needs candidate points");
    if (!(cutoff >= 0.0)) throw InvalidArgument("implausibility cutoff must be >= 0");
    std::vector<const Emulator*> ems;
    for (const auto& obs : observations) {
        ems.push_back(&find_emulator(emulators, obs.output));
        discrepancy_index(disc, obs.output);
    }

    RetainedSpace out;
    out.space = candidates.space();
    out.points = candidates.points();
    out.cutoff = cutoff;
    for (const auto& obs : observations) out.observations.push_back(obs.output);
    const auto n = static_cast<Eigen::Index>(candidates.runs());
    out.implausibility.resize(n, static_cast<Eigen::Index>(observations.size()));
    out.retained.assign(static_cast<std::size_t>(n), false);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto x = candidates.point(static_cast<std::size_t>(i));
        for (std::size_t k = 0; k < observations.size(); ++k) {
            out.implausibility(i, static_cast<Eigen::Index>(k)) = implausibility(*ems[k], disc, observations[k], x);
        }
        out.retained[static_cast<std::size_t>(i)] = out.implausibility.row(i).maxCoeff() <= cutoff;
    }
    if (out.retained_count() == 0) {
        out.notes.push_back("model cannot reproduce history at cutoff " + format_double(cutoff));
    }
    out.notes.push_back("discrepancy is zero-mean, so forecast bias correction amounts to variance inflation only");
    return out;
}

RowMatrix forecast(const EmulatorSet& emulators, const DiscrepancySpec& disc, const RetainedSpace& retained,
                   std::size_t n_samples, std::uint64_t seed) {
    const RowMatrix pts = retained.retained_points();
    if (pts.rows() == 0) throw InvalidArgument("forecast needs a non-empty retained set");
    if (emulators.empty()) throw InvalidArgument("forecast needs at least one emulator");
    const std::size_t m = emulators.size();
    std::vector<std::optional<std::size_t>> disc_col(m);
    for (std::size_t j = 0; j < m; ++j) disc_col[j] = disc.output_index(emulators[j]->output());

    RowMatrix out(n_samples, m);
    std::vector<double> scale(disc.output_count(), 0.0);
    for (std::size_t s = 0; s < n_samples; ++s) {
        Rng rng = Rng::substream(seed, "calibration.forecast", s);
        const auto r = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(pts.rows())));
        std::span<const double> x{pts.data() + r * pts.cols(), static_cast<std::size_t>(pts.cols())};
        for (std::size_t j = 0; j < m; ++j) {
            out(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) = emulators[j]->sample(x, rng);
        }
        if (disc.is_zero()) continue;
        std::fill(scale.begin(), scale.end(), 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            if (disc_col[j]) scale[*disc_col[j]] = emulators[j]->predict(x).mean;
        }
        Rng drng = Rng::substream(seed, "calibration.forecast.discrepancy", s);
        const Eigen::VectorXd delta = sample_discrepancy(disc, x, scale, drng);
        for (std::size_t j = 0; j < m; ++j) {
            if (disc_col[j]) out(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) += delta(*disc_col[j]);
        }
    }
    return out;
}

double calibrate_external_inflation(const EmulatorSet& emulators, const DiscrepancySpec& disc,
                                    const std::vector<Observation>& observations, std::span<const double> best_point) {
    if (observations.empty()) throw InvalidArgument("inflation estimate needs observations");
    std::vector<VarianceParts> parts;
    for (const auto& obs : observations) {
        parts.push_back(variance_parts(find_emulator(emulators, obs.output), disc, obs, best_point));
    }
    auto mean_sq = [&](double s) {
        double acc = 0.0;
        for (const auto& p : parts) {
            const double v = p.known + s * s * p.external;
            acc += v > 0.0 ? p.residual * p.residual / v
                           : (p.residual == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        }
        return acc / static_cast<double>(parts.size());
    };
    if (mean_sq(1.0) <= 1.0) return 1.0;
    const bool has_external = std::any_of(parts.begin(), parts.end(), [](const auto& p) { return p.external > 0.0; });
    if (!has_external) return 1.0;
    double lo = 1.0, hi = 2.0;
    while (mean_sq(hi) > 1.0 && hi < 1e6) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean_sq(mid) > 1.0 ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace emuchain
