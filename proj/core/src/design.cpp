#include "emuchain/design.hpp"

#include "emuchain/error.hpp"
#include "emuchain/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace emuchain {

DesignSet::DesignSet(InputSpace space, RowMatrix points)
    : space_(std::move(space)), points_(std::move(points)) {
    check();
}

DesignSet::DesignSet(InputSpace space, RowMatrix points, std::vector<std::string> output_names,
                     RowMatrix responses)
    : space_(std::move(space)),
      points_(std::move(points)),
      output_names_(std::move(output_names)),
      responses_(std::move(responses)) {
    check();
}

void DesignSet::check() const {
    if (points_.rows() > 0 && static_cast<std::size_t>(points_.cols()) != space_.size()) {
        throw InvalidArgument("design has " + std::to_string(points_.cols()) +
                              " columns, input space has " + std::to_string(space_.size()));
    }
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
        if (!space_.contains(point(static_cast<std::size_t>(i)))) {
            throw InvalidArgument("design row " + std::to_string(i) + " lies outside the input bounds");
        }
    }
    std::vector<std::size_t> idx(runs());
    std::iota(idx.begin(), idx.end(), 0);
    auto row_less = [&](std::size_t a, std::size_t b) {
        auto pa = point(a), pb = point(b);
        return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
    };
    std::sort(idx.begin(), idx.end(), row_less);
    for (std::size_t k = 1; k < idx.size(); ++k) {
        auto pa = point(idx[k - 1]), pb = point(idx[k]);
        if (std::equal(pa.begin(), pa.end(), pb.begin())) {
            throw InvalidArgument("design rows " + std::to_string(std::min(idx[k - 1], idx[k])) + " and " +
                                  std::to_string(std::max(idx[k - 1], idx[k])) + " coincide");
        }
    }
    if (responses_.rows() > 0 || !output_names_.empty()) {
        if (responses_.rows() != points_.rows()) {
            throw InvalidArgument("design has " + std::to_string(points_.rows()) + " runs but " +
                                  std::to_string(responses_.rows()) + " response rows");
        }
        if (static_cast<std::size_t>(responses_.cols()) != output_names_.size()) {
            throw InvalidArgument("response column count does not match output names");
        }
    }
}

std::size_t DesignSet::output_index(const std::string& output) const {
    for (std::size_t i = 0; i < output_names_.size(); ++i) {
        if (output_names_[i] == output) return i;
    }
    throw InvalidArgument("design has no output named '" + output + "'");
}

Eigen::VectorXd DesignSet::response(const std::string& output) const {
    return responses_.col(static_cast<Eigen::Index>(output_index(output)));
}

DesignSet DesignSet::with_responses(std::vector<std::string> output_names, RowMatrix responses) const {
    return DesignSet(space_, points_, std::move(output_names), std::move(responses));
}

DesignSet DesignSet::rows(const std::vector<std::size_t>& keep) const {
    RowMatrix p(keep.size(), points_.cols());
    RowMatrix r(has_responses() ? keep.size() : 0, responses_.cols());
    for (std::size_t k = 0; k < keep.size(); ++k) {
        p.row(k) = points_.row(keep[k]);
        if (has_responses()) r.row(k) = responses_.row(keep[k]);
    }
    if (!has_responses()) return DesignSet(space_, std::move(p));
    return DesignSet(space_, std::move(p), output_names_, std::move(r));
}

DesignSet DesignSet::without_row(std::size_t i) const {
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < runs(); ++k) {
        if (k != i) keep.push_back(k);
    }
    return rows(keep);
}

namespace {

// Coordinate inside stratum k of n on [lower, upper), nudged so that the
// stratum index recomputed from the value is exactly k.
double stratum_point(double lower, double upper, std::size_t k, std::size_t n, double u) {
    const double width = upper - lower;
    double x = lower + width * ((static_cast<double>(k) + u) / static_cast<double>(n));
    auto index_of = [&](double v) {
        return static_cast<long long>(std::floor((v - lower) / width * static_cast<double>(n)));
    };
    for (int guard = 0; guard < 64 && index_of(x) > static_cast<long long>(k); ++guard) {
        x = std::nextafter(x, lower);
    }
    for (int guard = 0; guard < 64 && index_of(x) < static_cast<long long>(k); ++guard) {
        x = std::nextafter(x, upper);
    }
    if (x >= upper) x = std::nextafter(upper, lower);
    return x;
}

double min_pairwise_distance(const RowMatrix& unit) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < unit.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < unit.rows(); ++j) {
            best = std::min(best, (unit.row(i) - unit.row(j)).squaredNorm());
        }
    }
    return best;
}

}  // namespace

DesignSet latin_hypercube(const InputSpace& space, std::size_t n, std::uint64_t seed,
                          const LatinHypercubeOptions& options) {
    if (n == 0) throw InvalidArgument("latin_hypercube: n must be at least 1");
    if (space.size() == 0) throw InvalidArgument("latin_hypercube: empty input space");
    const std::size_t d = space.size();
    const std::size_t candidates = std::max<std::size_t>(1, options.maximin_candidates);

    RowMatrix best;
    double best_score = -1.0;
    for (std::size_t c = 0; c < candidates; ++c) {
        Rng rng = Rng::substream(seed, "design.lhs", c);
        RowMatrix pts(n, d);
        RowMatrix unit(n, d);
        std::vector<std::size_t> perm(n);
        for (std::size_t j = 0; j < d; ++j) {
            std::iota(perm.begin(), perm.end(), 0);
            for (std::size_t i = n; i > 1; --i) {
                std::swap(perm[i - 1], perm[rng.index(i)]);
            }
            const auto& dim = space.dim(j);
            for (std::size_t i = 0; i < n; ++i) {
                const double u = rng.uniform();
                pts(i, j) = stratum_point(dim.lower, dim.upper, perm[i], n, u);
                unit(i, j) = (pts(i, j) - dim.lower) / (dim.upper - dim.lower);
            }
        }
        const double score = min_pairwise_distance(unit);
        if (score > best_score) {
            best_score = score;
            best = std::move(pts);
        }
    }
    return DesignSet(space, std::move(best));
}

}  // namespace emuchain
