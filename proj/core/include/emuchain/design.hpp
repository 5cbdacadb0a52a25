#pragma once

#include "emuchain/input_space.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace emuchain {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A set of simulator runs: one input point per row, with an optional block of
// responses (empty until run_design fills it).
class DesignSet {
public:
    DesignSet() = default;
    DesignSet(InputSpace space, RowMatrix points);
    DesignSet(InputSpace space, RowMatrix points, std::vector<std::string> output_names,
              RowMatrix responses);

    const InputSpace& space() const noexcept { return space_; }
    const RowMatrix& points() const noexcept { return points_; }
    const RowMatrix& responses() const noexcept { return responses_; }
    const std::vector<std::string>& output_names() const noexcept { return output_names_; }

    std::size_t runs() const noexcept { return static_cast<std::size_t>(points_.rows()); }
    bool has_responses() const noexcept { return responses_.rows() > 0; }

    std::span<const double> point(std::size_t i) const {
        return {points_.data() + i * points_.cols(), static_cast<std::size_t>(points_.cols())};
    }

    // Response column for one output, throws if absent.
    Eigen::VectorXd response(const std::string& output) const;
    std::size_t output_index(const std::string& output) const;

    DesignSet with_responses(std::vector<std::string> output_names, RowMatrix responses) const;
    DesignSet without_row(std::size_t i) const;
    DesignSet rows(const std::vector<std::size_t>& keep) const;

private:
    void check() const;

    InputSpace space_;
    RowMatrix points_;
    std::vector<std::string> output_names_;
    RowMatrix responses_;
};

struct LatinHypercubeOptions {
    // Number of independent jittered LHS candidates; the one with the largest
    // minimum pairwise distance (in unit coordinates) is kept.
    std::size_t maximin_candidates = 16;
};

// Jittered Latin hypercube: in every dimension the n coordinates fall into n
// distinct equal-width strata. Fixed seed gives a bit-identical design.
DesignSet latin_hypercube(const InputSpace& space, std::size_t n, std::uint64_t seed,
                          const LatinHypercubeOptions& options = {});

// Common default run count for a space: 10 runs per input dimension.
inline std::size_t default_run_count(const InputSpace& space) { return 10 * space.size(); }

}  // namespace emuchain
