#pragma once

#include "emuchain/discrepancy.hpp"
#include "emuchain/emulator.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace emuchain {

struct Observation {
    std::string output;
    double value = 0.0;
    double measurement_variance = 0.0;
};

inline constexpr double default_implausibility_cutoff = 3.0;

// Emulators indexed by output name, sharing one input space.
using EmulatorSet = std::vector<std::shared_ptr<const Emulator>>;

const Emulator& find_emulator(const EmulatorSet& emulators, const std::string& output);

// |z - E[f(x)]| / sqrt(Var[f(x)] + discrepancy variance + measurement variance).
// Returns +inf when the combined variance is zero and the residual is not.
double implausibility(const Emulator& em, const DiscrepancySpec& disc, const Observation& obs,
                      std::span<const double> point);

// Candidates screened by maximum implausibility over the observations.
struct RetainedSpace {
    InputSpace space;
    RowMatrix points;
    std::vector<std::string> observations;
    Eigen::MatrixXd implausibility;  // candidates x observations
    double cutoff = default_implausibility_cutoff;
    std::vector<bool> retained;
    std::vector<std::string> notes;

    std::size_t retained_count() const;
    double retained_fraction() const;
    RowMatrix retained_points() const;
    double max_implausibility(std::size_t candidate) const;
};

RetainedSpace history_match(const EmulatorSet& emulators, const DiscrepancySpec& disc,
                            const std::vector<Observation>& observations,
                            const DesignSet& candidates, double cutoff = default_implausibility_cutoff);

// Each row: uniform pick from the retained points, one draw per output
// emulator, plus one discrepancy draw. Columns follow `emulators`.
RowMatrix forecast(const EmulatorSet& emulators, const DiscrepancySpec& disc,
                   const RetainedSpace& retained, std::size_t n_samples, std::uint64_t seed);

// Scalar factor s >= 1 on the external discrepancy scales such that the mean
// squared standardized residual at `best_point` does not exceed 1.
double calibrate_external_inflation(const EmulatorSet& emulators, const DiscrepancySpec& disc,
                                    const std::vector<Observation>& observations,
                                    std::span<const double> best_point);

}  // namespace emuchain
