#pragma once

#include "emuchain/design.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace emuchain {

using SimulatorFunction = std::function<std::vector<double>(std::span<const double>)>;

enum class SimulatorKind { in_process, external };

namespace detail {
class SimulatorImpl;
}

// Handle to a black-box simulator. In-process handles wrap a callable;
// external handles talk to a child process over the line protocol:
// one request line of space-separated inputs, one reply line of outputs.
//
// Copies share the underlying child process. Evaluation through one handle
// is serialised; run_design gives each worker its own clone.
class SimulatorHandle {
public:
    static SimulatorHandle in_process(SimulatorFunction fn, std::size_t input_count,
                                      std::vector<std::string> output_names,
                                      bool deterministic = true);

    static SimulatorHandle external(std::string command, std::size_t input_count,
                                    std::vector<std::string> output_names,
                                    std::chrono::milliseconds timeout = std::chrono::seconds(60),
                                    bool deterministic = true);

    SimulatorKind kind() const noexcept;
    const std::string& command() const noexcept;
    const std::vector<std::string>& output_names() const noexcept;
    std::size_t input_count() const noexcept;
    bool deterministic() const noexcept;

    // Independent handle for a parallel worker. External handles get their
    // own child process.
    SimulatorHandle clone() const;

    std::vector<double> evaluate(std::span<const double> point) const;

private:
    explicit SimulatorHandle(std::shared_ptr<detail::SimulatorImpl> impl);
    std::shared_ptr<detail::SimulatorImpl> impl_;
};

inline std::vector<double> evaluate(const SimulatorHandle& handle, std::span<const double> point) {
    return handle.evaluate(point);
}

struct RunOptions {
    std::size_t threads = 1;
};

// Evaluates every design row; row order is preserved whatever the thread count.
DesignSet run_design(const SimulatorHandle& handle, const DesignSet& design,
                     const RunOptions& options = {});

// Thread cap taken from EMUCHAIN_THREADS, else hardware concurrency.
std::size_t default_thread_count();

}  // namespace emuchain
