#include "emuchain/simulator.hpp"

#include "emuchain/error.hpp"
#include "emuchain/format.hpp"

#include <atomic>
#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <fcntl.h>
#include <mutex>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

namespace emuchain {
namespace {

std::string describe(std::span<const double> point) {
    return "[" + join_doubles(std::vector<double>(point.begin(), point.end())) + "]";
}

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { std::signal(SIGPIPE, SIG_IGN); });
}

// One long-lived child speaking the line protocol on stdin/stdout.
class ChildProcess {
public:
    explicit ChildProcess(const std::string& command) {
        ignore_sigpipe_once();
        int to_child[2];
        int from_child[2];
        if (pipe2(to_child, O_CLOEXEC) != 0) throw SimulatorError("pipe: " + std::string(std::strerror(errno)));
        if (pipe2(from_child, O_CLOEXEC) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            throw SimulatorError("pipe: " + std::string(std::strerror(errno)));
        }
        pid_ = ::fork();
        if (pid_ < 0) {
            for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
            throw SimulatorError("cannot spawn '" + command + "': " + std::strerror(errno));
        }
        if (pid_ == 0) {
            ::dup2(to_child[0], STDIN_FILENO);
            ::dup2(from_child[1], STDOUT_FILENO);
            ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
            ::_exit(127);
        }
        ::close(to_child[0]);
        ::close(from_child[1]);
        in_ = to_child[1];
        out_ = from_child[0];
    }

    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    ~ChildProcess() {
        if (in_ >= 0) ::close(in_);
        if (pid_ > 0) {
            // Give the child a moment to exit on EOF before killing it.
            for (int i = 0; i < 200; ++i) {
                if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
                    pid_ = -1;
                    break;
                }
                ::usleep(10000);
            }
            if (pid_ > 0) {
                ::kill(pid_, SIGKILL);
                ::waitpid(pid_, nullptr, 0);
            }
        }
        if (out_ >= 0) ::close(out_);
    }

    // Sends one request line and returns the reply line (without newline).
    std::string request(const std::string& line, std::chrono::milliseconds timeout) {
        std::string msg = line + "\n";
        std::size_t sent = 0;
        while (sent < msg.size()) {
            ssize_t w = ::write(in_, msg.data() + sent, msg.size() - sent);
            if (w < 0) {
                if (errno == EINTR) continue;
                throw SimulatorError("simulator process closed its input" + exit_note());
            }
            sent += static_cast<std::size_t>(w);
        }
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
                std::string reply = buffer_.substr(0, nl);
                buffer_.erase(0, nl + 1);
                if (!reply.empty() && reply.back() == '\r') reply.pop_back();
                return reply;
            }
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) {
                kill_now();
                throw SimulatorError("simulator timed out after " + std::to_string(timeout.count()) + " ms");
            }
            pollfd pfd{out_, POLLIN, 0};
            int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
            if (rc < 0) {
                if (errno == EINTR) continue;
                throw SimulatorError("poll: " + std::string(std::strerror(errno)));
            }
            if (rc == 0) continue;
            char chunk[4096];
            ssize_t r = ::read(out_, chunk, sizeof chunk);
            if (r < 0) {
                if (errno == EINTR) continue;
                throw SimulatorError("read: " + std::string(std::strerror(errno)));
            }
            if (r == 0) throw SimulatorError("simulator process exited before replying" + exit_note());
            buffer_.append(chunk, static_cast<std::size_t>(r));
        }
    }

    bool alive() const noexcept { return pid_ > 0; }

private:
    void kill_now() {
        if (pid_ > 0) {
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, nullptr, 0);
            pid_ = -1;
        }
    }

    std::string exit_note() {
        if (pid_ <= 0) return {};
        int status = 0;
        pid_t r = ::waitpid(pid_, &status, 0);
        if (r != pid_) return {};
        pid_ = -1;
        if (WIFEXITED(status)) {
            int code = WEXITSTATUS(status);
            return " (exit status " + std::to_string(code) + (code == 127 ? ": command not found" : "") + ")";
        }
        if (WIFSIGNALED(status)) return " (killed by signal " + std::to_string(WTERMSIG(status)) + ")";
        return {};
    }

    pid_t pid_ = -1;
    int in_ = -1;
    int out_ = -1;
    std::string buffer_;
};

}  // namespace

namespace detail {

class SimulatorImpl {
public:
    SimulatorImpl(SimulatorKind kind, std::size_t inputs, std::vector<std::string> outputs, bool deterministic)
        : kind_(kind), inputs_(inputs), outputs_(std::move(outputs)), deterministic_(deterministic) {
        if (outputs_.empty()) throw InvalidArgument("simulator needs at least one output name");
    }
    virtual ~SimulatorImpl() = default;

    virtual std::vector<double> run(std::span<const double> point) = 0;
    virtual std::shared_ptr<SimulatorImpl> clone() const = 0;
    virtual const std::string& command() const {
        static const std::string empty;
        return empty;
    }

    std::vector<double> evaluate(std::span<const double> point) {
        if (point.size() != inputs_) {
            throw SimulatorError("point " + describe(point) + " has " + std::to_string(point.size()) +
                                 " inputs, simulator expects " + std::to_string(inputs_));
        }
        std::vector<double> out;
        try {
            out = run(point);
        } catch (const SimulatorError& e) {
            throw SimulatorError(std::string(e.what()) + " at point " + describe(point));
        } catch (const FormatError& e) {
            throw SimulatorError(std::string("malformed simulator output: ") + e.what() + " at point " +
                                 describe(point));
        }
        if (out.size() != outputs_.size()) {
            throw SimulatorError("simulator returned " + std::to_string(out.size()) + " outputs, expected " +
                                 std::to_string(outputs_.size()) + " at point " + describe(point));
        }
        return out;
    }

    SimulatorKind kind_;
    std::size_t inputs_;
    std::vector<std::string> outputs_;
    bool deterministic_;
};

namespace {

class FunctionSimulator final : public SimulatorImpl {
public:
    FunctionSimulator(SimulatorFunction fn, std::size_t inputs, std::vector<std::string> outputs, bool det)
        : SimulatorImpl(SimulatorKind::in_process, inputs, std::move(outputs), det), fn_(std::move(fn)) {}

    std::vector<double> run(std::span<const double> point) override { return fn_(point); }
    std::shared_ptr<SimulatorImpl> clone() const override {
        return std::make_shared<FunctionSimulator>(fn_, inputs_, outputs_, deterministic_);
    }

private:
    SimulatorFunction fn_;
};

class ExternalSimulator final : public SimulatorImpl {
public:
    ExternalSimulator(std::string command, std::size_t inputs, std::vector<std::string> outputs,
                      std::chrono::milliseconds timeout, bool det)
        : SimulatorImpl(SimulatorKind::external, inputs, std::move(outputs), det),
          command_(std::move(command)),
          timeout_(timeout) {
        if (command_.empty()) throw InvalidArgument("external simulator needs a command");
    }

    std::vector<double> run(std::span<const double> point) override {
        std::lock_guard lock(mutex_);
        if (!child_ || !child_->alive()) child_ = std::make_unique<ChildProcess>(command_);
        std::string reply;
        try {
            reply = child_->request(join_doubles(std::vector<double>(point.begin(), point.end())), timeout_);
        } catch (...) {
            child_.reset();
            throw;
        }
        return parse_double_list(reply);
    }

    std::shared_ptr<SimulatorImpl> clone() const override {
        return std::make_shared<ExternalSimulator>(command_, inputs_, outputs_, timeout_, deterministic_);
    }

    const std::string& command() const override { return command_; }

private:
    std::string command_;
    std::chrono::milliseconds timeout_;
    std::mutex mutex_;
    std::unique_ptr<ChildProcess> child_;
};

}  // namespace
}  // namespace detail

SimulatorHandle::SimulatorHandle(std::shared_ptr<detail::SimulatorImpl> impl) : impl_(std::move(impl)) {}

SimulatorHandle SimulatorHandle::in_process(SimulatorFunction fn, std::size_t input_count,
                                            std::vector<std::string> output_names, bool deterministic) {
    return SimulatorHandle(std::make_shared<detail::FunctionSimulator>(std::move(fn), input_count,
                                                                       std::move(output_names), deterministic));
}

SimulatorHandle SimulatorHandle::external(std::string command, std::size_t input_count,
                                          std::vector<std::string> output_names,
                                          std::chrono::milliseconds timeout, bool deterministic) {
    return SimulatorHandle(std::make_shared<detail::ExternalSimulator>(
        std::move(command), input_count, std::move(output_names), timeout, deterministic));
}

SimulatorKind SimulatorHandle::kind() const noexcept { return impl_->kind_; }
const std::string& SimulatorHandle::command() const noexcept { return impl_->command(); }
const std::vector<std::string>& SimulatorHandle::output_names() const noexcept { return impl_->outputs_; }
std::size_t SimulatorHandle::input_count() const noexcept { return impl_->inputs_; }
bool SimulatorHandle::deterministic() const noexcept { return impl_->deterministic_; }
SimulatorHandle SimulatorHandle::clone() const { return SimulatorHandle(impl_->clone()); }

std::vector<double> SimulatorHandle::evaluate(std::span<const double> point) const {
    return impl_->evaluate(point);
}

std::size_t default_thread_count() {
    std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("EMUCHAIN_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return std::min<std::size_t>(static_cast<std::size_t>(v), hw);
    }
    return hw;
}

DesignSet run_design(const SimulatorHandle& handle, const DesignSet& design, const RunOptions& options) {
    if (design.has_responses()) throw InvalidArgument("run_design: design already has responses");
    const std::size_t n = design.runs();
    const std::size_t k = handle.output_names().size();
    RowMatrix responses(n, k);
    const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, std::max<std::size_t>(n, 1));

    std::vector<std::string> errors(n);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    auto work = [&](SimulatorHandle h) {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
            try {
                auto out = h.evaluate(design.point(i));
                for (std::size_t j = 0; j < k; ++j) responses(i, j) = out[j];
            } catch (const Error& e) {
                errors[i] = e.what();
                failed = true;
            }
        }
    };
    if (threads == 1) {
        work(handle);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t == 0 ? handle : handle.clone());
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!errors[i].empty()) throw SimulatorError("design row " + std::to_string(i) + ": " + errors[i]);
    }
    return design.with_responses(handle.output_names(), std::move(responses));
}

}  // namespace emuchain
