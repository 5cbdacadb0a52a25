#include "commands.hpp"

#include "emuchain/error.hpp"
#include "emuchain/io.hpp"
#include "emuchain/ledger.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

namespace fs = std::filesystem;
using namespace emuchain;

int fail(const char* kind, const std::string& message, int code) {
    std::cerr << Json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << "\n";
    return code;
}

// A lock that fails verification is reported here and never extended.
int run_audited(const cli::Action& action, const cli::Context& ctx, const std::string& operation) {
    const cli::RunRecord rec = action();
    const fs::path lock_file = cli::lock_path(ctx, rec.output);
    LockFile lock = fs::exists(lock_file) ? read_lock(lock_file) : LockFile{};
    if (rec.manifest) record_manifest(lock, *rec.manifest);
    AuditRecord r;
    r.timestamp = utc_timestamp();
    r.operation = operation;
    for (const auto& p : rec.inputs) r.input_hashes.push_back(sha256_file(p.string()));
    r.seed = rec.seed;
    r.output_hash = rec.output.empty() ? sha256_hex(rec.stdout_text) : sha256_file(rec.output.string());
    r.rationale = ctx.command_line;
    lock.audit.append(std::move(r));
    write_lock(lock_file, lock);
    std::cout << rec.stdout_text;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"emuchain: emulator-based uncertainty analysis for chains of simulators"};
    app.require_subcommand(1);
    cli::Context ctx;
    app.add_option("--lock", ctx.lock, "Lock file holding the manifest and audit chain (default: next to the output)");
    for (int i = 0; i < argc; ++i) ctx.command_line += (i ? " " : "") + std::string(argv[i]);

    std::vector<std::pair<CLI::App*, cli::Action>> actions;
    cli::add_design(app, actions);
    cli::add_run(app, actions);
    cli::add_fit(app, actions);
    cli::add_validate(app, actions);
    cli::add_discrepancy(app, actions);
    cli::add_match(app, actions);
    cli::add_forecast(app, actions);
    cli::add_propagate(app, actions);
    cli::add_decide(app, actions, ctx);
    cli::add_pareto(app, actions, ctx);
    cli::add_tree(app, actions);
    cli::add_audit(app, actions, ctx);
    cli::add_report(app, actions, ctx);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    for (const auto& [sub, action] : actions) {
        if (!sub->parsed()) continue;
        std::string operation = sub->get_name();
        if (sub->get_parent() != &app) operation = sub->get_parent()->get_name() + "." + operation;
        try {
            return run_audited(action, ctx, operation);
        } catch (const FileNotFound& e) {
            return fail("missing_file", e.what(), 2);
        } catch (const Error& e) {
            return fail(e.kind(), e.what(), 1);
        } catch (const nlohmann::json::exception& e) {
            return fail("format", e.what(), 1);
        } catch (const std::exception& e) {
            return fail("internal", e.what(), 1);
        }
    }
    std::cerr << app.help();
    return 2;
}
