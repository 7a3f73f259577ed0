#pragma once

#include "framing/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace framing::cli {

inline const std::vector<std::string> kSubcommands{"scrape", "prepare", "train", "evaluate", "analyze", "report"};

struct CommandOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::uint64_t> seed;
    std::filesystem::path out = "out";
    std::optional<std::filesystem::path> fixtures;
};

// Config file (or defaults) with command-line flags applied on top.
RunConfig effective_config(const CommandOptions& options);

struct Context {
    RunConfig config;
    std::filesystem::path out;
    std::ostream& log;
};

// Each command writes its artifacts under ctx.out plus a <command>_run.json
// manifest echoing the effective config, and returns the artifact paths.
std::vector<std::filesystem::path> cmd_scrape(const Context& ctx);
std::vector<std::filesystem::path> cmd_prepare(const Context& ctx);
std::vector<std::filesystem::path> cmd_train(const Context& ctx);
std::vector<std::filesystem::path> cmd_evaluate(const Context& ctx);
std::vector<std::filesystem::path> cmd_analyze(const Context& ctx);
std::vector<std::filesystem::path> cmd_report(const Context& ctx);

// Exit codes: 0 success, 2 usage or configuration error, 1 any other failure.
int run_command(const std::string& name, const CommandOptions& options, std::ostream& log, std::ostream& err);

}  // namespace framing::cli
