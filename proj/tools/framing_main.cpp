#include "framing/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

int main(int argc, char** argv) {
    CLI::App app{"Headline framing toolkit: scrape, prepare, train, evaluate, analyze, report"};
    app.require_subcommand(1);

    framing::cli::CommandOptions options;
    std::string config, out = "out", fixtures;
    std::uint64_t seed = 0;
    const std::map<std::string, std::string> about{
        {"scrape", "Fetch keyword feeds and write a deduplicated corpus.jsonl"},
        {"prepare", "Draw the annotation sample and the shuffle-split plan"},
        {"train", "Cross-validate configured models and fit the final checkpoint"},
        {"evaluate", "Score the checkpoint on a labeled corpus"},
        {"analyze", "Predict scraped headlines and build the case-study report"},
        {"report", "Collect previous outputs into report.md"}};
    for (const auto& name : framing::cli::kSubcommands) {
        auto* sub = app.add_subcommand(name, about.at(name));
        sub->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Seed overriding the config");
        sub->add_option("--out", out, "Output directory")->capture_default_str();
        sub->add_option("--fixtures", fixtures, "Directory of <keyword>.xml feeds used instead of HTTP");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    auto* sub = app.get_subcommands().front();
    if (!config.empty()) options.config = config;
    if (sub->count("--seed")) options.seed = seed;
    if (!fixtures.empty()) options.fixtures = fixtures;
    options.out = out;
    return framing::cli::run_command(sub->get_name(), options, std::cout, std::cerr);
}
