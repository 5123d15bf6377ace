#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rothe/experiment.hpp"

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<std::string> out;
    std::optional<rothe::OutputFormat> format;
};

void add_flags(CLI::App* cmd, Flags& flags, bool run_flags) {
    cmd->add_option("--config", flags.config, "experiment configuration file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", flags.seed, "master seed (overrides SEED_OVERRIDE and the file)");
    if (!run_flags) return;
    cmd->add_option("--samples", flags.samples, "Monte Carlo sample count")->check(CLI::PositiveNumber);
    cmd->add_option("--out", flags.out, "output directory");
    const std::map<std::string, rothe::OutputFormat> formats{{"csv", rothe::OutputFormat::csv},
                                                             {"jsonl", rothe::OutputFormat::jsonl}};
    cmd->add_option("--format", flags.format, "output format")->transform(CLI::CheckedTransformer(formats));
}

rothe::CommandOptions to_options(const Flags& flags) {
    rothe::CommandOptions options;
    options.config = flags.config;
    options.seed = flags.seed;
    options.samples = flags.samples;
    if (flags.out) options.output_dir = *flags.out;
    options.format = flags.format;
    return options;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linearly implicit Euler scheme for semilinear SPDEs: exact and inexact solves"};
    app.require_subcommand(1);

    Flags check_flags;
    Flags convergence_flags;
    Flags propagation_flags;
    auto* check = app.add_subcommand("check", "validate the parameters of a configuration");
    auto* convergence = app.add_subcommand("convergence", "strong error table and fitted rate");
    auto* propagation = app.add_subcommand("propagation", "exact vs inexact gap against the probe budget");
    add_flags(check, check_flags, false);
    add_flags(convergence, convergence_flags, true);
    add_flags(propagation, propagation_flags, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*check) return rothe::cmd_check(to_options(check_flags), std::cout, std::cerr);
    if (*convergence) return rothe::cmd_convergence(to_options(convergence_flags), std::cout, std::cerr);
    return rothe::cmd_propagation(to_options(propagation_flags), std::cout, std::cerr);
}
