// qdemux: simulate, analyze and predict demultiplexed single-photon rates.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "qdemux/cli/commands.hpp"

using namespace qdemux;

int main(int argc, char** argv)
{
    CLI::App app{"Demultiplexed quantum-dot single-photon source simulator"};
    app.require_subcommand(1);

    // simulate
    cli::SimulateOptions sim;
    std::string sim_format = "binary";
    std::uint64_t seed = 0;
    std::uint64_t pulses = 0;
    bool no_env = false;
    auto* s = app.add_subcommand("simulate", "run source -> network -> detectors");
    s->add_option("--config", sim.config_path, "scenario file")->required();
    s->add_option("--out", sim.out_dir, "output directory")->required();
    auto* seed_opt = s->add_option("--seed", seed, "override rng_seed");
    auto* pulses_opt = s->add_option("--pulses", pulses, "override clock.n_pulses");
    s->add_option("--threads", sim.threads, "worker threads (results do not depend on it)");
    s->add_option("--format", sim_format, "tag file format")
        ->check(CLI::IsMember({"csv", "binary", "json"}));
    s->add_flag("--no-env", no_env, "ignore QDEMUX_* environment overrides");
    s->add_option("--debug-emission", sim.debug_emission_pulses,
                  "dump per-pulse emission of the first N pulses");
    s->add_flag("--debug-drive", sim.debug_drive, "dump EOM drive curves");

    // analyze
    cli::AnalyzeOptions ana;
    std::string ana_format;
    auto* a = app.add_subcommand("analyze", "compute metrics from a tag file");
    a->add_option("--tags", ana.tag_path, "tag file")->required();
    a->add_option("--config", ana.config_path, "scenario file with clock and analysis settings");
    a->add_option("--out", ana.out_dir, "output directory (report to stdout when omitted)");
    a->add_option("--format", ana_format, "tag file format (default: from extension)")
        ->check(CLI::IsMember({"csv", "binary", "json"}));
    a->add_flag("--no-env", no_env, "ignore QDEMUX_* environment overrides");

    // predict
    cli::PredictOptions pre;
    pre.model = cli::reference_rate_model();
    std::string pre_config;
    std::string pre_mode = "slow";
    std::string pre_out;
    int order = 0;
    auto* p = app.add_subcommand("predict", "closed-form coincidence rates");
    p->add_option("--config", pre_config, "take the rate model from a scenario file");
    const std::pair<const char*, double RateModel::*> model_flags[] = {
        {"--rr", &RateModel::rr_hz},
        {"--eta-blinking", &RateModel::eta_blinking},
        {"--eta-qd", &RateModel::eta_qd},
        {"--eta-routing", &RateModel::eta_routing},
        {"--eta-det", &RateModel::eta_det},
        {"--eta-sw", &RateModel::eta_sw},
    };
    std::vector<std::pair<CLI::Option*, double RateModel::*>> model_opts;
    for (const auto& [flag, member] : model_flags)
        model_opts.emplace_back(p->add_option(flag, pre.model.*member), member);
    auto* m_opt = p->add_option("--m", pre.model.m, "channel count");
    p->add_option("--sigma-rr", pre.sigma.rr_hz);
    p->add_option("--sigma-eta-blinking", pre.sigma.eta_blinking);
    p->add_option("--sigma-eta-qd", pre.sigma.eta_qd);
    p->add_option("--sigma-eta-routing", pre.sigma.eta_routing);
    p->add_option("--sigma-eta-det", pre.sigma.eta_det);
    p->add_option("--sigma-eta-sw", pre.sigma.eta_sw);
    p->add_option("--mode", pre_mode, "blinking mode")->check(CLI::IsMember({"slow", "fast"}));
    p->add_option("--n", order, "single coincidence order");
    p->add_option("--out", pre_out, "write JSON here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kExitConfigError;
    }

    try {
        if (*s) {
            if (*seed_opt)
                sim.seed = seed;
            if (*pulses_opt)
                sim.pulses = pulses;
            sim.format = tag_format_from_string(sim_format);
            sim.use_env = !no_env;
            return cli::cmd_simulate(sim, std::cerr);
        }
        if (*a) {
            if (!ana_format.empty())
                ana.format = tag_format_from_string(ana_format);
            ana.use_env = !no_env;
            return cli::cmd_analyze(ana, std::cerr);
        }
        if (*p) {
            if (!pre_config.empty()) {
                // Explicit flags still win over the scenario's values.
                const RateModel from_cfg = rate_model_from_config(load_config_file(pre_config));
                const RateModel flags = pre.model;
                pre.model = from_cfg;
                for (const auto& [opt, member] : model_opts)
                    if (opt->count() > 0)
                        pre.model.*member = flags.*member;
                if (m_opt->count() > 0)
                    pre.model.m = flags.m;
            }
            pre.mode = blinking_mode_from_string(pre_mode);
            if (order != 0)
                pre.order = order;
            if (pre_out.empty())
                return cli::cmd_predict(pre, std::cout, std::cerr);
            std::ofstream f(pre_out);
            if (!f) {
                std::cerr << "error: cannot write " << pre_out << '\n';
                return cli::kExitIoError;
            }
            return cli::cmd_predict(pre, f, std::cerr);
        }
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return cli::kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kExitConfigError;
    }
    return cli::kExitOk;
}
