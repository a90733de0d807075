#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "critmem/errors.hpp"
#include "critmem/harness.hpp"

namespace {

critmem::Harness make_harness(const std::string& config_path) {
    return critmem::Harness(critmem::RunConfig::from_file(config_path));
}

int finish(const critmem::Harness& harness) {
    if (!harness.failures().empty()) {
        for (const auto& failure : harness.failures()) {
            std::cerr << "FAILED " << failure.dataset << "/"
                      << (failure.user.empty() ? "-" : failure.user) << " " << failure.stage
                      << ": " << failure.message << "\n";
        }
        return 1;
    }
    return 0;
}

void write_report(const critmem::Json& report, const std::filesystem::path& output_dir) {
    std::filesystem::create_directories(output_dir);
    const std::filesystem::path path = output_dir / "report.json";
    std::ofstream out(path);
    out << report.dump(2) << "\n";
    std::cout << "report written to " << path.string() << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"critique-memory learning harness"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("-c,--config", config_path, "run config JSON file")->required();

    auto* train_cmd =
        app.add_subcommand("train", "build critique, index and semantic memory artifacts");
    auto* eval_cmd = app.add_subcommand("eval", "evaluate the configured strategies");
    auto* probe_cmd = app.add_subcommand("probe", "run the suggestibility probes");
    auto* report_cmd = app.add_subcommand("report", "assemble report and tables from artifacts");

    auto* dump_cmd = app.add_subcommand("dump-prompt", "print the assembled prompt for one instance");
    std::string dump_dataset;
    std::string dump_instance;
    std::string dump_strategy = "zero_shot";
    std::string dump_condition;
    double dump_fraction = 1.0;
    bool dump_adversarial = false;
    dump_cmd->add_option("--dataset", dump_dataset, "dataset name")->required();
    dump_cmd->add_option("--instance", dump_instance, "instance id")->required();
    dump_cmd->add_option("--strategy", dump_strategy, "strategy name");
    dump_cmd->add_option("--condition", dump_condition,
                         "probe condition (XY, XY_Crit, X_Crit); overrides --strategy");
    dump_cmd->add_option("--fraction", dump_fraction, "training fraction");
    dump_cmd->add_flag("--adversarial", dump_adversarial, "use the flipped label (probe only)");

    CLI11_PARSE(app, argc, argv);

    try {
        critmem::Harness harness = make_harness(config_path);

        if (train_cmd->parsed()) {
            harness.train();
            std::cout << "training artifacts ready; meter: " << harness.meter().snapshot().dump()
                      << "\n";
            return finish(harness);
        }
        if (eval_cmd->parsed()) {
            const critmem::Json report = harness.run_experiment();
            write_report(report, harness.config().output_dir);
            std::cerr << "meter: " << harness.meter().snapshot().dump() << "\n";
            return finish(harness);
        }
        if (probe_cmd->parsed()) {
            harness.probe();
            std::cout << "probe artifacts ready; meter: " << harness.meter().snapshot().dump()
                      << "\n";
            return finish(harness);
        }
        if (report_cmd->parsed()) {
            const critmem::Json report = harness.build_report();
            write_report(report, harness.config().output_dir);
            std::cout << "\nAccuracy (fraction 1):\n"
                      << critmem::render_accuracy_table(report) << "\n";
            std::cout << "Training-size grid:\n" << critmem::render_fraction_grid(report) << "\n";
            const std::string probe_table = critmem::render_probe_table(report);
            if (!probe_table.empty()) std::cout << "Suggestibility:\n" << probe_table << "\n";
            std::cout << "Token costs (fraction 1):\n"
                      << critmem::render_token_table(report) << "\n";
            if (report.contains("gains")) {
                std::cout << "Gains over baselines:\n"
                          << critmem::render_gain_table(critmem::aggregate_gains(report)) << "\n";
            }
            return finish(harness);
        }
        if (dump_cmd->parsed()) {
            if (!dump_condition.empty()) {
                std::cout << harness.dump_probe_prompt(
                    dump_dataset, dump_instance,
                    critmem::probe_condition_from_string(dump_condition), dump_adversarial);
            } else {
                std::cout << harness.dump_prompt(dump_dataset, dump_instance,
                                                 critmem::strategy_from_string(dump_strategy),
                                                 dump_fraction);
            }
            return 0;
        }
    } catch (const critmem::Error& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "unexpected error: " << ex.what() << "\n";
        return 3;
    }
    return 0;
}
