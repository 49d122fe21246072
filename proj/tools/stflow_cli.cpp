// stflow <kind> [--config path] [--set section.key=value]... [--threads N] [--output dir]

#include "stflow/config.hpp"
#include "stflow/errors.hpp"
#include "stflow/experiment.hpp"
#include "stflow/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace stflow;
    CLI::App app{"stflow experiment driver"};
    app.set_version_flag("--version", std::string("stflow ") + version());
    app.require_subcommand(1);

    std::string config_path, output;
    std::vector<std::string> sets;
    unsigned threads = 0;
    for (const std::string& kind : experiment_kinds()) {
        CLI::App* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
        sub->add_option("-c,--config", config_path, "INI file")->check(CLI::ExistingFile);
        sub->add_option("-s,--set", sets, "override, section.key=value")->take_all();
        sub->add_option("-t,--threads", threads, "worker threads, 0 for all cores");
        sub->add_option("-o,--output", output, "output directory");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    const std::string kind = app.get_subcommands().front()->get_name();

    try {
        set_default_threads(threads);
        std::vector<std::string> overrides = sets;
        overrides.push_back("experiment.kind=" + kind);
        if (!output.empty()) overrides.push_back("experiment.output=" + output);
        const ExperimentConfig cfg =
            config_path.empty() ? parse_config("", overrides) : load_config(config_path, overrides);
        const RunResult res = run_experiment(cfg);
        for (const auto& f : res.files) std::cout << f << '\n';
        std::cout << res.manifest << '\n';
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "stflow: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const Error& e) {
        std::cerr << "stflow: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "stflow: " << e.what() << '\n';
        return 3;
    }
}
