// Command-line front end: psbp <mode> --config <path> [options]

#include <iostream>

#include <CLI11.hpp>

#include "psbp/pipeline.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Perspective photometric stereo with Blinn-Phong reflectance"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string method;
    bool no_centerize = false;

    for (const char* name : {"render", "reconstruct", "evaluate", "conditioning"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides the config)");
        sub->add_option("--method", method, "lambert-ppn | lambert-pps | bp-ppn | bp-pps");
        sub->add_flag("--no-centerize", no_centerize, "treat the image origin as the principal point");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        psbp::PipelineConfig cfg = psbp::PipelineConfig::load(config_path);
        cfg.mode = psbp::mode_from_string(app.get_subcommands().front()->get_name());
        if (!out_dir.empty()) {
            cfg.output = out_dir;
        }
        if (!method.empty()) {
            cfg.method = psbp::method_from_string(method);
        }
        if (no_centerize) {
            cfg.centerize = false;
        }
        const psbp::EvaluationReport report = psbp::run_pipeline(cfg);
        std::cout << report.to_json().dump(2) << '\n';
        return 0;
    } catch (const psbp::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
