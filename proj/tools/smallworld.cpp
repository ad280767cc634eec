// Copyright 2026 The smallworld Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// smallworld command line: smallworld <subcommand> --config <path> [--out <dir>] [--seed <int>]

#include "smallworld/harness.h"

#include "CLI11.hpp"

#include <iostream>

namespace
{

void report_error(const std::string& kind, const std::string& message, const std::string& field = {})
{
    smallworld::json err{{"error", kind}, {"message", message}};
    if (!field.empty()) {
        err["field"] = field;
    }
    std::cerr << err.dump() << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    using namespace smallworld;

    CLI::App app{"Small-world epidemic scaling toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;

    struct Command {
        const char* name;
        const char* help;
    };
    const Command commands[] = {
        {"generate", "build the world and write its metadata and trajectories"},
        {"sample", "draw a uniform small world per configured fraction"},
        {"idi", "compute crowd-flow statistics of the real and sampled worlds"},
        {"simulate", "run one agent simulation on the real world"},
        {"scale", "write scaling reports for every configured fraction"},
        {"compare", "compare every configured policy against no restriction"},
        {"validate", "test the scaling laws against full-population simulations"},
        {"run", "run the whole pipeline"},
    };
    std::vector<CLI::App*> subs;
    std::vector<CLI::Option*> seed_options;
    for (const Command& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("--config", config_path, "experiment configuration JSON")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
        seed_options.push_back(sub->add_option("--seed", seed, "root seed (overrides seed)"));
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e) {
        report_error("usage", e.what());
        return 2;
    }

    try {
        ExperimentConfig config = load_config(config_path);
        if (!out_dir.empty()) {
            config.output_dir = out_dir;
        }
        for (auto* opt : seed_options) {
            if (opt->count() > 0) {
                config.seed = seed;
            }
        }

        const std::string name = app.get_subcommands().front()->get_name();
        FileList files;
        if (name == "generate") {
            files = run_generate(config);
        }
        else if (name == "sample") {
            files = run_sample(config);
        }
        else if (name == "idi") {
            files = run_idi(config, std::cout);
        }
        else if (name == "simulate") {
            files = run_simulate(config);
        }
        else if (name == "scale") {
            files = run_scale(config);
        }
        else if (name == "compare") {
            files = run_compare(config);
        }
        else if (name == "validate") {
            files = run_validate(config);
        }
        else {
            files = run_pipeline(config);
        }
        if (name != "idi") {
            for (const auto& f : files) {
                std::cout << f.string() << '\n';
            }
        }
    }
    catch (const ConfigError& e) {
        report_error("config", e.what(), e.field());
        return 1;
    }
    catch (const std::exception& e) {
        report_error("runtime", e.what());
        return 1;
    }
    return 0;
}
