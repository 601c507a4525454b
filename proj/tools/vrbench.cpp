#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vrbench/pipeline.hpp"

using namespace vrbench;

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> parse_temperatures(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad temperature: " + item);
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Benchmark factory and evaluation harness for C vulnerability reasoning"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string models;
    std::string mode;
    bool pairwise = false;
    std::string temperatures;
    app.add_option("--config", config_path, "Pipeline config (JSON)")->required();
    app.add_option("--seed", seed, "Global seed; overrides the config");
    app.add_option("--models", models, "Comma-separated model names to evaluate");
    app.add_option("--mode", mode, "Inference mode")->check(CLI::IsMember({"zero", "icl"}));
    app.add_flag("--pairwise", pairwise, "Present safe/unsafe pairs in one prompt");
    app.add_option("--temperatures", temperatures, "Comma-separated temperature list");

    const char* stages[] = {"ingest", "generate", "questions", "evaluate", "score", "all"};
    const char* help[] = {"Scan the input directory and resolve function pairs",
                          "Generate the variant matrix per base",
                          "Generate and balance the question set",
                          "Query the configured models",
                          "Compute metrics documents",
                          "Run every stage"};
    for (int i = 0; i < 6; ++i) app.add_subcommand(stages[i], help[i]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        auto cfg = pipeline::load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (!models.empty()) cfg.model_filter = split_list(models);
        if (!mode.empty()) cfg.mode = harness::parse_mode(mode);
        if (pairwise) cfg.pairwise = true;
        if (!temperatures.empty()) cfg.temperatures = parse_temperatures(temperatures);

        auto name = app.get_subcommands().front()->get_name();
        pipeline::StageResult result;
        if (name == "ingest") result = pipeline::cmd_ingest(cfg);
        else if (name == "generate") result = pipeline::cmd_generate(cfg);
        else if (name == "questions") result = pipeline::cmd_questions(cfg);
        else if (name == "evaluate") result = pipeline::cmd_evaluate(cfg);
        else if (name == "score") result = pipeline::cmd_score(cfg);
        else result = pipeline::cmd_all(cfg);

        for (const auto& p : result.problems) std::cerr << "problem: " << p << "\n";
        for (const auto& f : result.files) std::cout << f << "\n";
        return static_cast<int>(result.status);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
