// piezoloc: simulate -> train -> evaluate for the piezoresistive contact
// localisation pipeline.
//
// Exit codes: 0 success, 1 internal/solver error, 2 usage/config error.

#include "piezoloc/config.hpp"
#include "piezoloc/errors.hpp"
#include "piezoloc/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace piezoloc;

namespace {

constexpr int kUsageError = 2;
constexpr int kInternalError = 1;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "Run configuration (JSON); defaults apply to missing keys");
    cmd->add_option("--seed", opts.seed, "Master seed, overrides the config");
    cmd->add_option("--out", opts.out, "Output directory, overrides the config");
}

RunConfig resolve_config(const CommonOptions& opts) {
    RunConfig cfg = opts.config_path.empty() ? default_config() : load_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (!opts.out.empty()) cfg.output_dir = opts.out;
    return cfg;
}

void require_file(const std::string& path, const char* what) {
    if (!fs::is_regular_file(path)) {
        throw ConfigError(std::string(what) + " not found: " + path);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Piezoresistive contact localisation: simulate, train, evaluate"};
    app.require_subcommand(1);

    CommonOptions sim_opts;
    std::optional<std::size_t> repeats;
    auto* simulate = app.add_subcommand("simulate", "Write train (grid) and test (random) datasets");
    add_common(simulate, sim_opts);
    simulate->add_option("--repeats", repeats, "Number of training grid repeats")->check(CLI::PositiveNumber);

    CommonOptions train_opts;
    std::string train_file;
    std::string method = "krr";
    auto* train = app.add_subcommand("train", "Fit a predictor on a dataset");
    add_common(train, train_opts);
    train->add_option("train_file", train_file, "Training dataset (JSON lines)")->required();
    train->add_option("--method", method, "linear or krr")->check(CLI::IsMember({"linear", "krr"}));

    CommonOptions eval_opts;
    std::string test_file;
    std::vector<std::string> model_files;
    auto* evaluate = app.add_subcommand("evaluate", "Score baselines and models on a test dataset");
    add_common(evaluate, eval_opts);
    evaluate->add_option("test_file", test_file, "Test dataset (JSON lines)")->required();
    evaluate->add_option("models", model_files, "Model files from 'train'");

    CommonOptions print_opts;
    auto* print = app.add_subcommand("print-config", "Print the fully resolved configuration");
    add_common(print, print_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (*simulate) {
            RunConfig cfg = resolve_config(sim_opts);
            if (repeats) cfg.train_protocol.repeats = *repeats;
            cmd_simulate(cfg, cfg.output_dir, std::cout);
        } else if (*train) {
            const RunConfig cfg = resolve_config(train_opts);
            require_file(train_file, "training dataset");
            cmd_train(cfg, train_file, method_from_string(method), cfg.output_dir, std::cout);
        } else if (*evaluate) {
            const RunConfig cfg = resolve_config(eval_opts);
            require_file(test_file, "test dataset");
            std::vector<fs::path> models;
            for (const std::string& m : model_files) {
                require_file(m, "model file");
                models.emplace_back(m);
            }
            cmd_evaluate(cfg, test_file, models, cfg.output_dir, std::cout);
        } else if (*print) {
            const RunConfig cfg = resolve_config(print_opts);
            std::cout << config_to_json(cfg).dump(2) << "\nconfig_hash " << config_hash(cfg) << '\n';
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const LoadError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
    return 0;
}
