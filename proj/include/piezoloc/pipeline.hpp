#pragma once

// simulate -> train -> evaluate orchestration shared by the CLI and the
// acceptance suite. Output files carry the config hash and no timestamps,
// so identical configs give byte-identical artifacts.

#include "piezoloc/config.hpp"
#include "piezoloc/eval.hpp"
#include "piezoloc/learn.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace piezoloc {

struct SimulationResult {
    Dataset train;
    Dataset test;
    double noise_sd = 0.0;
};

/// Collects the training grids and the random test set in memory.
SimulationResult simulate_run(const RunConfig& cfg);

/// Splits a repeated grid dataset back into its per-repeat grids.
std::vector<Dataset> split_repeats(const Dataset& grid_data);

enum class Method { linear, krr };
Method method_from_string(const std::string& s);
std::string to_string(Method m);

struct TrainResult {
    TrainedModel model;
    std::optional<GridSearchResult> search;  // krr only
};

TrainResult train_model(const Dataset& train, Method method, const GridSearchSpec& spec);

struct ReportRow {
    std::string name;
    ErrorStats stats;
};

/// Center and random baselines followed by each named model, in the given order.
std::vector<ReportRow> evaluation_rows(const Dataset& test, const std::vector<std::pair<std::string, TrainedModel>>& models,
                                       std::uint64_t random_baseline_seed);

std::string format_report_text(const std::vector<ReportRow>& rows, const std::string& header);
std::string format_report_csv(const std::vector<ReportRow>& rows);

struct SimulateOutputs {
    std::filesystem::path train;
    std::filesystem::path test;
    std::filesystem::path holdout_train;  // three grids
    std::filesystem::path holdout_test;   // the last grid
};

/// Writes train.jsonl, test.jsonl, holdout_train.jsonl and holdout_test.jsonl into out.
SimulateOutputs cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// Writes model_<method>.json into out and returns its path.
std::filesystem::path cmd_train(const RunConfig& cfg, const std::filesystem::path& train_file, Method method,
                                const std::filesystem::path& out, std::ostream& log);

/// Writes report.txt, report.csv, vector_field_<name>.{csv,svg} and, when the
/// test set is a full lattice, heatmap_<name>.{csv,svg}.
void cmd_evaluate(const RunConfig& cfg, const std::filesystem::path& test_file,
                  const std::vector<std::filesystem::path>& model_files, const std::filesystem::path& out,
                  std::ostream& log);

void save_model(const TrainResult& result, const nlohmann::ordered_json& metadata, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

} // namespace piezoloc
