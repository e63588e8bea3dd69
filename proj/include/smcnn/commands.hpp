#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smcnn/evaluation.hpp"
#include "smcnn/runconfig.hpp"

namespace smcnn {

// Exit codes: 0 success, then the documented error table.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitFormat = 3;
constexpr int kExitData = 4;

int exit_code_for(const std::exception& e);

struct GenOptions {
    std::string config_path;  // empty = defaults
    std::string out_path;
    std::optional<int> n_defect;
    std::optional<int> n_normal;
    std::optional<std::uint64_t> seed;
};

struct PrepOptions {
    std::string config_path;
    std::string in_path;
    std::string out_path;
    std::string csv_dir;  // optional: one CSV per window, for plotting
};

struct TrainOptions {
    std::string config_path;
    std::string in_path;
    std::string checkpoint_path;
    std::string history_path;
    std::string split_path;  // empty = "<checkpoint>.split"
    std::optional<int> epochs;
    std::optional<double> learning_rate;
    std::optional<int> batch_size;
    std::optional<std::uint64_t> seed;
    std::optional<double> split_ratio;
    std::optional<bool> augment;
    bool use_1d_arch = false;  // trains the single-channel baseline instead
};

struct EvalOptions {
    std::string in_path;
    std::string checkpoint_path;
    std::string split_path;   // empty = evaluate every window
    std::string report_path;  // optional copies of the stdout report
    std::string csv_path;
    std::string roc_path;
    std::string table_path;   // append a row to a shared comparison table
    std::string method_name = "sm-cnn";
};

struct BenchOptions {
    std::string config_path;
    std::string checkpoint_path;
    std::string report_path;
    std::string csv_path;
    std::optional<int> repeats;
    std::optional<int> n_windows;
};

struct BaselineOptions {
    std::string config_path;
    std::string in_path;
    std::string which;  // "pca-threshold" | "cnn1d"
    std::string split_path;
    std::string report_path;
    std::string csv_path;
    std::string table_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> split_ratio;
};

void cmd_gen(const GenOptions& opt);
void cmd_prep(const PrepOptions& opt);
void cmd_train(const TrainOptions& opt);
void cmd_eval(const EvalOptions& opt);
void cmd_bench(const BenchOptions& opt);
void cmd_baseline(const BaselineOptions& opt);

void write_split_file(const std::string& path, const std::vector<std::size_t>& train,
                      const std::vector<std::size_t>& test);
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> read_split_file(
    const std::string& path);

std::string format_eval_report(const std::string& method, const EvalReport& report);
std::string eval_csv_header();
std::string eval_csv_row(const std::string& method, const EvalReport& report);
std::string format_bench_report(const BenchReport& report);

/// Full argv-level entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace smcnn
