#pragma once

#include <string>

#include "smcnn/preprocess.hpp"
#include "smcnn/synthgen.hpp"
#include "smcnn/training.hpp"

namespace smcnn {

struct BenchConfig {
    int warmup = 10;
    int repeats = 100;
    int n_windows = 8;
};

/// Plain-text `key = value` configuration with [generator], [preprocess],
/// [train] and [bench] sections. Unknown keys are rejected; the parse either
/// fails or yields a complete config.
struct RunConfig {
    GeneratorConfig gen;
    int n_defect = 196;
    int n_normal = 202;
    PreprocessConfig prep;
    TrainConfig train;
    double split_ratio = 0.7;
    BenchConfig bench;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

}  // namespace smcnn
