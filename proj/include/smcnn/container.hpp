#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smcnn/preprocess.hpp"
#include "smcnn/synthgen.hpp"

namespace smcnn {

// "MFLW1" container: magic, u16 version, u32 record count, u32 M, u32 N,
// then per record a label byte plus M*N float32 values in time-major order,
// closed by a CRC32 over everything before it. All fields little-endian.

struct DatasetRecord {
    Label label = Label::Normal;
    std::vector<float> values;  // rows * cols
};

struct Dataset {
    int rows = 0;  // M
    int cols = 0;  // N
    std::vector<DatasetRecord> records;
};

void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

Dataset dataset_from_signals(const std::vector<SignalMatrix>& records);
Dataset dataset_from_windows(const std::vector<WindowSample>& windows);
std::vector<WindowSample> windows_from_dataset(const Dataset& ds);

}  // namespace smcnn
