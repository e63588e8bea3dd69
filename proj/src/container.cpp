#include "smcnn/container.hpp"

#include "smcnn/binio.hpp"

namespace smcnn {

namespace {

constexpr char kMagic[5] = {'M', 'F', 'L', 'W', '1'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

void write_dataset(const std::string& path, const Dataset& ds) {
    if (ds.rows < 1 || ds.cols < 1) throw UsageError("write_dataset: invalid record shape");
    io::ByteWriter w;
    w.bytes(kMagic, sizeof kMagic);
    w.u16(kVersion);
    w.u32(std::uint32_t(ds.records.size()));
    w.u32(std::uint32_t(ds.rows));
    w.u32(std::uint32_t(ds.cols));
    const std::size_t per_record = std::size_t(ds.rows) * std::size_t(ds.cols);
    for (const auto& rec : ds.records) {
        if (rec.values.size() != per_record)
            throw UsageError("write_dataset: record size does not match declared shape");
        w.u8(std::uint8_t(rec.label));
        w.f32_array(rec.values.data(), rec.values.size());
    }
    w.u32(w.checksum());
    io::write_file(path, w);
}

Dataset read_dataset(const std::string& path) {
    const auto buf = io::read_file(path);
    constexpr std::size_t header = sizeof kMagic + 2 + 4 + 4 + 4;
    if (buf.size() < header + 4)
        throw TruncatedError("dataset: file too small (" + std::to_string(buf.size()) + " bytes)");
    io::ByteReader r(buf.data(), buf.size());
    r.expect_bytes(kMagic, sizeof kMagic, "dataset magic");
    const std::uint16_t version = r.u16();
    if (version != kVersion)
        throw VersionError("dataset: unsupported version " + std::to_string(version));
    const std::uint32_t count = r.u32();
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows < 1 || cols < 1) throw FormatError("dataset: invalid record shape");

    const std::uint64_t per_record = 1 + std::uint64_t(rows) * cols * sizeof(float);
    const std::uint64_t expected = header + std::uint64_t(count) * per_record + 4;
    if (buf.size() < expected) throw TruncatedError("dataset: payload truncated");
    if (buf.size() > expected) throw FormatError("dataset: trailing bytes");

    const std::uint32_t stored_crc =
        std::uint32_t(buf[buf.size() - 4]) | std::uint32_t(buf[buf.size() - 3]) << 8 |
        std::uint32_t(buf[buf.size() - 2]) << 16 | std::uint32_t(buf[buf.size() - 1]) << 24;
    if (io::crc32(buf.data(), buf.size() - 4) != stored_crc)
        throw ChecksumError("dataset: checksum mismatch");

    Dataset ds;
    ds.rows = int(rows);
    ds.cols = int(cols);
    ds.records.resize(count);
    for (auto& rec : ds.records) {
        const std::uint8_t label = r.u8();
        if (label > 1) throw FormatError("dataset: invalid label byte");
        rec.label = Label(label);
        rec.values.resize(std::size_t(rows) * cols);
        r.f32_array(rec.values.data(), rec.values.size());
    }
    return ds;
}

Dataset dataset_from_signals(const std::vector<SignalMatrix>& records) {
    if (records.empty()) throw UsageError("dataset_from_signals: no records");
    Dataset ds;
    ds.rows = records.front().rows;
    ds.cols = records.front().cols;
    for (const auto& rec : records) {
        if (rec.rows != ds.rows || rec.cols != ds.cols)
            throw UsageError("dataset_from_signals: records must share one shape");
        DatasetRecord out;
        out.label = rec.has_defect() ? Label::Defect : Label::Normal;
        out.values.assign(rec.values.begin(), rec.values.end());
        ds.records.push_back(std::move(out));
    }
    return ds;
}

Dataset dataset_from_windows(const std::vector<WindowSample>& windows) {
    if (windows.empty()) throw UsageError("dataset_from_windows: no windows");
    Dataset ds;
    ds.rows = windows.front().values.t;
    ds.cols = windows.front().values.c;
    for (const auto& w : windows) {
        if (w.values.t != ds.rows || w.values.c != ds.cols || w.values.f != 1)
            throw UsageError("dataset_from_windows: windows must share one shape");
        DatasetRecord out;
        out.label = w.label;
        out.values = w.values.data;
        ds.records.push_back(std::move(out));
    }
    return ds;
}

std::vector<WindowSample> windows_from_dataset(const Dataset& ds) {
    std::vector<WindowSample> out;
    out.reserve(ds.records.size());
    for (const auto& rec : ds.records) {
        WindowSample w;
        w.values = Tensor3f(ds.rows, ds.cols, 1);
        w.values.data = rec.values;
        w.label = rec.label;
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace smcnn
