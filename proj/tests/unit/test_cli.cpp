#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/stat.h>
#include <unistd.h>

#include "smcnn/binio.hpp"
#include "smcnn/commands.hpp"
#include "smcnn/container.hpp"
#include "smcnn/rng.hpp"

using namespace smcnn;

namespace {

struct TempDir {
    std::string path;
    TempDir() {
        char tmpl[] = "/tmp/smcnn_cli_XXXXXX";
        path = ::mkdtemp(tmpl);
    }
    std::string file(const std::string& name) const { return path + "/" + name; }
};

std::vector<unsigned char> slurp(const std::string& path) { return io::read_file(path); }

void spit(const std::string& path, const std::vector<unsigned char>& bytes) {
    io::ByteWriter w;
    w.bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    io::write_file(path, w);
}

int cli(std::initializer_list<const char*> args) {
    std::vector<const char*> argv{"smcnn"};
    argv.insert(argv.end(), args);
    return run_cli(int(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("dataset container round trip") {
    TempDir dir;
    GeneratorConfig cfg;
    const auto records = generate_dataset(cfg, 3, 2, 42);
    const Dataset ds = dataset_from_signals(records);
    const std::string path = dir.file("a.mflw");
    write_dataset(path, ds);
    const Dataset back = read_dataset(path);
    REQUIRE(back.records.size() == 5);
    CHECK(back.rows == 300);
    CHECK(back.cols == 16);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(back.records[i].label == (i < 3 ? Label::Defect : Label::Normal));
        REQUIRE(back.records[i].values == ds.records[i].values);
    }

    // same content -> byte-identical file
    const std::string path2 = dir.file("b.mflw");
    write_dataset(path2, ds);
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("container detects every single-byte corruption class") {
    TempDir dir;
    GeneratorConfig cfg;
    cfg.record_length = 40;
    const Dataset ds = dataset_from_signals(generate_dataset(cfg, 1, 1, 7));
    const std::string path = dir.file("c.mflw");
    write_dataset(path, ds);
    const auto bytes = slurp(path);

    SUBCASE("payload flip -> checksum") {
        auto mutated = bytes;
        mutated[mutated.size() / 2] ^= 0x01;
        spit(path, mutated);
        CHECK_THROWS_AS(read_dataset(path), ChecksumError);
    }
    SUBCASE("truncation") {
        spit(path, std::vector<unsigned char>(bytes.begin(), bytes.end() - 5));
        CHECK_THROWS_AS(read_dataset(path), TruncatedError);
    }
    SUBCASE("empty") {
        spit(path, {});
        CHECK_THROWS_AS(read_dataset(path), TruncatedError);
    }
    SUBCASE("version") {
        auto mutated = bytes;
        mutated[5] = 0x09;
        spit(path, mutated);
        CHECK_THROWS_AS(read_dataset(path), VersionError);
    }
    SUBCASE("magic") {
        auto mutated = bytes;
        mutated[1] ^= 0xFF;
        spit(path, mutated);
        CHECK_THROWS_AS(read_dataset(path), FormatError);
    }
    SUBCASE("bad label byte with repaired checksum") {
        auto mutated = bytes;
        mutated[19] = 2;  // label of record 0 sits right after the 19-byte header
        const std::uint32_t crc = io::crc32(mutated.data(), mutated.size() - 4);
        mutated[mutated.size() - 4] = crc & 0xFF;
        mutated[mutated.size() - 3] = (crc >> 8) & 0xFF;
        mutated[mutated.size() - 2] = (crc >> 16) & 0xFF;
        mutated[mutated.size() - 1] = (crc >> 24) & 0xFF;
        spit(path, mutated);
        CHECK_THROWS_AS(read_dataset(path), FormatError);
    }
}

TEST_CASE("run config parsing") {
    const RunConfig defaults = parse_run_config("");
    CHECK(defaults.train.learning_rate == 1e-4);
    CHECK(defaults.train.batch_size == 32);
    CHECK(defaults.train.epochs == 10);
    CHECK(defaults.split_ratio == 0.7);
    CHECK(defaults.n_defect == 196);
    CHECK(defaults.n_normal == 202);
    CHECK(!defaults.train.augmentation);

    const RunConfig rc = parse_run_config(
        "# comment\n"
        "[generator]\n"
        "channel_count = 16\n"
        "record_length = 600\n"
        "seed = 99\n"
        "n_defect = 10\n"
        "[preprocess]\n"
        "kernel_type = gaussian\n"
        "gaussian_sigma = 1.5\n"
        "stride = 150\n"
        "[train]\n"
        "learning_rate = 0.001\n"
        "augment = true\n"
        "channel_roll_max = 7\n"
        "[bench]\n"
        "repeats = 11\n");
    CHECK(rc.gen.record_length == 600);
    CHECK(rc.gen.seed == 99);
    CHECK(rc.n_defect == 10);
    CHECK(rc.prep.kernel_type == KernelType::Gaussian);
    CHECK(rc.prep.stride == 150);
    CHECK(rc.train.learning_rate == 0.001);
    REQUIRE(rc.train.augmentation.has_value());
    CHECK(rc.train.augmentation->channel_roll_max == 7);
    CHECK(rc.bench.repeats == 11);

    CHECK_THROWS_AS(parse_run_config("[generator]\nbogus_key = 1\n"), UsageError);
    CHECK_THROWS_AS(parse_run_config("[nope]\n"), UsageError);
    CHECK_THROWS_AS(parse_run_config("key_outside_section = 1\n"), UsageError);
    CHECK_THROWS_AS(parse_run_config("[train]\nlearning_rate = abc\n"), UsageError);
    CHECK_THROWS_AS(parse_run_config("[train]\nlearning_rate\n"), UsageError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/path.cfg"), IoError);
}

TEST_CASE("exit code mapping") {
    CHECK(exit_code_for(UsageError("x")) == 1);
    CHECK(exit_code_for(IoError("x")) == 2);
    CHECK(exit_code_for(FormatError("x")) == 3);
    CHECK(exit_code_for(TruncatedError("x")) == 3);
    CHECK(exit_code_for(ChecksumError("x")) == 3);
    CHECK(exit_code_for(VersionError("x")) == 3);
    CHECK(exit_code_for(DataError("x")) == 4);
    CHECK(exit_code_for(NumericError("x")) == 4);
    CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("cli pipeline end to end") {
    TempDir dir;
    const std::string raw = dir.file("raw.mflw");
    const std::string windows = dir.file("win.mflw");
    const std::string ckpt = dir.file("model.ckpt");
    const std::string hist = dir.file("history.csv");
    const std::string table = dir.file("table.csv");

    CHECK(cli({"gen", "--out", raw.c_str(), "--n-defect", "6", "--n-normal", "6", "--seed",
               "5"}) == 0);
    CHECK(cli({"prep", "--in", raw.c_str(), "--out", windows.c_str()}) == 0);
    CHECK(cli({"train", "--in", windows.c_str(), "--checkpoint", ckpt.c_str(), "--history",
               hist.c_str(), "--epochs", "1", "--batch-size", "4", "--seed", "3"}) == 0);
    CHECK(cli({"eval", "--in", windows.c_str(), "--checkpoint", ckpt.c_str(), "--split",
               (ckpt + ".split").c_str(), "--csv", dir.file("eval.csv").c_str(), "--roc",
               dir.file("roc.csv").c_str(), "--table", table.c_str()}) == 0);
    CHECK(cli({"baseline", "--in", windows.c_str(), "--which", "pca-threshold", "--split",
               (ckpt + ".split").c_str(), "--table", table.c_str()}) == 0);
    CHECK(cli({"bench", "--checkpoint", ckpt.c_str(), "--repeats", "5", "--n-windows", "2",
               "--csv", dir.file("bench.csv").c_str()}) == 0);

    // window container carries the declared 300x16 shape
    const Dataset win_ds = read_dataset(windows);
    CHECK(win_ds.rows == 300);
    CHECK(win_ds.cols == 16);

    // the single-channel baseline net trains and evaluates through the same surfaces
    const std::string ckpt1d = dir.file("model1d.ckpt");
    CHECK(cli({"train", "--in", windows.c_str(), "--checkpoint", ckpt1d.c_str(), "--epochs", "1",
               "--batch-size", "16", "--seed", "3", "--arch-1d"}) == 0);
    CHECK(cli({"eval", "--in", windows.c_str(), "--checkpoint", ckpt1d.c_str(), "--split",
               (ckpt1d + ".split").c_str(), "--method-name", "cnn1d"}) == 0);

    // artifacts exist and carry the expected schemas
    std::ifstream h(hist);
    std::string line;
    REQUIRE(std::getline(h, line));
    CHECK(line == "epoch,loss,accuracy");

    std::ifstream t(table);
    REQUIRE(std::getline(t, line));
    CHECK(line == eval_csv_header());
    int rows = 0;
    while (std::getline(t, line)) ++rows;
    CHECK(rows == 2);  // sm-cnn + pca-threshold

    std::ifstream r(dir.file("roc.csv"));
    REQUIRE(std::getline(r, line));
    CHECK(line == "fpr,tpr");
}

TEST_CASE("cli reruns are byte-identical") {
    TempDir dir;
    const std::string a = dir.file("a.mflw");
    const std::string b = dir.file("b.mflw");
    CHECK(cli({"gen", "--out", a.c_str(), "--n-defect", "4", "--n-normal", "4", "--seed", "11"}) ==
          0);
    CHECK(cli({"gen", "--out", b.c_str(), "--n-defect", "4", "--n-normal", "4", "--seed", "11"}) ==
          0);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("config file flags and environment variable") {
    TempDir dir;
    const std::string cfg = dir.file("ten.cfg");
    std::ofstream(cfg) << "[generator]\nn_defect = 10\nn_normal = 1\nseed = 2\n";

    // flags override file values
    const std::string out = dir.file("o.mflw");
    CHECK(cli({"gen", "--config", cfg.c_str(), "--out", out.c_str(), "--n-defect", "4"}) == 0);
    const Dataset ds = read_dataset(out);
    std::size_t defects = 0;
    for (const auto& rec : ds.records) defects += rec.label == Label::Defect;
    CHECK(ds.records.size() == 5);
    CHECK(defects == 4);

    // SMCNN_CONFIG supplies the default config path
    ::setenv("SMCNN_CONFIG", cfg.c_str(), 1);
    const std::string out2 = dir.file("o2.mflw");
    CHECK(cli({"gen", "--out", out2.c_str()}) == 0);
    ::unsetenv("SMCNN_CONFIG");
    CHECK(read_dataset(out2).records.size() == 11);

    // --help exits cleanly at both levels
    CHECK(cli({"--help"}) == 0);
    CHECK(cli({"gen", "--help"}) == 0);
}

TEST_CASE("cli exit codes follow the documented table") {
    TempDir dir;
    CHECK(cli({"definitely-not-a-command"}) == 1);
    CHECK(cli({"prep", "--in", "/nonexistent.mflw", "--out", dir.file("x").c_str()}) == 2);

    // corrupt container -> format error
    const std::string raw = dir.file("raw.mflw");
    CHECK(cli({"gen", "--out", raw.c_str(), "--n-defect", "2", "--n-normal", "2", "--seed",
               "1"}) == 0);
    auto bytes = slurp(raw);
    bytes[bytes.size() / 2] ^= 0x10;
    spit(raw, bytes);
    CHECK(cli({"prep", "--in", raw.c_str(), "--out", dir.file("y").c_str()}) == 3);

    // single-class window file -> degenerate data
    const std::string normals = dir.file("norm.mflw");
    const std::string nwin = dir.file("norm_win.mflw");
    CHECK(cli({"gen", "--out", normals.c_str(), "--n-defect", "0", "--n-normal", "3", "--seed",
               "1"}) == 0);
    CHECK(cli({"prep", "--in", normals.c_str(), "--out", nwin.c_str()}) == 0);
    CHECK(cli({"train", "--in", nwin.c_str(), "--checkpoint", dir.file("m").c_str()}) == 4);

    // bad config key -> usage error
    const std::string cfg = dir.file("bad.cfg");
    std::ofstream(cfg) << "[generator]\nnot_a_key = 1\n";
    CHECK(cli({"gen", "--config", cfg.c_str(), "--out", dir.file("z").c_str()}) == 1);
}
