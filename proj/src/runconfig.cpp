#include "smcnn/runconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace smcnn {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& key) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw UsageError("config: invalid number for key '" + key + "': " + v);
    }
    if (pos != v.size()) throw UsageError("config: invalid number for key '" + key + "': " + v);
    return out;
}

int to_int(const std::string& v, const std::string& key) {
    std::size_t pos = 0;
    long out = 0;
    try {
        out = std::stol(v, &pos);
    } catch (const std::exception&) {
        throw UsageError("config: invalid integer for key '" + key + "': " + v);
    }
    if (pos != v.size()) throw UsageError("config: invalid integer for key '" + key + "': " + v);
    return int(out);
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
    std::size_t pos = 0;
    unsigned long long out = 0;
    try {
        out = std::stoull(v, &pos);
    } catch (const std::exception&) {
        throw UsageError("config: invalid unsigned integer for key '" + key + "': " + v);
    }
    if (pos != v.size())
        throw UsageError("config: invalid unsigned integer for key '" + key + "': " + v);
    return out;
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw UsageError("config: invalid boolean for key '" + key + "': " + v);
}

struct AugmentStaging {
    bool enabled = false;
    AugmentConfig cfg;
    bool seed_given = false;
};

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    RunConfig rc;
    AugmentStaging aug;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw);
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = trim(line.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw UsageError("config line " + std::to_string(line_no) + ": malformed section");
            section = line.substr(1, line.size() - 2);
            if (section != "generator" && section != "preprocess" && section != "train" &&
                section != "bench")
                throw UsageError("config: unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw UsageError("config line " + std::to_string(line_no) + ": empty key or value");

        if (section == "generator") {
            auto& g = rc.gen;
            if (key == "channel_count") g.channel_count = to_int(value, key);
            else if (key == "record_length") g.record_length = to_int(value, key);
            else if (key == "strand_period") g.strand_period = to_double(value, key);
            else if (key == "strand_amplitude_lo") g.strand_amplitude.lo = to_double(value, key);
            else if (key == "strand_amplitude_hi") g.strand_amplitude.hi = to_double(value, key);
            else if (key == "strand_phase_jitter") g.strand_phase_jitter = to_double(value, key);
            else if (key == "drift_lo") g.drift_coeffs.lo = to_double(value, key);
            else if (key == "drift_hi") g.drift_coeffs.hi = to_double(value, key);
            else if (key == "white_noise_std") g.white_noise_std = to_double(value, key);
            else if (key == "defect_amplitude_lo") g.defect_amplitude.lo = to_double(value, key);
            else if (key == "defect_amplitude_hi") g.defect_amplitude.hi = to_double(value, key);
            else if (key == "defect_axial_width_lo") g.defect_axial_width.lo = to_double(value, key);
            else if (key == "defect_axial_width_hi") g.defect_axial_width.hi = to_double(value, key);
            else if (key == "defect_circ_spread_lo") g.defect_circ_spread.lo = to_double(value, key);
            else if (key == "defect_circ_spread_hi") g.defect_circ_spread.hi = to_double(value, key);
            else if (key == "seed") g.seed = to_u64(value, key);
            else if (key == "n_defect") rc.n_defect = to_int(value, key);
            else if (key == "n_normal") rc.n_normal = to_int(value, key);
            else throw UsageError("config: unknown key '" + key + "' in section [generator]");
        } else if (section == "preprocess") {
            auto& p = rc.prep;
            if (key == "kernel_half_width") p.kernel_half_width = to_int(value, key);
            else if (key == "kernel_type") {
                if (value == "uniform") p.kernel_type = KernelType::Uniform;
                else if (value == "gaussian") p.kernel_type = KernelType::Gaussian;
                else throw UsageError("config: kernel_type must be uniform or gaussian");
            } else if (key == "gaussian_sigma") p.gaussian_sigma = to_double(value, key);
            else if (key == "trend_degree") p.trend_degree = to_int(value, key);
            else if (key == "residual_mean_window") p.residual_mean_window = to_int(value, key);
            else if (key == "window_length") p.window_length = to_int(value, key);
            else if (key == "stride") p.stride = to_int(value, key);
            else if (key == "normalization") {
                if (value != "max_abs")
                    throw UsageError("config: normalization must be max_abs");
            } else throw UsageError("config: unknown key '" + key + "' in section [preprocess]");
        } else if (section == "train") {
            auto& t = rc.train;
            if (key == "learning_rate") t.learning_rate = to_double(value, key);
            else if (key == "batch_size") t.batch_size = to_int(value, key);
            else if (key == "epochs") t.epochs = to_int(value, key);
            else if (key == "beta1") t.beta1 = to_double(value, key);
            else if (key == "beta2") t.beta2 = to_double(value, key);
            else if (key == "epsilon") t.epsilon = to_double(value, key);
            else if (key == "seed") t.shuffle_seed = to_u64(value, key);
            else if (key == "workers") t.workers = to_int(value, key);
            else if (key == "split_ratio") rc.split_ratio = to_double(value, key);
            else if (key == "augment") aug.enabled = to_bool(value, key);
            else if (key == "channel_roll_max") aug.cfg.channel_roll_max = to_int(value, key);
            else if (key == "axial_shift_max") aug.cfg.axial_shift_max = to_int(value, key);
            else if (key == "amplitude_scale_lo") aug.cfg.amplitude_scale.lo = to_double(value, key);
            else if (key == "amplitude_scale_hi") aug.cfg.amplitude_scale.hi = to_double(value, key);
            else if (key == "apply_probability") aug.cfg.apply_probability = to_double(value, key);
            else if (key == "augment_seed") {
                aug.cfg.seed = to_u64(value, key);
                aug.seed_given = true;
            } else throw UsageError("config: unknown key '" + key + "' in section [train]");
        } else if (section == "bench") {
            auto& b = rc.bench;
            if (key == "warmup") b.warmup = to_int(value, key);
            else if (key == "repeats") b.repeats = to_int(value, key);
            else if (key == "n_windows") b.n_windows = to_int(value, key);
            else throw UsageError("config: unknown key '" + key + "' in section [bench]");
        } else {
            throw UsageError("config line " + std::to_string(line_no) +
                             ": key '" + key + "' outside any section");
        }
    }
    if (aug.enabled) {
        if (!aug.seed_given) aug.cfg.seed = derive_seed(rc.train.shuffle_seed, 2);
        rc.train.augmentation = aug.cfg;
    }
    return rc;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_run_config(ss.str());
}

}  // namespace smcnn
