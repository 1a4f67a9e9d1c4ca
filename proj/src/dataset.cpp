#include "qrlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "qrlab/errors.hpp"
#include "qrlab/rng.hpp"

namespace qrlab::data {

int DatasetSplit::num_classes() const {
    int hi = 0;
    for (int l : labels) hi = std::max(hi, l);
    return hi + 1;
}

namespace {

std::uint32_t read_be_u32(std::ifstream& in, const std::string& path, std::size_t offset) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in)
        throw data_error(path + ": truncated file, expected 4 bytes at offset " +
                         std::to_string(offset));
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void record_bounds(DatasetSplit& split, double lo, double hi) {
    split.bound_lo.assign(split.cols, lo);
    split.bound_hi.assign(split.cols, hi);
}

void record_actual_bounds(DatasetSplit& split) {
    split.bound_lo.assign(split.cols, std::numeric_limits<double>::infinity());
    split.bound_hi.assign(split.cols, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < split.rows; ++i)
        for (std::size_t j = 0; j < split.cols; ++j) {
            double v = split.features[i * split.cols + j];
            split.bound_lo[j] = std::min(split.bound_lo[j], v);
            split.bound_hi[j] = std::max(split.bound_hi[j], v);
        }
}

}  // namespace

DatasetSplit load_mnist(const std::string& images_path, const std::string& labels_path,
                        Role role) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw data_error(images_path + ": cannot open");
    std::uint32_t magic = read_be_u32(img, images_path, 0);
    if (magic != 2051)
        throw data_error(images_path + ": bad magic at offset 0, expected 2051, got " +
                         std::to_string(magic));
    std::uint32_t count = read_be_u32(img, images_path, 4);
    std::uint32_t height = read_be_u32(img, images_path, 8);
    std::uint32_t width = read_be_u32(img, images_path, 12);

    DatasetSplit split;
    split.role = role;
    split.rows = count;
    split.cols = static_cast<std::size_t>(height) * width;
    split.features.resize(split.rows * split.cols);
    std::vector<unsigned char> pixels(split.cols);
    for (std::uint32_t i = 0; i < count; ++i) {
        img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
        if (!img)
            throw data_error(images_path + ": truncated file in image " + std::to_string(i) +
                             " at offset " + std::to_string(16 + std::size_t(i) * split.cols));
        double* row = split.features.data() + std::size_t(i) * split.cols;
        for (std::size_t j = 0; j < split.cols; ++j) row[j] = pixels[j] / 255.0;
    }

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw data_error(labels_path + ": cannot open");
    std::uint32_t lmagic = read_be_u32(lab, labels_path, 0);
    if (lmagic != 2049)
        throw data_error(labels_path + ": bad magic at offset 0, expected 2049, got " +
                         std::to_string(lmagic));
    std::uint32_t lcount = read_be_u32(lab, labels_path, 4);
    if (lcount != count)
        throw data_error(labels_path + ": label count " + std::to_string(lcount) +
                         " does not match image count " + std::to_string(count));
    split.labels.resize(count);
    std::vector<unsigned char> raw(count);
    lab.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
    if (!lab)
        throw data_error(labels_path + ": truncated file, expected " + std::to_string(count) +
                         " labels at offset 8");
    for (std::uint32_t i = 0; i < count; ++i) split.labels[i] = raw[i];

    record_bounds(split, 0.0, 1.0);
    return split;
}

std::pair<double, double> spiral_point(int cls, double t, double noise_x, double noise_y,
                                       double radial_scale) {
    const double sign = cls == 0 ? 1.0 : -1.0;
    return {sign * radial_scale * t * std::cos(t) + noise_x,
            sign * radial_scale * t * std::sin(t) + noise_y};
}

namespace {

DatasetSplit generate_spiral_split(const SpiralConfig& config, std::uint64_t seed, Role role) {
    DatasetSplit split;
    split.role = role;
    split.cols = 2;
    split.rows = static_cast<std::size_t>(config.points_per_class) * 2;
    split.features.resize(split.rows * 2);
    split.labels.resize(split.rows);
    const double noise_std = std::sqrt(config.noise_variance);
    SplitMix64 rng(seed);
    std::size_t row = 0;
    for (int cls = 0; cls < 2; ++cls) {
        for (int i = 0; i < config.points_per_class; ++i, ++row) {
            const double t = rng.uniform(0.0, config.t_max);
            const double nx = noise_std * rng.normal();
            const double ny = noise_std * rng.normal();
            auto [x, y] = spiral_point(cls, t, nx, ny, config.radial_scale);
            split.features[row * 2] = x;
            split.features[row * 2 + 1] = y;
            split.labels[row] = cls;
        }
    }
    record_actual_bounds(split);
    return split;
}

}  // namespace

std::pair<DatasetSplit, DatasetSplit> generate_spirals(const SpiralConfig& config) {
    DatasetSplit train = generate_spiral_split(config, derive_stream(config.seed, 0), Role::train);
    DatasetSplit test = generate_spiral_split(config, derive_stream(config.seed, 1), Role::test);
    if (config.normalize) {
        double extent = 0.0;
        for (const DatasetSplit* s : {&train, &test})
            for (double v : s->features) extent = std::max(extent, std::abs(v));
        if (extent > 0.0) {
            for (DatasetSplit* s : {&train, &test}) {
                for (double& v : s->features) v /= extent;
                record_actual_bounds(*s);
            }
        }
    }
    return {std::move(train), std::move(test)};
}

namespace {

DatasetSplit take_rows(const DatasetSplit& src, const std::vector<std::size_t>& idx, Role role) {
    DatasetSplit out;
    out.role = role;
    out.cols = src.cols;
    out.rows = idx.size();
    out.features.resize(out.rows * out.cols);
    out.labels.resize(out.rows);
    out.bound_lo = src.bound_lo;
    out.bound_hi = src.bound_hi;
    for (std::size_t r = 0; r < idx.size(); ++r) {
        std::copy_n(src.example(idx[r]), src.cols, out.features.data() + r * out.cols);
        out.labels[r] = src.labels[idx[r]];
    }
    return out;
}

}  // namespace

std::pair<DatasetSplit, DatasetSplit> holdout_split(const DatasetSplit& train,
                                                    double fraction, std::uint64_t seed) {
    if (train.rows == 0) throw data_error("holdout_split: empty input");
    if (!(fraction > 0.0 && fraction < 1.0))
        throw data_error("holdout_split: fraction must be in (0,1)");
    const auto val_count =
        static_cast<std::size_t>(std::ceil(static_cast<double>(train.rows) * fraction));
    std::vector<std::size_t> idx(train.rows);
    std::iota(idx.begin(), idx.end(), 0);
    SplitMix64 rng(seed);
    shuffle(idx, rng);
    std::vector<std::size_t> val_idx(idx.begin(), idx.begin() + val_count);
    std::vector<std::size_t> train_idx(idx.begin() + val_count, idx.end());
    return {take_rows(train, train_idx, Role::train),
            take_rows(train, val_idx, Role::validation)};
}

DatasetSplit subsample(const DatasetSplit& split, std::size_t count, std::uint64_t seed) {
    if (count == 0 || count >= split.rows) return split;
    std::vector<std::size_t> idx(split.rows);
    std::iota(idx.begin(), idx.end(), 0);
    SplitMix64 rng(seed);
    shuffle(idx, rng);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());  // keep file order within the sample
    return take_rows(split, idx, split.role);
}

void write_spiral_csv(const DatasetSplit& split, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error(path + ": cannot open for writing");
    out << "x,y,label\n";
    char buf[80];
    for (std::size_t i = 0; i < split.rows; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%d\n", split.features[i * 2],
                      split.features[i * 2 + 1], split.labels[i]);
        out << buf;
    }
}

std::pair<DatasetSplit, DatasetSplit> load_dataset_spec(const std::string& spec) {
    if (spec.rfind("mnist:", 0) == 0) {
        const std::string dir = spec.substr(6);
        DatasetSplit train = load_mnist(dir + "/train-images-idx3-ubyte",
                                        dir + "/train-labels-idx1-ubyte", Role::train);
        DatasetSplit test = load_mnist(dir + "/t10k-images-idx3-ubyte",
                                       dir + "/t10k-labels-idx1-ubyte", Role::test);
        return {std::move(train), std::move(test)};
    }
    if (spec.rfind("spiral:", 0) == 0) {
        // spiral:<seed>[:<t_max>[:<noise_variance>]]
        SpiralConfig config;
        std::istringstream rest(spec.substr(7));
        std::string token;
        try {
            if (!std::getline(rest, token, ':')) throw std::invalid_argument("seed");
            config.seed = std::stoull(token);
            if (std::getline(rest, token, ':')) config.t_max = std::stod(token);
            if (std::getline(rest, token, ':')) config.noise_variance = std::stod(token);
        } catch (const std::exception&) {
            throw data_error("dataset spec '" + spec +
                             "': expected spiral:<seed>[:<t_max>[:<noise_variance>]]");
        }
        if (!(config.t_max > 0.0) || !(config.noise_variance >= 0.0))
            throw data_error("dataset spec '" + spec + "': parameters must be positive");
        return generate_spirals(config);
    }
    throw data_error("unknown dataset spec '" + spec + "' (expected mnist:<dir> or spiral:<seed>)");
}

}  // namespace qrlab::data
