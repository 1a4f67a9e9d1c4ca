#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qrlab::data {

enum class Role { train, validation, test };

struct DatasetSplit {
    std::size_t rows = 0;
    std::size_t cols = 0;                 // feature dimension n
    std::vector<double> features;         // rows x cols, row-major
    std::vector<int> labels;
    Role role = Role::train;
    std::vector<double> bound_lo;         // per-feature domain bounds
    std::vector<double> bound_hi;

    const double* example(std::size_t i) const { return features.data() + i * cols; }
    int num_classes() const;
};

/// MNIST IDX pair (big-endian magic 2051/2049).  Pixels scaled to [0,1].
/// Malformed input raises data_error with the offending byte offset.
DatasetSplit load_mnist(const std::string& images_path, const std::string& labels_path,
                        Role role);

struct SpiralConfig {
    int points_per_class = 200;
    double t_max = 100.0;
    double radial_scale = 0.1;
    double noise_variance = 0.03;  // Gaussian, std = sqrt(0.03)
    std::uint64_t seed = 1;
    bool normalize = false;  // optional post-scale of both splits to [-1,1]
};

/// One spiral point: (sign*scale*t*cos t + nx, sign*scale*t*sin t + ny).
/// Class 0 takes sign +1, class 1 takes -1.
std::pair<double, double> spiral_point(int cls, double t, double noise_x, double noise_y,
                                       double radial_scale = 0.1);

/// Two interleaved noisy spirals; train and test use independent sub-seeds.
/// Per point the stream order is t, noise_x, noise_y.
std::pair<DatasetSplit, DatasetSplit> generate_spirals(const SpiralConfig& config);

/// Splits off ceil(rows * fraction) examples as a validation set, uniformly at
/// random; deterministic for a fixed seed.  Returns (train', validation).
std::pair<DatasetSplit, DatasetSplit> holdout_split(const DatasetSplit& train,
                                                    double fraction, std::uint64_t seed);

/// Deterministic seeded subsample of `count` examples (all if count == 0 or
/// count >= rows).
DatasetSplit subsample(const DatasetSplit& split, std::size_t count, std::uint64_t seed);

void write_spiral_csv(const DatasetSplit& split, const std::string& path);

/// Dataset spec strings: "mnist:<dir>" (standard IDX filenames inside) and
/// "spiral:<seed>".  Returns (train, test).
std::pair<DatasetSplit, DatasetSplit> load_dataset_spec(const std::string& spec);

}  // namespace qrlab::data
