#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qrlab/attack.hpp"
#include "qrlab/dataset.hpp"
#include "qrlab/net.hpp"

// Experiment orchestration: the (bits x activation x seed x attack-strength)
// grid, critical-attack-strength detection, relative-accuracy curves with
// model-bound overlays, and report emission.

namespace qrlab::harness {

// bits value 0 stands for full precision everywhere in this module.
std::string bits_label(int bits);

struct GridConfig {
    std::string dataset_spec;  // "mnist:<dir>" or "spiral:<seed>"
    std::vector<int> bits_list{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<nn::Activation> activations{nn::Activation::step, nn::Activation::sigmoid,
                                            nn::Activation::relu};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<double> eps_grid = attack::AttackConfig::default_grid();
    int hidden_units = 100;
    double hidden_gain = 1.0;
    nn::GridMode grid_mode = nn::GridMode::span;
    bool clip_to_domain = false;
    std::size_t subsample_train = 0;  // 0 = all
    std::size_t subsample_test = 0;
    nn::TrainConfig train;  // per-cell seeds derived from the seed axis
    std::string out_dir;
    int workers = 1;
};

/// FNV-1a hash of the canonical config string (includes the kernel backend;
/// cells computed under a different backend are not resumable).
std::string config_hash(const GridConfig& config);

/// Deterministic per-cell RNG streams derived from the seed axis.
struct CellStreams {
    std::uint64_t holdout_seed;
    std::uint64_t init_seed;
    std::uint64_t train_seed;
};
CellStreams cell_streams(std::uint64_t seed, int bits, std::size_t act_index);

struct AccuracySurface {
    std::string dataset_id;
    std::size_t input_dim = 0;
    std::vector<double> eps_grid;
    std::vector<int> bits_list;
    std::vector<nn::Activation> activations;
    std::vector<std::uint64_t> seeds;
    std::string hash;
    // Per-cell accuracy curves, NaN for failed cells.
    std::vector<double> values;  // [act][bits][seed][eps], flattened

    double value(std::size_t act, std::size_t bits, std::size_t seed, std::size_t eps) const;
    double& value(std::size_t act, std::size_t bits, std::size_t seed, std::size_t eps);
    /// Mean over seeds (skips NaN cells).
    double mean_accuracy(std::size_t act, std::size_t bits, std::size_t eps) const;
    std::optional<std::size_t> bits_index(int bits) const;
    std::optional<std::size_t> eps_index(double eps) const;
};

/// Trains and attacks one model per (bits, activation, seed) cell, persisting
/// each cell under out_dir/cells/ as it completes; cells already on disk with
/// a matching config hash are reused, so interrupted grids resume.  Failed
/// cells (training divergence) are recorded without aborting the grid.
AccuracySurface run_grid(const GridConfig& config);

/// Reassembles a surface from a persisted grid directory.
AccuracySurface load_surface(const std::string& dir);

struct CriticalStrengthReport {
    double eps_critical = 0.0;
    double eps_l2_critical = 0.0;
    std::vector<std::pair<double, double>> variance_by_eps;  // (eps, variance)
};

/// Attack strength whose accuracy-vs-bits curve has the smallest variance
/// (population variance, across quantized bits levels, of accuracy averaged
/// over seeds and activations; the full-precision column is excluded).  Ties
/// resolve to the smallest eps.
CriticalStrengthReport critical_strength(const AccuracySurface& surface);

/// Same measure restricted to one activation's curves.
CriticalStrengthReport critical_strength(const AccuracySurface& surface,
                                         nn::Activation activation);

struct RelAccCurves {
    nn::Activation activation;
    std::vector<double> eps_fgsm;
    std::vector<double> eps_l2;
    std::vector<int> bits;                      // row order
    std::vector<std::vector<double>> measured;  // A_r per bits; NaN when undefined
    std::vector<std::vector<double>> bound;     // model bound; empty row for full precision
};

/// A_r(eps) = acc(eps)/acc(0) per bits level plus the geometric lower bound
/// evaluated at eps_l2 = eps * sqrt(n).
RelAccCurves relative_accuracy_curves(const AccuracySurface& surface,
                                      nn::Activation activation);

struct NonMonotonicCell {
    int bits;
    nn::Activation activation;
    double eps_low;
    double acc_low;
    double eps_recover;
    double acc_recover;
};

/// Cells whose mean-accuracy curve falls below 5% and later recovers by at
/// least 10 points.
std::vector<NonMonotonicCell> detect_nonmonotonic(const AccuracySurface& surface);

/// Writes accuracy tables, critical-strength reports, relative-accuracy
/// tables with bound columns, the non-monotonicity report, and SVG plots.
/// Deterministic: re-emitting the same surface yields byte-identical files.
void emit_report(const AccuracySurface& surface, const std::string& out_dir);

}  // namespace qrlab::harness
