#include "qrlab/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "qrlab/errors.hpp"
#include "qrlab/geometry.hpp"
#include "qrlab/kernels.hpp"
#include "qrlab/rng.hpp"

namespace fs = std::filesystem;

namespace qrlab::harness {

std::string bits_label(int bits) { return bits == 0 ? "full" : std::to_string(bits); }

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string canonical_config(const GridConfig& c) {
    std::ostringstream os;
    os << "dataset=" << c.dataset_spec << ";bits=";
    for (int b : c.bits_list) os << bits_label(b) << ",";
    os << ";acts=";
    for (auto a : c.activations) os << nn::to_string(a) << ",";
    os << ";seeds=";
    for (auto s : c.seeds) os << s << ",";
    os << ";eps=";
    for (double e : c.eps_grid) os << fmt17(e) << ",";
    os << ";hidden=" << c.hidden_units << ";gain=" << fmt17(c.hidden_gain)
       << ";grid=" << (c.grid_mode == nn::GridMode::span ? "span" : "cell")
       << ";clip=" << (c.clip_to_domain ? 1 : 0) << ";sub_train=" << c.subsample_train
       << ";sub_test=" << c.subsample_test << ";epochs=" << c.train.max_epochs
       << ";batch=" << c.train.batch_size << ";alpha=" << fmt17(c.train.alpha)
       << ";beta1=" << fmt17(c.train.beta1) << ";beta2=" << fmt17(c.train.beta2)
       << ";eps_hat=" << fmt17(c.train.epsilon) << ";patience=" << c.train.patience
       << ";valfrac=" << fmt17(c.train.validation_fraction)
       << ";backend=" << kern::backend_name();
    return os.str();
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string cell_filename(nn::Activation act, int bits, std::uint64_t seed) {
    std::ostringstream os;
    os << "cell_" << nn::to_string(act) << "_" << bits_label(bits) << "_s" << seed << ".csv";
    return os.str();
}

// Fixed internal streams for the deterministic dataset subsample.
constexpr std::uint64_t kSubsampleRoot = 0x5AB5A;

struct LoadedDataset {
    data::DatasetSplit train;
    data::DatasetSplit test;
    std::size_t input_dim;
    int classes;
};

LoadedDataset load_for_grid(const GridConfig& config) {
    auto [train, test] = data::load_dataset_spec(config.dataset_spec);
    if (config.subsample_train)
        train = data::subsample(train, config.subsample_train, derive_stream(kSubsampleRoot, 0));
    if (config.subsample_test)
        test = data::subsample(test, config.subsample_test, derive_stream(kSubsampleRoot, 1));
    LoadedDataset out{std::move(train), std::move(test), 0, 0};
    out.input_dim = out.train.cols;
    out.classes = std::max(out.train.num_classes(), out.test.num_classes());
    return out;
}

struct CellResult {
    bool failed = false;
    std::string error;
    attack::SweepCurve curve;
};

CellResult run_cell(const GridConfig& config, const LoadedDataset& ds, nn::Activation act,
                    int bits, std::uint64_t seed, std::size_t act_index) {
    const CellStreams streams = cell_streams(seed, bits, act_index);
    nn::QuantScheme quant{bits, config.grid_mode};
    const bool binary_task = ds.classes <= 2;
    std::vector<std::size_t> dims{ds.input_dim, static_cast<std::size_t>(config.hidden_units),
                                  binary_task ? 1 : static_cast<std::size_t>(ds.classes)};
    nn::MlpNetwork net = nn::make_network(
        dims, act, binary_task ? nn::OutputHead::sigmoid_bce : nn::OutputHead::softmax_xent,
        config.hidden_gain, quant, streams.init_seed);

    nn::TrainConfig train_config = config.train;
    train_config.seed = streams.train_seed;

    CellResult result;
    try {
        auto [train_part, val_part] = data::holdout_split(
            ds.train, train_config.validation_fraction, streams.holdout_seed);
        nn::train(net, train_part, val_part, train_config);
        attack::AttackConfig attack_config;
        attack_config.eps_grid = config.eps_grid;
        attack_config.clip_to_domain = config.clip_to_domain;
        attack_config.workers = 1;  // the grid parallelizes over cells
        result.curve = attack::attack_sweep(net, ds.test, attack_config);
    } catch (const numeric_error& e) {
        result.failed = true;
        result.error = e.what();
    }
    return result;
}

void write_cell_file(const fs::path& path, const GridConfig& config, const std::string& hash,
                     nn::Activation act, int bits, std::uint64_t seed,
                     const CellResult& result, std::size_t n) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw data_error(tmp.string() + ": cannot open for writing");
        out << "# qrlab-cell v1\n";
        out << "# hash=" << hash << "\n";
        out << "# dataset=" << config.dataset_spec << " activation=" << nn::to_string(act)
            << " bits=" << bits_label(bits) << " seed=" << seed << "\n";
        out << "# status=" << (result.failed ? "failed" : "ok") << "\n";
        if (result.failed) {
            out << "# error=" << result.error << "\n";
        } else {
            out << "eps_fgsm,eps_l2,accuracy,n_correct,n_total\n";
            for (std::size_t e = 0; e < result.curve.eps.size(); ++e) {
                out << fmt17(result.curve.eps[e]) << ","
                    << fmt17(geom::fgsm_to_l2(result.curve.eps[e], static_cast<int>(n))) << ","
                    << fmt17(result.curve.accuracy[e]) << "," << result.curve.correct[e] << ","
                    << result.curve.total << "\n";
            }
        }
        if (!out) throw data_error(tmp.string() + ": write failed");
    }
    fs::rename(tmp, path);
}

std::string read_meta_value(const std::string& line, const char* key) {
    const std::string prefix = std::string(key) + "=";
    if (line.rfind(prefix, 0) != 0) return {};
    return line.substr(prefix.size());
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string token;
    std::istringstream is(s);
    while (std::getline(is, token, ',')) {
        if (!token.empty()) out.push_back(token);
    }
    return out;
}

}  // namespace

std::string config_hash(const GridConfig& config) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(canonical_config(config))));
    return buf;
}

CellStreams cell_streams(std::uint64_t seed, int bits, std::size_t act_index) {
    const std::uint64_t master =
        derive_stream(derive_stream(seed, 1000 + static_cast<std::uint64_t>(bits)), act_index);
    return CellStreams{derive_stream(master, 1), derive_stream(master, 2),
                       derive_stream(master, 3)};
}

double AccuracySurface::value(std::size_t act, std::size_t bits, std::size_t seed,
                              std::size_t eps) const {
    return values[((act * bits_list.size() + bits) * seeds.size() + seed) * eps_grid.size() +
                  eps];
}

double& AccuracySurface::value(std::size_t act, std::size_t bits, std::size_t seed,
                               std::size_t eps) {
    return values[((act * bits_list.size() + bits) * seeds.size() + seed) * eps_grid.size() +
                  eps];
}

double AccuracySurface::mean_accuracy(std::size_t act, std::size_t bits,
                                      std::size_t eps) const {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        double v = value(act, bits, s, eps);
        if (std::isnan(v)) continue;
        sum += v;
        ++count;
    }
    return count == 0 ? kNaN : sum / static_cast<double>(count);
}

std::optional<std::size_t> AccuracySurface::bits_index(int bits) const {
    for (std::size_t i = 0; i < bits_list.size(); ++i)
        if (bits_list[i] == bits) return i;
    return std::nullopt;
}

std::optional<std::size_t> AccuracySurface::eps_index(double eps) const {
    for (std::size_t i = 0; i < eps_grid.size(); ++i)
        if (std::abs(eps_grid[i] - eps) < 1e-12) return i;
    return std::nullopt;
}

AccuracySurface run_grid(const GridConfig& config) {
    if (config.out_dir.empty()) throw data_error("run_grid: out_dir is required");
    if (config.eps_grid.empty() || config.eps_grid.front() != 0.0)
        throw data_error("run_grid: eps grid must start at 0");

    const std::string hash = config_hash(config);
    const fs::path dir(config.out_dir);
    const fs::path cells = dir / "cells";
    fs::create_directories(cells);

    const LoadedDataset ds = load_for_grid(config);

    const fs::path meta_path = dir / "meta.txt";
    if (fs::exists(meta_path)) {
        std::ifstream in(meta_path);
        std::string line, existing;
        while (std::getline(in, line)) {
            std::string v = read_meta_value(line, "hash");
            if (!v.empty()) existing = v;
        }
        if (existing != hash)
            throw data_error("run_grid: " + meta_path.string() +
                             " was produced by a different configuration (hash " + existing +
                             " != " + hash + "); use a fresh out_dir");
    } else {
        std::ofstream meta(meta_path);
        meta << "qrlab-surface v1\n";
        meta << "hash=" << hash << "\n";
        meta << "dataset=" << config.dataset_spec << "\n";
        meta << "input_dim=" << ds.input_dim << "\n";
        meta << "backend=" << kern::backend_name() << "\n";
        std::string sep;
        meta << "eps=";
        for (double e : config.eps_grid) { meta << sep << fmt17(e); sep = ","; }
        meta << "\nbits=";
        sep.clear();
        for (int b : config.bits_list) { meta << sep << bits_label(b); sep = ","; }
        meta << "\nactivations=";
        sep.clear();
        for (auto a : config.activations) { meta << sep << nn::to_string(a); sep = ","; }
        meta << "\nseeds=";
        sep.clear();
        for (auto s : config.seeds) { meta << sep << s; sep = ","; }
        meta << "\n";
    }

    struct Job {
        std::size_t act_index;
        nn::Activation act;
        int bits;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (std::size_t a = 0; a < config.activations.size(); ++a)
        for (int bits : config.bits_list)
            for (std::uint64_t seed : config.seeds) {
                const fs::path cell = cells / cell_filename(config.activations[a], bits, seed);
                if (!fs::exists(cell)) jobs.push_back({a, config.activations[a], bits, seed});
            }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= jobs.size()) return;
            const Job& job = jobs[j];
            try {
                CellResult result =
                    run_cell(config, ds, job.act, job.bits, job.seed, job.act_index);
                write_cell_file(cells / cell_filename(job.act, job.bits, job.seed), config,
                                hash, job.act, job.bits, job.seed, result, ds.input_dim);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(jobs.size())));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    return load_surface(config.out_dir);
}

AccuracySurface load_surface(const std::string& dir) {
    const fs::path meta_path = fs::path(dir) / "meta.txt";
    std::ifstream meta(meta_path);
    if (!meta) throw data_error(meta_path.string() + ": cannot open (not a grid directory?)");

    AccuracySurface surface;
    std::string line;
    while (std::getline(meta, line)) {
        if (auto v = read_meta_value(line, "hash"); !v.empty()) surface.hash = v;
        if (auto v = read_meta_value(line, "dataset"); !v.empty()) surface.dataset_id = v;
        if (auto v = read_meta_value(line, "input_dim"); !v.empty())
            surface.input_dim = std::stoull(v);
        if (auto v = read_meta_value(line, "eps"); !v.empty())
            for (const std::string& tok : split_commas(v))
                surface.eps_grid.push_back(std::strtod(tok.c_str(), nullptr));
        if (auto v = read_meta_value(line, "bits"); !v.empty())
            for (const std::string& tok : split_commas(v))
                surface.bits_list.push_back(tok == "full" ? 0 : std::stoi(tok));
        if (auto v = read_meta_value(line, "activations"); !v.empty())
            for (const std::string& tok : split_commas(v))
                surface.activations.push_back(nn::activation_from_string(tok));
        if (auto v = read_meta_value(line, "seeds"); !v.empty())
            for (const std::string& tok : split_commas(v))
                surface.seeds.push_back(std::stoull(tok));
    }
    if (surface.eps_grid.empty() || surface.bits_list.empty() || surface.activations.empty() ||
        surface.seeds.empty())
        throw data_error(meta_path.string() + ": incomplete surface metadata");

    surface.values.assign(surface.activations.size() * surface.bits_list.size() *
                              surface.seeds.size() * surface.eps_grid.size(),
                          kNaN);

    for (std::size_t a = 0; a < surface.activations.size(); ++a)
        for (std::size_t b = 0; b < surface.bits_list.size(); ++b)
            for (std::size_t s = 0; s < surface.seeds.size(); ++s) {
                const fs::path cell =
                    fs::path(dir) / "cells" /
                    cell_filename(surface.activations[a], surface.bits_list[b],
                                  surface.seeds[s]);
                std::ifstream in(cell);
                if (!in)
                    throw data_error(cell.string() +
                                     ": missing cell (grid incomplete; rerun grid)");
                bool failed = false;
                std::size_t eps_index = 0;
                while (std::getline(in, line)) {
                    if (line.rfind("# hash=", 0) == 0 && line.substr(7) != surface.hash)
                        throw data_error(cell.string() + ": cell hash mismatch");
                    if (line.rfind("# status=failed", 0) == 0) failed = true;
                    if (line.empty() || line[0] == '#' || line[0] == 'e') continue;
                    const char* p = line.c_str();
                    char* end = nullptr;
                    const double eps = std::strtod(p, &end);
                    if (end == p || *end != ',') throw data_error(cell.string() + ": bad row");
                    p = end + 1;
                    std::strtod(p, &end);  // eps_l2, recomputable
                    p = end + 1;
                    const double acc = std::strtod(p, &end);
                    if (eps_index >= surface.eps_grid.size() ||
                        std::abs(eps - surface.eps_grid[eps_index]) > 1e-15)
                        throw data_error(cell.string() + ": eps grid mismatch");
                    surface.value(a, b, s, eps_index) = acc;
                    ++eps_index;
                }
                if (!failed && eps_index != surface.eps_grid.size())
                    throw data_error(cell.string() + ": truncated cell");
            }
    return surface;
}

namespace {

CriticalStrengthReport critical_strength_over(const AccuracySurface& surface,
                                              const std::vector<std::size_t>& acts) {
    std::vector<std::size_t> quantized;
    for (std::size_t b = 0; b < surface.bits_list.size(); ++b)
        if (surface.bits_list[b] > 0) quantized.push_back(b);
    if (quantized.size() < 2)
        throw data_error("critical_strength: need at least 2 quantized bits levels");

    CriticalStrengthReport report;
    double best_var = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < surface.eps_grid.size(); ++e) {
        double sum = 0.0, sum_sq = 0.0;
        std::size_t count = 0;
        for (std::size_t b : quantized) {
            double acc_sum = 0.0;
            std::size_t acc_count = 0;
            for (std::size_t a : acts) {
                const double m = surface.mean_accuracy(a, b, e);
                if (std::isnan(m)) continue;
                acc_sum += m;
                ++acc_count;
            }
            if (acc_count == 0) continue;
            const double m = acc_sum / static_cast<double>(acc_count);
            sum += m;
            sum_sq += m * m;
            ++count;
        }
        double var = kNaN;
        if (count >= 2) {
            const double mean = sum / static_cast<double>(count);
            var = sum_sq / static_cast<double>(count) - mean * mean;
            if (var < 0.0) var = 0.0;  // rounding
        }
        report.variance_by_eps.emplace_back(surface.eps_grid[e], var);
        if (!std::isnan(var) && var < best_var) {
            best_var = var;
            report.eps_critical = surface.eps_grid[e];
        }
    }
    if (!std::isfinite(best_var))
        throw data_error("critical_strength: no usable eps level (all cells failed?)");
    report.eps_l2_critical =
        geom::fgsm_to_l2(report.eps_critical, static_cast<int>(surface.input_dim));
    return report;
}

}  // namespace

CriticalStrengthReport critical_strength(const AccuracySurface& surface) {
    std::vector<std::size_t> acts(surface.activations.size());
    for (std::size_t a = 0; a < acts.size(); ++a) acts[a] = a;
    return critical_strength_over(surface, acts);
}

CriticalStrengthReport critical_strength(const AccuracySurface& surface,
                                         nn::Activation activation) {
    for (std::size_t a = 0; a < surface.activations.size(); ++a)
        if (surface.activations[a] == activation) return critical_strength_over(surface, {a});
    throw data_error("critical_strength: activation not in surface");
}

RelAccCurves relative_accuracy_curves(const AccuracySurface& surface,
                                      nn::Activation activation) {
    std::size_t act = surface.activations.size();
    for (std::size_t a = 0; a < surface.activations.size(); ++a)
        if (surface.activations[a] == activation) act = a;
    if (act == surface.activations.size())
        throw data_error("relative_accuracy_curves: activation not in surface");

    RelAccCurves curves;
    curves.activation = activation;
    curves.eps_fgsm = surface.eps_grid;
    for (double e : surface.eps_grid)
        curves.eps_l2.push_back(geom::fgsm_to_l2(e, static_cast<int>(surface.input_dim)));
    curves.bits = surface.bits_list;

    for (std::size_t b = 0; b < surface.bits_list.size(); ++b) {
        std::vector<double> measured(surface.eps_grid.size(), kNaN);
        const double clean = surface.mean_accuracy(act, b, 0);
        if (!std::isnan(clean) && clean > 0.0)
            for (std::size_t e = 0; e < surface.eps_grid.size(); ++e)
                measured[e] = surface.mean_accuracy(act, b, e) / clean;
        curves.measured.push_back(std::move(measured));

        std::vector<double> bound;
        if (surface.bits_list[b] > 0) {
            bound.resize(surface.eps_grid.size());
            for (std::size_t e = 0; e < surface.eps_grid.size(); ++e)
                bound[e] = geom::relative_accuracy_bound(
                    curves.eps_l2[e], static_cast<int>(surface.input_dim),
                    surface.bits_list[b]);
        }
        curves.bound.push_back(std::move(bound));
    }
    return curves;
}

std::vector<NonMonotonicCell> detect_nonmonotonic(const AccuracySurface& surface) {
    std::vector<NonMonotonicCell> flagged;
    if (surface.eps_grid.size() < 3) return flagged;
    for (std::size_t a = 0; a < surface.activations.size(); ++a)
        for (std::size_t b = 0; b < surface.bits_list.size(); ++b) {
            bool found = false;
            for (std::size_t e1 = 0; e1 + 1 < surface.eps_grid.size() && !found; ++e1) {
                const double low = surface.mean_accuracy(a, b, e1);
                if (std::isnan(low) || low >= 0.05) continue;
                for (std::size_t e2 = e1 + 1; e2 < surface.eps_grid.size(); ++e2) {
                    const double later = surface.mean_accuracy(a, b, e2);
                    if (!std::isnan(later) && later >= low + 0.10) {
                        flagged.push_back({surface.bits_list[b], surface.activations[a],
                                           surface.eps_grid[e1], low, surface.eps_grid[e2],
                                           later});
                        found = true;
                        break;
                    }
                }
            }
        }
    return flagged;
}

}  // namespace qrlab::harness
