// qrlab command-line interface.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "qrlab/attack.hpp"
#include "qrlab/checkpoint.hpp"
#include "qrlab/dataset.hpp"
#include "qrlab/errors.hpp"
#include "qrlab/geometry.hpp"
#include "qrlab/harness.hpp"
#include "qrlab/kernels.hpp"
#include "qrlab/montecarlo.hpp"
#include "qrlab/net.hpp"
#include "qrlab/runconfig.hpp"

namespace {

using namespace qrlab;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int env_workers() {
    if (const char* env = std::getenv("QRLAB_WORKERS")) {
        int w = std::atoi(env);
        if (w >= 1) return w;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw data_error(path + ": cannot open for writing");
    return file;
}

void cmd_geometry(int n, int q, double start, double stop, double step,
                  const std::string& out_path) {
    std::ofstream file;
    std::ostream& out = open_output(file, out_path);
    const geom::MarginModel model = geom::make_margin_model(n, q);
    out << "# n=" << n << " q=" << q << " h=" << fmt17(model.h)
        << " mean_exact=" << fmt17(model.mean_exact)
        << " mean_approx=" << fmt17(model.mean_approx) << "\n";
    out << "eps_l2,pdf,cdf,bound\n";
    for (double eps : attack::make_eps_grid(start, stop, step))
        out << fmt17(eps) << "," << fmt17(geom::distance_pdf(eps, n, model.h)) << ","
            << fmt17(geom::distance_cdf(eps, n, model.h)) << ","
            << fmt17(geom::relative_accuracy_bound(eps, n, q)) << "\n";
}

void cmd_montecarlo(int n, int q, std::size_t samples, int bins, std::uint64_t seed,
                    int workers, const std::string& out_path) {
    const mc::Histogram hist = mc::empirical_distance_distribution(n, q, samples, bins, seed,
                                                                   workers);
    std::ofstream file;
    std::ostream& out = open_output(file, out_path);
    out << "# n=" << n << " q=" << q << " h=" << fmt17(hist.h) << " samples=" << hist.samples
        << " bins=" << bins << " seed=" << seed << " workers=" << hist.workers << "\n";
    out << "bin_left,bin_right,empirical_density,model_density\n";
    const double width = hist.bin_width();
    for (int b = 0; b < hist.bins(); ++b) {
        const double left = b * width;
        const double right = (b + 1) * width;
        const double model = (geom::distance_cdf(right, n, hist.h) -
                              geom::distance_cdf(left, n, hist.h)) /
                             width;
        out << fmt17(left) << "," << fmt17(right) << "," << fmt17(hist.density[b]) << ","
            << fmt17(model) << "\n";
    }
}

struct TrainArgs {
    std::string dataset;
    std::string bits = "full";
    std::string activation = "relu";
    std::uint64_t seed = 1;
    int hidden = 100;
    double gain = 1.0;
    int epochs = 200;
    int batch = 64;
    int patience = 10;
    double alpha = 1e-3;
    std::string grid_mode = "span";
    std::string out = "model.qrlb";
};

void cmd_train(const TrainArgs& args) {
    auto [train_full, test] = data::load_dataset_spec(args.dataset);
    nn::QuantScheme quant;
    quant.bits = args.bits == "full" ? 0 : std::stoi(args.bits);
    quant.mode = args.grid_mode == "cell" ? nn::GridMode::cell : nn::GridMode::span;

    const int classes = std::max(train_full.num_classes(), test.num_classes());
    const bool binary_task = classes <= 2;
    std::vector<std::size_t> dims{train_full.cols, static_cast<std::size_t>(args.hidden),
                                  binary_task ? 1 : static_cast<std::size_t>(classes)};
    nn::MlpNetwork net = nn::make_network(
        dims, nn::activation_from_string(args.activation),
        binary_task ? nn::OutputHead::sigmoid_bce : nn::OutputHead::softmax_xent, args.gain,
        quant, derive_stream(args.seed, 2));

    nn::TrainConfig config;
    config.max_epochs = args.epochs;
    config.batch_size = args.batch;
    config.patience = args.patience;
    config.alpha = args.alpha;
    config.seed = derive_stream(args.seed, 3);

    auto [train_part, val_part] =
        data::holdout_split(train_full, config.validation_fraction, derive_stream(args.seed, 1));
    const nn::History history = nn::train(net, train_part, val_part, config);

    nn::CheckpointMeta meta;
    meta.train_seed = args.seed;
    meta.best_epoch = history.best_epoch;
    meta.best_val_accuracy = history.best_val_accuracy;
    meta.dataset_id = args.dataset;
    nn::save_checkpoint(net, meta, args.out);

    std::cout << "trained " << args.dataset << " bits=" << args.bits << " act="
              << args.activation << " seed=" << args.seed << "\n";
    std::cout << "epochs=" << history.stopped_epoch << " best_epoch=" << history.best_epoch
              << " best_val_acc=" << fmt17(history.best_val_accuracy) << "\n";
    std::cout << "test_acc=" << fmt17(nn::evaluate(net, test)) << "\n";
    std::cout << "saved " << args.out << "\n";
}

void cmd_attack_sweep(const std::string& model_path, const std::string& dataset,
                      double start, double stop, double step, bool clip, int workers,
                      const std::string& out_path) {
    auto [net, meta] = nn::load_checkpoint(model_path);
    auto [train, test] = data::load_dataset_spec(dataset.empty() ? meta.dataset_id : dataset);
    (void)train;
    attack::AttackConfig config;
    config.eps_grid = attack::make_eps_grid(start, stop, step);
    config.clip_to_domain = clip;
    config.workers = workers;
    const attack::SweepCurve curve = attack::attack_sweep(net, test, config);

    std::ofstream file;
    std::ostream& out = open_output(file, out_path);
    out << "eps_fgsm,eps_l2,accuracy,n_correct,n_total\n";
    for (std::size_t e = 0; e < curve.eps.size(); ++e)
        out << fmt17(curve.eps[e]) << ","
            << fmt17(geom::fgsm_to_l2(curve.eps[e], static_cast<int>(test.cols))) << ","
            << fmt17(curve.accuracy[e]) << "," << curve.correct[e] << "," << curve.total
            << "\n";
}

void cmd_spiral_gen(std::uint64_t seed, int points, double noise_variance, bool normalize,
                    const std::string& out_dir) {
    data::SpiralConfig config;
    config.seed = seed;
    config.points_per_class = points;
    config.noise_variance = noise_variance;
    config.normalize = normalize;
    auto [train, test] = data::generate_spirals(config);
    std::filesystem::create_directories(out_dir);
    data::write_spiral_csv(train, out_dir + "/train.csv");
    data::write_spiral_csv(test, out_dir + "/test.csv");
    std::cout << "wrote " << out_dir << "/train.csv and " << out_dir << "/test.csv ("
              << train.rows << " + " << test.rows << " points)\n";
}

void cmd_grid(const std::string& config_path, const std::string& out_override, int workers) {
    harness::GridConfig config = harness::parse_run_config(config_path);
    if (!out_override.empty()) config.out_dir = out_override;
    if (config.out_dir.empty()) throw data_error("grid: out_dir missing (config or --out)");
    if (workers > 0) config.workers = workers;
    else if (config.workers <= 0) config.workers = env_workers();
    const harness::AccuracySurface surface = harness::run_grid(config);
    harness::emit_report(surface, config.out_dir);
    std::cout << "grid complete: " << surface.activations.size() << " activations x "
              << surface.bits_list.size() << " bits x " << surface.seeds.size() << " seeds x "
              << surface.eps_grid.size() << " eps -> " << config.out_dir << "\n";
}

void cmd_critical(const std::string& surface_dir, const std::string& out_path) {
    const harness::AccuracySurface surface = harness::load_surface(surface_dir);
    std::ofstream file;
    std::ostream& out = open_output(file, out_path);
    out << "activation,eps_critical,eps_l2_critical\n";
    const harness::CriticalStrengthReport pooled = harness::critical_strength(surface);
    out << "all," << fmt17(pooled.eps_critical) << "," << fmt17(pooled.eps_l2_critical)
        << "\n";
    if (surface.activations.size() > 1)
        for (nn::Activation act : surface.activations) {
            const harness::CriticalStrengthReport report =
                harness::critical_strength(surface, act);
            out << nn::to_string(act) << "," << fmt17(report.eps_critical) << ","
                << fmt17(report.eps_l2_critical) << "\n";
        }
}

void cmd_report(const std::string& surface_dir, const std::string& out_dir) {
    const harness::AccuracySurface surface = harness::load_surface(surface_dir);
    harness::emit_report(surface, out_dir.empty() ? surface_dir : out_dir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qrlab: quantized-MLP adversarial robustness laboratory"};
    app.require_subcommand(1);

    // geometry
    auto* geo = app.add_subcommand("geometry", "closed-form distance model as CSV");
    int geo_n = 784, geo_q = 1;
    double geo_start = 0.0, geo_stop = 0.8, geo_step = 0.005;
    std::string geo_out;
    geo->add_option("-n,--n", geo_n, "input dimensionality")->required();
    geo->add_option("-q,--q", geo_q, "weight bits")->required();
    geo->add_option("--eps-start", geo_start, "grid start (L2)");
    geo->add_option("--eps-stop", geo_stop, "grid stop (L2)");
    geo->add_option("--eps-step", geo_step, "grid step (L2)");
    geo->add_option("-o,--out", geo_out, "output CSV (default stdout)");

    // montecarlo
    auto* mc_cmd = app.add_subcommand("montecarlo", "empirical distance histogram as CSV");
    int mc_n = 2, mc_q = 2, mc_bins = 100, mc_workers = 0;
    std::size_t mc_samples = 1000000;
    std::uint64_t mc_seed = 20250101;
    std::string mc_out;
    mc_cmd->add_option("-n,--n", mc_n, "input dimensionality")->required();
    mc_cmd->add_option("-q,--q", mc_q, "weight bits")->required();
    mc_cmd->add_option("--samples", mc_samples, "sample count (default 1e6)");
    mc_cmd->add_option("--bins", mc_bins, "histogram bins (default 100)");
    mc_cmd->add_option("--seed", mc_seed, "RNG seed");
    mc_cmd->add_option("--workers", mc_workers, "worker threads (default QRLAB_WORKERS)");
    mc_cmd->add_option("-o,--out", mc_out, "output CSV (default stdout)");

    // train
    auto* train_cmd = app.add_subcommand("train", "train one quantized MLP");
    TrainArgs targs;
    train_cmd->add_option("--dataset", targs.dataset, "mnist:<dir> or spiral:<seed>")->required();
    train_cmd->add_option("--bits", targs.bits, "weight bits (1..30 or 'full')");
    train_cmd->add_option("--activation", targs.activation, "step|sigmoid|relu");
    train_cmd->add_option("--seed", targs.seed, "training seed");
    train_cmd->add_option("--hidden", targs.hidden, "hidden units (default 100)");
    train_cmd->add_option("--gain", targs.gain, "hidden pre-activation gain");
    train_cmd->add_option("--epochs", targs.epochs, "max epochs");
    train_cmd->add_option("--batch", targs.batch, "batch size");
    train_cmd->add_option("--patience", targs.patience, "early-stopping patience");
    train_cmd->add_option("--alpha", targs.alpha, "Adam step size");
    train_cmd->add_option("--grid-mode", targs.grid_mode, "span|cell weight grid");
    train_cmd->add_option("-o,--out", targs.out, "checkpoint path");

    // attack-sweep
    auto* sweep_cmd = app.add_subcommand("attack-sweep", "FGSM accuracy sweep for a checkpoint");
    std::string sweep_model, sweep_dataset, sweep_out;
    double sweep_start = 0.0, sweep_stop = 0.5, sweep_step = 0.005;
    bool sweep_clip = false;
    int sweep_workers = 0;
    sweep_cmd->add_option("--model", sweep_model, "checkpoint path")->required();
    sweep_cmd->add_option("--dataset", sweep_dataset, "dataset spec (default: from checkpoint)");
    sweep_cmd->add_option("--eps-start", sweep_start, "grid start");
    sweep_cmd->add_option("--eps-stop", sweep_stop, "grid stop");
    sweep_cmd->add_option("--eps-step", sweep_step, "grid step");
    sweep_cmd->add_flag("--clip", sweep_clip, "clip adversarial inputs to the data domain");
    sweep_cmd->add_option("--workers", sweep_workers, "worker threads");
    sweep_cmd->add_option("-o,--out", sweep_out, "output CSV (default stdout)");

    // spiral-gen
    auto* spiral_cmd = app.add_subcommand("spiral-gen", "generate the 2-spiral dataset CSVs");
    std::uint64_t spiral_seed = 1;
    int spiral_points = 200;
    double spiral_noise = 0.03;
    bool spiral_norm = false;
    std::string spiral_dir = "spiral_out";
    spiral_cmd->add_option("--seed", spiral_seed, "generator seed");
    spiral_cmd->add_option("--points", spiral_points, "points per class per split");
    spiral_cmd->add_option("--noise-variance", spiral_noise, "Gaussian noise variance");
    spiral_cmd->add_flag("--normalize", spiral_norm, "scale coordinates into [-1,1]");
    spiral_cmd->add_option("--out-dir", spiral_dir, "output directory");

    // grid
    auto* grid_cmd = app.add_subcommand("grid", "run a (bits x activation x seed) grid");
    std::string grid_config, grid_out;
    int grid_workers = 0;
    grid_cmd->add_option("--config", grid_config, "run-config file")->required();
    grid_cmd->add_option("--out", grid_out, "output directory (overrides config)");
    grid_cmd->add_option("--workers", grid_workers, "worker threads (default QRLAB_WORKERS)");

    // critical
    auto* crit_cmd = app.add_subcommand("critical", "critical attack strength of a grid");
    std::string crit_dir, crit_out;
    crit_cmd->add_option("--surface", crit_dir, "grid output directory")->required();
    crit_cmd->add_option("-o,--out", crit_out, "output CSV (default stdout)");

    // report
    auto* report_cmd = app.add_subcommand("report", "emit CSV tables and SVG plots for a grid");
    std::string report_dir, report_out;
    report_cmd->add_option("--surface", report_dir, "grid output directory")->required();
    report_cmd->add_option("--out", report_out, "report directory (default: surface dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*geo) cmd_geometry(geo_n, geo_q, geo_start, geo_stop, geo_step, geo_out);
        if (*mc_cmd)
            cmd_montecarlo(mc_n, mc_q, mc_samples, mc_bins, mc_seed,
                           mc_workers > 0 ? mc_workers : env_workers(), mc_out);
        if (*train_cmd) cmd_train(targs);
        if (*sweep_cmd)
            cmd_attack_sweep(sweep_model, sweep_dataset, sweep_start, sweep_stop, sweep_step,
                             sweep_clip, sweep_workers > 0 ? sweep_workers : env_workers(),
                             sweep_out);
        if (*spiral_cmd)
            cmd_spiral_gen(spiral_seed, spiral_points, spiral_noise, spiral_norm, spiral_dir);
        if (*grid_cmd) cmd_grid(grid_config, grid_out, grid_workers);
        if (*crit_cmd) cmd_critical(crit_dir, crit_out);
        if (*report_cmd) cmd_report(report_dir, report_out);
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::domain_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
