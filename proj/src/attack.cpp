#include "qrlab/attack.hpp"

#include <cmath>
#include <mutex>
#include <thread>

#include "qrlab/errors.hpp"
#include "qrlab/kernels.hpp"

namespace qrlab::attack {

std::vector<double> make_eps_grid(double start, double stop, double step) {
    if (step <= 0.0) throw data_error("eps grid: step must be > 0");
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        double eps = start + i * step;
        if (eps > stop + step * 1e-9) break;
        grid.push_back(eps);
    }
    return grid;
}

std::vector<double> AttackConfig::default_grid() { return make_eps_grid(0.0, 0.5, 0.005); }

namespace {

void validate_grid(const std::vector<double>& grid) {
    if (grid.empty() || grid.front() != 0.0)
        throw data_error("attack: eps grid must start at 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] < grid[i - 1]) throw data_error("attack: eps grid must be ascending");
}

void input_gradient(const nn::MlpNetwork& net, const double* input, int label,
                    nn::Workspace& ws, nn::Gradients& grads) {
    forward(net, input, ws);
    grads.clear();
    backward(net, input, label, ws, grads, /*want_input_grad=*/true);
    double sum = 0.0;
    for (double g : grads.input) sum += g;
    if (!std::isfinite(sum)) throw numeric_error("fgsm: non-finite input gradient");
}

}  // namespace

std::vector<double> fgsm(const nn::MlpNetwork& net, const double* input, int label,
                         double eps, const double* lo, const double* hi) {
    const std::size_t n = net.input_dim();
    nn::Workspace ws;
    nn::Gradients grads;
    grads.resize_for(net);
    input_gradient(net, input, label, ws, grads);
    std::vector<double> out(n);
    kern::fgsm_apply(input, grads.input.data(), out.data(), n, eps);
    if (lo && hi)
        for (std::size_t i = 0; i < n; ++i) {
            if (out[i] < lo[i]) out[i] = lo[i];
            if (out[i] > hi[i]) out[i] = hi[i];
        }
    return out;
}

SweepCurve attack_sweep(const nn::MlpNetwork& net, const data::DatasetSplit& split,
                        const AttackConfig& config) {
    validate_grid(config.eps_grid);
    if (split.rows == 0) throw data_error("attack_sweep: empty split");
    if (split.cols != net.input_dim()) throw data_error("attack_sweep: dimension mismatch");

    const std::size_t num_eps = config.eps_grid.size();
    int workers = config.workers < 1 ? 1 : config.workers;
    if (static_cast<std::size_t>(workers) > split.rows)
        workers = static_cast<int>(split.rows);

    std::vector<std::vector<std::uint64_t>> partial(
        workers, std::vector<std::uint64_t>(num_eps, 0));
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto run_range = [&](int w, std::size_t begin, std::size_t end) {
        try {
            nn::Workspace ws;
            ws.resize_for(net);
            nn::Gradients grads;
            grads.resize_for(net);
            std::vector<double> perturbed(split.cols);
            std::vector<std::uint64_t>& counts = partial[w];
            for (std::size_t i = begin; i < end; ++i) {
                const double* x = split.example(i);
                const int label = split.labels[i];
                input_gradient(net, x, label, ws, grads);
                const int clean_prediction = nn::predict_from_output(net, ws);
                for (std::size_t e = 0; e < num_eps; ++e) {
                    int prediction;
                    if (config.eps_grid[e] == 0.0) {
                        prediction = clean_prediction;
                    } else {
                        kern::fgsm_apply(x, grads.input.data(), perturbed.data(), split.cols,
                                         config.eps_grid[e]);
                        if (config.clip_to_domain && !split.bound_lo.empty())
                            for (std::size_t j = 0; j < split.cols; ++j) {
                                if (perturbed[j] < split.bound_lo[j])
                                    perturbed[j] = split.bound_lo[j];
                                if (perturbed[j] > split.bound_hi[j])
                                    perturbed[j] = split.bound_hi[j];
                            }
                        prediction = nn::predict(net, perturbed.data(), ws);
                    }
                    if (prediction == label) ++counts[e];
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    if (workers == 1) {
        run_range(0, 0, split.rows);
    } else {
        const std::size_t chunk = (split.rows + workers - 1) / workers;
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            const std::size_t begin = static_cast<std::size_t>(w) * chunk;
            if (begin >= split.rows) break;
            pool.emplace_back(run_range, w, begin, std::min(split.rows, begin + chunk));
        }
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    SweepCurve curve;
    curve.eps = config.eps_grid;
    curve.total = split.rows;
    curve.correct.assign(num_eps, 0);
    for (const auto& counts : partial)
        for (std::size_t e = 0; e < num_eps; ++e) curve.correct[e] += counts[e];
    curve.accuracy.resize(num_eps);
    for (std::size_t e = 0; e < num_eps; ++e)
        curve.accuracy[e] =
            static_cast<double>(curve.correct[e]) / static_cast<double>(curve.total);
    return curve;
}

}  // namespace qrlab::attack
