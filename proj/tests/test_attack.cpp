#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "qrlab/attack.hpp"
#include "qrlab/errors.hpp"
#include "qrlab/geometry.hpp"
#include "qrlab/net.hpp"
#include "qrlab/rng.hpp"

using namespace qrlab;
using doctest::Approx;

namespace {

data::DatasetSplit random_split(std::uint64_t seed, std::size_t rows, std::size_t cols,
                                int classes) {
    SplitMix64 rng(seed);
    data::DatasetSplit split;
    split.rows = rows;
    split.cols = cols;
    split.features.resize(rows * cols);
    split.labels.resize(rows);
    for (double& v : split.features) v = rng.uniform(0.0, 1.0);
    for (int& l : split.labels) l = static_cast<int>(rng.below(classes));
    split.bound_lo.assign(cols, 0.0);
    split.bound_hi.assign(cols, 1.0);
    return split;
}

nn::MlpNetwork one_neuron_net() {
    nn::MlpNetwork net = nn::make_network({2, 1}, nn::Activation::sigmoid,
                                          nn::OutputHead::sigmoid_bce, 1.0, {}, 1);
    net.shadow[0].w = {0.5, -0.5};
    net.shadow[0].b = {0.0};
    net.refresh_quantized();
    return net;
}

}  // namespace

TEST_CASE("eps grid helpers") {
    const std::vector<double> grid = attack::AttackConfig::default_grid();
    REQUIRE(grid.size() == 101);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == Approx(0.5).epsilon(1e-12));
    CHECK(grid[1] == Approx(0.005).epsilon(1e-12));
    CHECK_THROWS_AS(attack::make_eps_grid(0.0, 1.0, 0.0), data_error);
}

TEST_CASE("fgsm at eps=0 returns the input unchanged") {
    nn::MlpNetwork net = one_neuron_net();
    const std::vector<double> u = {0.3, -0.4};
    const std::vector<double> adv = attack::fgsm(net, u.data(), 1, 0.0);
    CHECK(adv == u);
}

TEST_CASE("fgsm hand example: u' = [-0.1, 0.1]") {
    nn::MlpNetwork net = one_neuron_net();
    const std::vector<double> u = {0.0, 0.0};
    const std::vector<double> adv = attack::fgsm(net, u.data(), 1, 0.1);
    CHECK(adv[0] == -0.1);
    CHECK(adv[1] == 0.1);
}

TEST_CASE("fgsm perturbation components lie in {-eps, 0, +eps}") {
    nn::MlpNetwork net = nn::make_network({6, 5, 3}, nn::Activation::sigmoid,
                                          nn::OutputHead::softmax_xent, 1.0, {}, 4);
    SplitMix64 rng(9);
    std::vector<double> u(6);
    for (double& v : u) v = rng.uniform(0.0, 1.0);
    const double eps = 0.03;
    const std::vector<double> adv = attack::fgsm(net, u.data(), 1, eps);
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = adv[i] - u[i];
        const bool in_set = std::abs(d - eps) < 1e-12 || std::abs(d + eps) < 1e-12 ||
                            std::abs(d) < 1e-12;
        CHECK(in_set);
    }
}

TEST_CASE("fgsm perturbation norms tie to the L2 conversion") {
    nn::MlpNetwork net = nn::make_network({8, 6, 2}, nn::Activation::sigmoid,
                                          nn::OutputHead::softmax_xent, 1.0, {}, 6);
    SplitMix64 rng(10);
    std::vector<double> u(8);
    for (double& v : u) v = rng.uniform(0.1, 0.9);
    const double eps = 0.02;
    const std::vector<double> adv = attack::fgsm(net, u.data(), 0, eps);
    double linf = 0.0, l2 = 0.0;
    int zero_components = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = std::abs(adv[i] - u[i]);
        linf = std::max(linf, d);
        l2 += d * d;
        if (d == 0.0) ++zero_components;
    }
    l2 = std::sqrt(l2);
    CHECK(linf == Approx(eps).epsilon(1e-12));
    CHECK(l2 <= geom::fgsm_to_l2(eps, 8) + 1e-12);
    if (zero_components == 0)
        CHECK(l2 == Approx(geom::fgsm_to_l2(eps, 8)).epsilon(1e-10));
}

TEST_CASE("fgsm ascends the loss to first order") {
    nn::MlpNetwork net = one_neuron_net();
    net.shadow[0].b = {0.2};
    net.refresh_quantized();
    const std::vector<double> u = {0.3, 0.4};
    const int label = 0;
    nn::Workspace ws;
    nn::forward(net, u.data(), ws);
    const double clean_loss = nn::loss_from_output(net, ws, label);
    const std::vector<double> adv = attack::fgsm(net, u.data(), label, 1e-4);
    nn::forward(net, adv.data(), ws);
    const double adv_loss = nn::loss_from_output(net, ws, label);
    CHECK(adv_loss >= clean_loss);
}

TEST_CASE("fgsm is deterministic") {
    nn::MlpNetwork net = nn::make_network({4, 3, 2}, nn::Activation::relu,
                                          nn::OutputHead::softmax_xent, 1.0, {}, 2);
    const std::vector<double> u = {0.1, 0.9, 0.4, 0.6};
    CHECK(attack::fgsm(net, u.data(), 1, 0.07) == attack::fgsm(net, u.data(), 1, 0.07));
}

TEST_CASE("fgsm propagates non-finite gradients as numeric errors") {
    nn::MlpNetwork net = one_neuron_net();
    net.shadow[0].w[0] = std::numeric_limits<double>::quiet_NaN();
    net.refresh_quantized();
    const std::vector<double> u = {0.1, 0.2};
    CHECK_THROWS_AS(attack::fgsm(net, u.data(), 1, 0.1), numeric_error);
}

TEST_CASE("sweep: eps=0 entry equals the clean accuracy bit-exactly") {
    const data::DatasetSplit split = random_split(3, 200, 4, 3);
    nn::MlpNetwork net = nn::make_network({4, 8, 3}, nn::Activation::relu,
                                          nn::OutputHead::softmax_xent, 1.0, {}, 5);
    attack::AttackConfig config;
    config.eps_grid = {0.0, 0.1, 0.3};
    const attack::SweepCurve curve = attack::attack_sweep(net, split, config);
    CHECK(curve.accuracy[0] == nn::evaluate(net, split));
    CHECK(curve.total == 200);
    CHECK(curve.correct.size() == 3);
}

TEST_CASE("sweep on random labels stays at chance level") {
    const data::DatasetSplit split = random_split(11, 2000, 5, 10);
    // Untrained constant model: zero parameters, so the attack has no
    // gradient to follow and the curve sits at chance everywhere.
    nn::MlpNetwork net = nn::make_network({5, 10, 10}, nn::Activation::sigmoid,
                                          nn::OutputHead::softmax_xent, 1.0, {}, 23);
    for (auto& layer : net.shadow) {
        std::fill(layer.w.begin(), layer.w.end(), 0.0);
        std::fill(layer.b.begin(), layer.b.end(), 0.0);
    }
    net.refresh_quantized();
    attack::AttackConfig config;
    config.eps_grid = {0.0, 0.05, 0.2, 0.5};
    const attack::SweepCurve curve = attack::attack_sweep(net, split, config);
    for (double acc : curve.accuracy) {
        CHECK(acc > 0.05);
        CHECK(acc < 0.15);
    }

    // A randomly initialized net is also at chance before any perturbation.
    nn::MlpNetwork random_net = nn::make_network({5, 10, 10}, nn::Activation::sigmoid,
                                                 nn::OutputHead::softmax_xent, 1.0, {}, 23);
    const attack::SweepCurve clean = attack::attack_sweep(random_net, split, config);
    CHECK(clean.accuracy[0] > 0.05);
    CHECK(clean.accuracy[0] < 0.15);
}

TEST_CASE("sweep is independent of the worker count") {
    const data::DatasetSplit split = random_split(7, 301, 4, 2);
    nn::MlpNetwork net = nn::make_network({4, 6, 2}, nn::Activation::sigmoid,
                                          nn::OutputHead::softmax_xent, 1.0, {}, 13);
    attack::AttackConfig one;
    one.eps_grid = attack::make_eps_grid(0.0, 0.2, 0.02);
    one.workers = 1;
    attack::AttackConfig four = one;
    four.workers = 4;
    const attack::SweepCurve c1 = attack::attack_sweep(net, split, one);
    const attack::SweepCurve c4 = attack::attack_sweep(net, split, four);
    CHECK(c1.correct == c4.correct);
    CHECK(c1.accuracy == c4.accuracy);
}

TEST_CASE("sweep validates its grid and inputs") {
    const data::DatasetSplit split = random_split(7, 10, 4, 2);
    nn::MlpNetwork net = nn::make_network({4, 3, 2}, nn::Activation::relu,
                                          nn::OutputHead::softmax_xent, 1.0, {}, 1);
    attack::AttackConfig config;
    config.eps_grid = {0.1, 0.2};  // must start at 0
    CHECK_THROWS_AS(attack::attack_sweep(net, split, config), data_error);
    config.eps_grid = {0.0, 0.2, 0.1};  // must ascend
    CHECK_THROWS_AS(attack::attack_sweep(net, split, config), data_error);
    config.eps_grid = {0.0};
    CHECK_THROWS_AS(attack::attack_sweep(net, data::DatasetSplit{}, config), data_error);
}

TEST_CASE("clip_to_domain keeps adversarial inputs inside the box") {
    const data::DatasetSplit split = random_split(19, 50, 3, 2);
    nn::MlpNetwork net = nn::make_network({3, 5, 2}, nn::Activation::sigmoid,
                                          nn::OutputHead::softmax_xent, 1.0, {}, 3);
    // With clipping, perturbed features of an in-domain input stay in [0,1];
    // exercised through fgsm's box arguments.
    for (std::size_t i = 0; i < split.rows; ++i) {
        const std::vector<double> adv =
            attack::fgsm(net, split.example(i), split.labels[i], 0.4,
                         split.bound_lo.data(), split.bound_hi.data());
        for (double v : adv) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}
