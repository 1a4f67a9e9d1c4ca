#include "qrlab/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "qrlab/errors.hpp"

namespace qrlab::nn {
namespace {

constexpr char kMagic[4] = {'Q', 'R', 'L', 'B'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
}

void put_u64(std::ofstream& out, std::uint64_t v) {
    put_u32(out, static_cast<std::uint32_t>(v));
    put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_f64(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

std::uint32_t get_u32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw data_error(path + ": truncated checkpoint");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

std::uint64_t get_u64(std::ifstream& in, const std::string& path) {
    std::uint64_t lo = get_u32(in, path);
    std::uint64_t hi = get_u32(in, path);
    return lo | (hi << 32);
}

double get_f64(std::ifstream& in, const std::string& path) {
    std::uint64_t bits = get_u64(in, path);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void save_checkpoint(const MlpNetwork& net, const CheckpointMeta& meta,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error(path + ": cannot open for writing");
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(net.layer_dims.size()));
    for (std::size_t d : net.layer_dims) put_u32(out, static_cast<std::uint32_t>(d));
    put_u32(out, static_cast<std::uint32_t>(net.hidden_activation));
    put_u32(out, static_cast<std::uint32_t>(net.output_head));
    put_u32(out, static_cast<std::uint32_t>(net.quant.mode));
    put_u32(out, static_cast<std::uint32_t>(net.quant.bits));
    put_f64(out, net.hidden_gain);
    put_u64(out, meta.train_seed);
    put_u32(out, static_cast<std::uint32_t>(meta.best_epoch));
    put_f64(out, meta.best_val_accuracy);
    put_u32(out, static_cast<std::uint32_t>(meta.dataset_id.size()));
    out.write(meta.dataset_id.data(), static_cast<std::streamsize>(meta.dataset_id.size()));
    for (const LayerParams& l : net.shadow) {
        for (double w : l.w) put_f64(out, w);
        for (double b : l.b) put_f64(out, b);
    }
    if (!out) throw data_error(path + ": write failed");
}

std::pair<MlpNetwork, CheckpointMeta> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error(path + ": cannot open");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw data_error(path + ": not a qrlab checkpoint (bad magic)");
    const std::uint32_t version = get_u32(in, path);
    if (version != kVersion)
        throw data_error(path + ": unsupported checkpoint version " + std::to_string(version));

    const std::uint32_t num_dims = get_u32(in, path);
    if (num_dims < 2 || num_dims > 64) throw data_error(path + ": corrupt layer count");
    std::vector<std::size_t> dims(num_dims);
    for (auto& d : dims) d = get_u32(in, path);

    const auto activation = static_cast<Activation>(get_u32(in, path));
    const auto head = static_cast<OutputHead>(get_u32(in, path));
    QuantScheme quant;
    quant.mode = static_cast<GridMode>(get_u32(in, path));
    quant.bits = static_cast<int>(get_u32(in, path));
    const double gain = get_f64(in, path);

    CheckpointMeta meta;
    meta.train_seed = get_u64(in, path);
    meta.best_epoch = static_cast<std::int32_t>(get_u32(in, path));
    meta.best_val_accuracy = get_f64(in, path);
    const std::uint32_t id_len = get_u32(in, path);
    if (id_len > 4096) throw data_error(path + ": corrupt dataset id length");
    meta.dataset_id.resize(id_len);
    in.read(meta.dataset_id.data(), id_len);
    if (!in) throw data_error(path + ": truncated checkpoint");

    MlpNetwork net = make_network(dims, activation, head, gain, quant, /*init_seed=*/0);
    for (LayerParams& l : net.shadow) {
        for (double& w : l.w) w = get_f64(in, path);
        for (double& b : l.b) b = get_f64(in, path);
    }
    net.refresh_quantized();
    return {std::move(net), std::move(meta)};
}

}  // namespace qrlab::nn
