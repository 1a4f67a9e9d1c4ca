#include "qrlab/runconfig.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qrlab/errors.hpp"

namespace qrlab::harness {
namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

double to_double(const std::string& v, const std::string& key) {
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw data_error("run config: bad numeric value '" + v + "' for " + key);
    return d;
}

long to_long(const std::string& v, const std::string& key) {
    char* end = nullptr;
    long d = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw data_error("run config: bad integer value '" + v + "' for " + key);
    return d;
}

std::vector<double> parse_eps(const std::string& v) {
    // Either "start:stop:step" or an explicit comma list.
    if (v.find(':') != std::string::npos) {
        std::istringstream is(v);
        std::string a, b, c;
        std::getline(is, a, ':');
        std::getline(is, b, ':');
        std::getline(is, c);
        return attack::make_eps_grid(to_double(trim(a), "eps"), to_double(trim(b), "eps"),
                                     to_double(trim(c), "eps"));
    }
    std::vector<double> grid;
    for (const std::string& tok : split_list(v)) grid.push_back(to_double(tok, "eps"));
    return grid;
}

}  // namespace

GridConfig parse_run_config_text(const std::string& text, const std::string& origin) {
    GridConfig config;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw data_error(origin + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "dataset") {
            config.dataset_spec = value;
        } else if (key == "bits") {
            config.bits_list.clear();
            for (const std::string& tok : split_list(value))
                config.bits_list.push_back(tok == "full" ? 0
                                                         : static_cast<int>(to_long(tok, key)));
        } else if (key == "activations") {
            config.activations.clear();
            for (const std::string& tok : split_list(value))
                config.activations.push_back(nn::activation_from_string(tok));
        } else if (key == "seeds") {
            config.seeds.clear();
            for (const std::string& tok : split_list(value))
                config.seeds.push_back(static_cast<std::uint64_t>(to_long(tok, key)));
        } else if (key == "eps") {
            config.eps_grid = parse_eps(value);
        } else if (key == "hidden") {
            config.hidden_units = static_cast<int>(to_long(value, key));
        } else if (key == "gain") {
            config.hidden_gain = to_double(value, key);
        } else if (key == "grid_mode") {
            if (value == "span") config.grid_mode = nn::GridMode::span;
            else if (value == "cell") config.grid_mode = nn::GridMode::cell;
            else throw data_error("run config: grid_mode must be span or cell");
        } else if (key == "clip") {
            config.clip_to_domain = value == "true" || value == "1";
        } else if (key == "subsample_train") {
            config.subsample_train = static_cast<std::size_t>(to_long(value, key));
        } else if (key == "subsample_test") {
            config.subsample_test = static_cast<std::size_t>(to_long(value, key));
        } else if (key == "max_epochs") {
            config.train.max_epochs = static_cast<int>(to_long(value, key));
        } else if (key == "batch_size") {
            config.train.batch_size = static_cast<int>(to_long(value, key));
        } else if (key == "alpha") {
            config.train.alpha = to_double(value, key);
        } else if (key == "patience") {
            config.train.patience = static_cast<int>(to_long(value, key));
        } else if (key == "out_dir") {
            config.out_dir = value;
        } else if (key == "workers") {
            config.workers = static_cast<int>(to_long(value, key));
        } else {
            throw data_error(origin + ":" + std::to_string(line_no) + ": unknown key '" +
                             key + "'");
        }
    }
    if (config.dataset_spec.empty()) throw data_error(origin + ": dataset is required");
    return config;
}

GridConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error(path + ": cannot open run config");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config_text(buffer.str(), path);
}

}  // namespace qrlab::harness
