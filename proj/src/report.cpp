#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "qrlab/errors.hpp"
#include "qrlab/harness.hpp"

namespace fs = std::filesystem;

namespace qrlab::harness {
namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt4(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

const char* kPalette[12] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
                            "#335577", "#aa3377"};

// Minimal deterministic SVG 1.1 line-plot writer: one <polyline> per series.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string x_label, std::string y_label, bool log_y = false)
        : title_(std::move(title)),
          x_label_(std::move(x_label)),
          y_label_(std::move(y_label)),
          log_y_(log_y) {}

    void add_series(const std::string& name, const std::vector<double>& xs,
                    const std::vector<double>& ys, const char* color, bool dashed) {
        series_.push_back({name, xs, ys, color, dashed});
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double y = ys[i];
            if (std::isnan(y)) continue;
            if (log_y_) y = std::max(y, kLogFloor);
            x_min_ = std::min(x_min_, xs[i]);
            x_max_ = std::max(x_max_, xs[i]);
            y_min_ = std::min(y_min_, y);
            y_max_ = std::max(y_max_, y);
        }
    }

    void write(const fs::path& path, const std::string& hash) const {
        std::ofstream out(path);
        if (!out) throw data_error(path.string() + ": cannot open for writing");
        double x_lo = x_min_, x_hi = x_max_, y_lo = y_min_, y_hi = y_max_;
        if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
        if (!(y_hi > y_lo)) y_hi = y_lo + 1.0;

        out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kW
            << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
        out << "<!-- config=" << hash << " -->\n";
        out << "<rect x=\"0\" y=\"0\" width=\"" << kW << "\" height=\"" << kH
            << "\" fill=\"white\"/>\n";
        out << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" "
               "font-family=\"sans-serif\" font-size=\"15\">"
            << title_ << "</text>\n";

        // Axes.
        out << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR
            << "\" y2=\"" << kH - kB << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\""
            << kH - kB << "\" stroke=\"black\"/>\n";
        for (int t = 0; t <= kTicks; ++t) {
            const double fx = x_lo + (x_hi - x_lo) * t / kTicks;
            const double px = map_x(fx, x_lo, x_hi);
            out << "<line x1=\"" << fmt4(px) << "\" y1=\"" << kH - kB << "\" x2=\"" << fmt4(px)
                << "\" y2=\"" << kH - kB + 5 << "\" stroke=\"black\"/>\n";
            out << "<text x=\"" << fmt4(px) << "\" y=\"" << kH - kB + 20
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
                << fmt4(fx) << "</text>\n";
            const double fy_lin = y_lo + (y_hi - y_lo) * t / kTicks;
            const double py = map_y(fy_lin, y_lo, y_hi);
            out << "<line x1=\"" << kL - 5 << "\" y1=\"" << fmt4(py) << "\" x2=\"" << kL
                << "\" y2=\"" << fmt4(py) << "\" stroke=\"black\"/>\n";
            out << "<text x=\"" << kL - 8 << "\" y=\"" << fmt4(py + 4)
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
                << fmt4(log_y_ ? std::pow(10.0, fy_lin) : fy_lin) << "</text>\n";
        }
        out << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 8
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << x_label_ << "</text>\n";
        out << "<text x=\"14\" y=\"" << (kT + kH - kB) / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
               "transform=\"rotate(-90 14 "
            << (kT + kH - kB) / 2 << ")\">" << y_label_ << "</text>\n";

        int legend_row = 0;
        for (const Series& s : series_) {
            std::ostringstream points;
            bool in_segment = false;
            std::string segments;
            for (std::size_t i = 0; i < s.xs.size(); ++i) {
                double y = s.ys[i];
                if (std::isnan(y)) continue;
                if (log_y_) y = std::log10(std::max(y, kLogFloor));
                if (in_segment) points << " ";
                points << fmt4(map_x(s.xs[i], x_lo, x_hi)) << "," << fmt4(map_y(y, y_lo, y_hi));
                in_segment = true;
            }
            out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
                << (s.dashed ? " stroke-dasharray=\"6 3\"" : "") << " points=\""
                << points.str() << "\"/>\n";
            const int ly = kT + 14 * legend_row++;
            out << "<line x1=\"" << kW - kR + 6 << "\" y1=\"" << ly << "\" x2=\""
                << kW - kR + 24 << "\" y2=\"" << ly << "\" stroke=\"" << s.color
                << "\" stroke-width=\"1.5\""
                << (s.dashed ? " stroke-dasharray=\"6 3\"" : "") << "/>\n";
            out << "<text x=\"" << kW - kR + 28 << "\" y=\"" << ly + 4
                << "\" font-family=\"sans-serif\" font-size=\"10\">" << s.name << "</text>\n";
        }
        out << "</svg>\n";
        if (!out) throw data_error(path.string() + ": write failed");
    }

private:
    struct Series {
        std::string name;
        std::vector<double> xs;
        std::vector<double> ys;
        const char* color;
        bool dashed;
    };

    static constexpr int kW = 720, kH = 480, kL = 64, kR = 110, kT = 40, kB = 48;
    static constexpr int kTicks = 5;
    static constexpr double kLogFloor = 1e-12;

    double map_x(double x, double lo, double hi) const {
        return kL + (x - lo) / (hi - lo) * (kW - kL - kR);
    }
    double map_y(double y, double lo, double hi) const {
        return (kH - kB) - (y - lo) / (hi - lo) * (kH - kB - kT);
    }

    std::string title_, x_label_, y_label_;
    bool log_y_;
    double x_min_ = std::numeric_limits<double>::infinity();
    double x_max_ = -std::numeric_limits<double>::infinity();
    double y_min_ = std::numeric_limits<double>::infinity();
    double y_max_ = -std::numeric_limits<double>::infinity();
    std::vector<Series> series_;
};

void write_accuracy_table(const AccuracySurface& surface, std::size_t act,
                          const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw data_error(path.string() + ": cannot open for writing");
    out << "# config=" << surface.hash << "\n";
    out << "bits";
    for (double e : surface.eps_grid) out << "," << fmt17(e);
    out << "\n";
    for (std::size_t b = 0; b < surface.bits_list.size(); ++b) {
        out << bits_label(surface.bits_list[b]);
        for (std::size_t e = 0; e < surface.eps_grid.size(); ++e)
            out << "," << fmt17(surface.mean_accuracy(act, b, e));
        out << "\n";
    }
}

void write_relacc_table(const RelAccCurves& curves, const std::string& hash,
                        const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw data_error(path.string() + ": cannot open for writing");
    out << "# config=" << hash << "\n";
    out << "eps_fgsm,eps_l2";
    for (int b : curves.bits) out << ",ar_" << bits_label(b);
    for (std::size_t i = 0; i < curves.bits.size(); ++i)
        if (!curves.bound[i].empty()) out << ",bound_q" << curves.bits[i];
    out << "\n";
    for (std::size_t e = 0; e < curves.eps_fgsm.size(); ++e) {
        out << fmt17(curves.eps_fgsm[e]) << "," << fmt17(curves.eps_l2[e]);
        for (std::size_t i = 0; i < curves.bits.size(); ++i)
            out << "," << fmt17(curves.measured[i][e]);
        for (std::size_t i = 0; i < curves.bits.size(); ++i)
            if (!curves.bound[i].empty()) out << "," << fmt17(curves.bound[i][e]);
        out << "\n";
    }
}

void write_critical_table(const CriticalStrengthReport& report, const std::string& hash,
                          const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw data_error(path.string() + ": cannot open for writing");
    out << "# config=" << hash << "\n";
    out << "# eps_critical=" << fmt17(report.eps_critical)
        << " eps_l2_critical=" << fmt17(report.eps_l2_critical) << "\n";
    out << "eps,variance\n";
    for (const auto& [eps, var] : report.variance_by_eps)
        out << fmt17(eps) << "," << fmt17(var) << "\n";
}

}  // namespace

void emit_report(const AccuracySurface& surface, const std::string& out_dir) {
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    try {
        write_critical_table(critical_strength(surface), surface.hash, dir / "critical.csv");
    } catch (const data_error&) {
        // fewer than 2 quantized bits levels
    }

    for (std::size_t a = 0; a < surface.activations.size(); ++a) {
        const std::string act_name = nn::to_string(surface.activations[a]);
        write_accuracy_table(surface, a, dir / ("accuracy_" + act_name + ".csv"));

        const RelAccCurves curves = relative_accuracy_curves(surface, surface.activations[a]);
        write_relacc_table(curves, surface.hash, dir / ("relacc_" + act_name + ".csv"));

        bool have_critical = false;
        CriticalStrengthReport report;
        try {
            report = critical_strength(surface, surface.activations[a]);
            have_critical = true;
        } catch (const data_error&) {
            // fewer than 2 quantized bits levels: no critical-strength table
        }
        if (have_critical)
            write_critical_table(report, surface.hash, dir / ("critical_" + act_name + ".csv"));

        // Accuracy vs attack strength, one polyline per bits level.
        SvgPlot acc_plot("accuracy vs attack strength (" + act_name + ")", "eps (L-inf)",
                         "accuracy");
        for (std::size_t b = 0; b < surface.bits_list.size(); ++b) {
            std::vector<double> ys(surface.eps_grid.size());
            for (std::size_t e = 0; e < surface.eps_grid.size(); ++e)
                ys[e] = surface.mean_accuracy(a, b, e);
            acc_plot.add_series(bits_label(surface.bits_list[b]) + " bit", surface.eps_grid,
                                ys, kPalette[b % 12], false);
        }
        acc_plot.write(dir / ("accuracy_vs_eps_" + act_name + ".svg"), surface.hash);

        // Accuracy vs quantization level, one polyline per attack strength.
        std::vector<double> bits_axis;
        std::vector<std::size_t> quantized;
        for (std::size_t b = 0; b < surface.bits_list.size(); ++b)
            if (surface.bits_list[b] > 0) {
                bits_axis.push_back(surface.bits_list[b]);
                quantized.push_back(b);
            }
        if (bits_axis.size() >= 2) {
            SvgPlot bits_plot("accuracy vs weight bits (" + act_name + ")", "weight bits",
                              "accuracy");
            const std::size_t stride = std::max<std::size_t>(1, surface.eps_grid.size() / 12);
            int color = 0;
            for (std::size_t e = 0; e < surface.eps_grid.size(); e += stride) {
                std::vector<double> ys;
                for (std::size_t b : quantized) ys.push_back(surface.mean_accuracy(a, b, e));
                bits_plot.add_series("eps " + fmt4(surface.eps_grid[e]), bits_axis, ys,
                                     kPalette[color++ % 12], false);
            }
            bits_plot.write(dir / ("accuracy_vs_bits_" + act_name + ".svg"), surface.hash);
        }

        // Relative accuracy with the model bound overlaid (dashed).
        SvgPlot ra_plot("relative accuracy vs L2 attack size (" + act_name + ")", "eps (L2)",
                        "relative accuracy", /*log_y=*/true);
        for (std::size_t i = 0; i < curves.bits.size(); ++i)
            ra_plot.add_series("Ar " + bits_label(curves.bits[i]) + " bit", curves.eps_l2,
                               curves.measured[i], kPalette[i % 12], false);
        for (std::size_t i = 0; i < curves.bits.size(); ++i)
            if (!curves.bound[i].empty())
                ra_plot.add_series("bound q=" + std::to_string(curves.bits[i]), curves.eps_l2,
                                   curves.bound[i], kPalette[i % 12], true);
        ra_plot.write(dir / ("relacc_" + act_name + ".svg"), surface.hash);
    }

    const std::vector<NonMonotonicCell> cells = detect_nonmonotonic(surface);
    std::ofstream nm(dir / "nonmonotonic.csv");
    nm << "# config=" << surface.hash << "\n";
    nm << "activation,bits,eps_low,acc_low,eps_recover,acc_recover\n";
    for (const NonMonotonicCell& c : cells)
        nm << nn::to_string(c.activation) << "," << bits_label(c.bits) << ","
           << fmt17(c.eps_low) << "," << fmt17(c.acc_low) << "," << fmt17(c.eps_recover) << ","
           << fmt17(c.acc_recover) << "\n";
}

}  // namespace qrlab::harness
