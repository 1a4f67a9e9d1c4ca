#include "qrlab/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qrlab::geom {
namespace {

constexpr double kLn2 = 0.6931471805599453094172321;

void require_ns(int n, double s, const char* where) {
    if (n < 1)
        throw std::domain_error(std::string(where) + ": n must be >= 1, got " +
                                std::to_string(n));
    if (!(s > 0.0))
        throw std::domain_error(std::string(where) + ": s must be > 0, got " +
                                std::to_string(s));
}

}  // namespace

double log_simplex_volume(int n, double s) {
    require_ns(n, s, "simplex_volume");
    double nd = static_cast<double>(n);
    return nd * std::log(s) - std::lgamma(nd + 1.0) +
           0.5 * (std::log(nd + 1.0) - nd * kLn2);
}

double log_simplex_surface(int n, double s) {
    require_ns(n, s, "simplex_surface");
    double nd = static_cast<double>(n);
    return std::log(nd + 1.0) + (nd - 1.0) * std::log(s) - std::lgamma(nd) +
           0.5 * (std::log(nd) - (nd - 1.0) * kLn2);
}

double simplex_volume(int n, double s) {
    if (n <= 20) {
        require_ns(n, s, "simplex_volume");
        double nd = static_cast<double>(n);
        double fact = 1.0;
        for (int k = 2; k <= n; ++k) fact *= k;
        return std::pow(s, nd) / fact * std::sqrt((nd + 1.0) / std::pow(2.0, nd));
    }
    return std::exp(log_simplex_volume(n, s));
}

double simplex_surface(int n, double s) {
    if (n <= 20) {
        require_ns(n, s, "simplex_surface");
        double nd = static_cast<double>(n);
        double fact = 1.0;
        for (int k = 2; k <= n - 1; ++k) fact *= k;
        return (nd + 1.0) * std::pow(s, nd - 1.0) / fact *
               std::sqrt(nd / std::pow(2.0, nd - 1.0));
    }
    return std::exp(log_simplex_surface(n, s));
}

double inradius(int n, double s) {
    require_ns(n, s, "inradius");
    // n*V/S evaluated through the logs so the n=784 case stays finite.
    return std::exp(std::log(static_cast<double>(n)) + log_simplex_volume(n, s) -
                    log_simplex_surface(n, s));
}

double side_length(int n, int q) {
    if (n < 1) throw std::domain_error("side_length: n must be >= 1");
    if (q < 1) throw std::domain_error("side_length: q must be >= 1");
    return std::ldexp(std::sqrt(static_cast<double>(n)), -q);
}

double mean_distance_exact(int n, int q) {
    return inradius(n, side_length(n, q)) / (static_cast<double>(n) + 1.0);
}

double mean_distance_approx(int n, int q) {
    if (n < 1) throw std::domain_error("mean_distance_approx: n must be >= 1");
    if (q < 1) throw std::domain_error("mean_distance_approx: q must be >= 1");
    double nd = static_cast<double>(n);
    return std::exp2(-(static_cast<double>(q) + 0.5)) * std::pow(nd, -1.5);
}

double distance_pdf(double eps, int n, double h) {
    if (n < 1) throw std::domain_error("distance_pdf: n must be >= 1");
    if (!(h > 0.0)) throw std::domain_error("distance_pdf: h must be > 0");
    if (eps < 0.0) throw std::domain_error("distance_pdf: eps must be >= 0");
    if (eps >= h) return 0.0;
    double nd = static_cast<double>(n);
    if (n == 1) return 1.0 / h;  // (h-eps)^0 = 1: uniform density
    return std::exp(std::log(nd) - nd * std::log(h) + (nd - 1.0) * std::log(h - eps));
}

double distance_cdf(double eps, int n, double h) {
    if (n < 1) throw std::domain_error("distance_cdf: n must be >= 1");
    if (!(h > 0.0)) throw std::domain_error("distance_cdf: h must be > 0");
    if (eps < 0.0) throw std::domain_error("distance_cdf: eps must be >= 0");
    if (eps >= h) return 1.0;
    double nd = static_cast<double>(n);
    double c = 1.0 - std::exp(nd * (std::log(h - eps) - std::log(h)));
    if (c < 0.0) c = 0.0;
    if (c > 1.0) c = 1.0;
    return c;
}

double relative_accuracy_bound(double eps_l2, int n, int q) {
    if (eps_l2 < 0.0)
        throw std::domain_error("relative_accuracy_bound: eps_l2 must be >= 0");
    return 1.0 - distance_cdf(eps_l2, n, inradius(n, side_length(n, q)));
}

double fgsm_to_l2(double eps_fgsm, int n) {
    return eps_fgsm * std::sqrt(static_cast<double>(n));
}

SimplexGeometry make_simplex_geometry(int n, double s) {
    require_ns(n, s, "SimplexGeometry");
    return SimplexGeometry{n, s, inradius(n, s), log_simplex_volume(n, s),
                           log_simplex_surface(n, s)};
}

MarginModel make_margin_model(int n, int q) {
    double h = inradius(n, side_length(n, q));
    return MarginModel{n, q, h, h / (static_cast<double>(n) + 1.0),
                       mean_distance_approx(n, q)};
}

}  // namespace qrlab::geom
