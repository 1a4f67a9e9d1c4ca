#pragma once

// Closed-form model of decision-region geometry.  Decision regions are taken
// to be regular n-simplices with edge length sqrt(n)*2^-q; the module gives
// their volume, surface, inradius, the mean L2 distance from a uniformly
// distributed point to the nearest face, the full distance distribution, and
// the resulting worst-case relative-accuracy bound under an L2-bounded attack.
//
// Factorials in the volume/surface formulas overflow double past n ~ 170, so
// everything is carried in log space internally and exponentiated on return.

namespace qrlab::geom {

struct SimplexGeometry {
    int n;            // input dimensionality
    double s;         // edge length
    double h;         // inradius, n*V/S
    double log_volume;
    double log_surface;
};

/// Validates n >= 1, s > 0 and derives the log-space measures.
SimplexGeometry make_simplex_geometry(int n, double s);

/// Mean-distance model for dimension n and weight bit width q: the exact
/// h/(n+1) chain plus the large-n approximation 2^-(q+1/2) * n^-3/2.
struct MarginModel {
    int n;
    int q;
    double h;
    double mean_exact;
    double mean_approx;
};

MarginModel make_margin_model(int n, int q);

double simplex_volume(int n, double s);   // s^n/n! * sqrt((n+1)/2^n)
double simplex_surface(int n, double s);  // (n+1)*s^(n-1)/(n-1)! * sqrt(n/2^(n-1))
double log_simplex_volume(int n, double s);
double log_simplex_surface(int n, double s);

/// n*V/S; agrees with the closed form s/sqrt(2n(n+1)) to relative 1e-12.
double inradius(int n, double s);

/// Edge length sqrt(n)*2^-q from the hypercube-shattering bound.
double side_length(int n, int q);

double mean_distance_exact(int n, int q);   // inradius(n, side_length)/(n+1)
double mean_distance_approx(int n, int q);  // 2^-(q+1/2) * n^-3/2

/// Density of the distance to the nearest face: (n/h^n)(h-eps)^(n-1) on
/// [0, h], 0 beyond h.
double distance_pdf(double eps, int n, double h);

/// CDF 1 - (1/h^n)(h-eps)^n, clamped to [0,1]; 1 for eps >= h.
double distance_cdf(double eps, int n, double h);

/// Worst-case relative accuracy under an L2 perturbation of size eps_l2:
/// 1 - F(eps_l2) with h = inradius(n, side_length(n, q)).
double relative_accuracy_bound(double eps_l2, int n, int q);

/// L2 magnitude of an FGSM perturbation of per-component strength eps.
double fgsm_to_l2(double eps_fgsm, int n);

}  // namespace qrlab::geom
