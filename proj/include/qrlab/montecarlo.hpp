#pragma once

#include <cstdint>
#include <vector>

#include "qrlab/rng.hpp"

// Empirical counterpart of the geometry module: embed a regular n-simplex in
// n-space, draw points uniformly inside it, and measure the exact L2 distance
// to the nearest face.

namespace qrlab::mc {

struct SimplexEmbedding {
    int n;
    double s;
    double inradius;
    std::vector<double> vertices;      // (n+1) x n, row-major
    std::vector<double> face_normals;  // (n+1) x n, inward unit normals; row i opposite vertex i
    std::vector<double> face_offsets;  // n+1

    const double* vertex(int i) const { return vertices.data() + static_cast<std::size_t>(i) * n; }
    const double* normal(int i) const { return face_normals.data() + static_cast<std::size_t>(i) * n; }
};

/// Regular n-simplex with edge length s, via Helmert-basis vertex placement.
SimplexEmbedding build_regular_simplex(int n, double s);

struct DistanceSample {
    double eps;        // L2 distance to the nearest face
    int nearest_face;  // lowest index on ties
};

/// One uniform point inside the simplex: flat-Dirichlet barycentric weights
/// (normalized unit-rate exponentials).  Writes n coordinates to `point`.
void sample_uniform(const SimplexEmbedding& simplex, SplitMix64& rng, double* point);

/// Signed distance to every face is >= 0 inside; throws if the point lies
/// outside by more than 1e-9.
DistanceSample distance_to_nearest_face(const double* point, const SimplexEmbedding& simplex);

/// Deterministic batch of nearest-face distances for the (n, q) simplex.
/// Worker w fills samples [w*chunk, ...) from stream derive_stream(seed, w),
/// so the result depends only on (seed, workers), not on scheduling.
std::vector<double> collect_distances(int n, int q, std::size_t num_samples,
                                      std::uint64_t seed, int workers);

struct Histogram {
    int n;
    int q;
    double side;
    double h;  // histogram support is [0, h]
    std::size_t samples;
    std::uint64_t seed;
    int workers;
    std::vector<std::uint64_t> counts;
    std::vector<double> density;  // counts / (samples * bin_width)
    double sum_eps;               // running sum, for the mean check

    int bins() const { return static_cast<int>(counts.size()); }
    double bin_width() const { return h / counts.size(); }
};

/// Normalized density histogram of nearest-face distances over [0, h].
Histogram empirical_distance_distribution(int n, int q, std::size_t num_samples,
                                          int num_bins, std::uint64_t seed,
                                          int workers = 1);

}  // namespace qrlab::mc
