#include "qrlab/montecarlo.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qrlab/errors.hpp"
#include "qrlab/geometry.hpp"
#include "qrlab/kernels.hpp"

namespace qrlab::mc {

SimplexEmbedding build_regular_simplex(int n, double s) {
    if (n < 1) throw std::domain_error("build_regular_simplex: n must be >= 1");
    if (!(s > 0.0)) throw std::domain_error("build_regular_simplex: s must be > 0");

    const int verts = n + 1;
    SimplexEmbedding out;
    out.n = n;
    out.s = s;
    out.vertices.assign(static_cast<std::size_t>(verts) * n, 0.0);

    // The standard basis vectors of R^(n+1) form a regular n-simplex with edge
    // sqrt(2) inside the hyperplane sum(x) = 1.  Projecting onto the Helmert
    // orthonormal basis of {sum(x) = 0} maps vertex i to column i of the
    // Helmert matrix, which we scale by s/sqrt(2) to get edge length s.
    const double scale = s / std::sqrt(2.0);
    for (int k = 1; k <= n; ++k) {
        const double kd = static_cast<double>(k);
        const double norm = 1.0 / std::sqrt(kd * (kd + 1.0));
        // Helmert row k: k entries of +1, then -k, then zeros (all * norm).
        for (int i = 0; i < k; ++i)
            out.vertices[static_cast<std::size_t>(i) * n + (k - 1)] = norm * scale;
        out.vertices[static_cast<std::size_t>(k) * n + (k - 1)] = -kd * norm * scale;
    }

    // Centroid (= incenter for a regular simplex).
    std::vector<double> center(n, 0.0);
    for (int i = 0; i < verts; ++i)
        for (int j = 0; j < n; ++j) center[j] += out.vertices[static_cast<std::size_t>(i) * n + j];
    for (int j = 0; j < n; ++j) center[j] /= verts;

    // Face i (opposite vertex i): the inward normal points from the face
    // toward vertex i, i.e. along vertex_i - center; offset averaged over the
    // face's vertices for stability.
    out.face_normals.assign(static_cast<std::size_t>(verts) * n, 0.0);
    out.face_offsets.assign(verts, 0.0);
    for (int i = 0; i < verts; ++i) {
        double* normal = out.face_normals.data() + static_cast<std::size_t>(i) * n;
        const double* vi = out.vertex(i);
        double norm2 = 0.0;
        for (int j = 0; j < n; ++j) {
            normal[j] = vi[j] - center[j];
            norm2 += normal[j] * normal[j];
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (int j = 0; j < n; ++j) normal[j] *= inv;
        double offset = 0.0;
        for (int j2 = 0; j2 < verts; ++j2) {
            if (j2 == i) continue;
            offset += kern::dot(normal, out.vertex(j2), n);
        }
        out.face_offsets[i] = offset / n;
    }

    out.inradius = kern::dot(out.normal(0), center.data(), n) - out.face_offsets[0];
    return out;
}

void sample_uniform(const SimplexEmbedding& simplex, SplitMix64& rng, double* point) {
    const int n = simplex.n;
    const int verts = n + 1;
    double sum = 0.0;
    std::vector<double> w(verts);
    for (int i = 0; i < verts; ++i) {
        w[i] = rng.exponential();
        sum += w[i];
    }
    for (int j = 0; j < n; ++j) point[j] = 0.0;
    for (int i = 0; i < verts; ++i)
        kern::axpy(w[i] / sum, simplex.vertex(i), point, static_cast<std::size_t>(n));
}

DistanceSample distance_to_nearest_face(const double* point, const SimplexEmbedding& simplex) {
    const int verts = simplex.n + 1;
    double best = std::numeric_limits<double>::infinity();
    int best_face = -1;
    for (int i = 0; i < verts; ++i) {
        double d = kern::dot(simplex.normal(i), point, simplex.n) - simplex.face_offsets[i];
        if (d < -1e-9)
            throw numeric_error("distance_to_nearest_face: point outside simplex (signed distance " +
                                std::to_string(d) + " at face " + std::to_string(i) + ")");
        if (d < best) {
            best = d;
            best_face = i;
        }
    }
    if (best < 0.0) best = 0.0;
    return DistanceSample{best, best_face};
}

namespace {

void fill_distances(const SimplexEmbedding& simplex, std::uint64_t stream_seed,
                    double* out, std::size_t count) {
    SplitMix64 rng(stream_seed);
    const int n = simplex.n;
    const int verts = n + 1;
    std::vector<double> w(verts);
    std::vector<double> point(n);
    for (std::size_t k = 0; k < count; ++k) {
        double sum = 0.0;
        for (int i = 0; i < verts; ++i) {
            w[i] = rng.exponential();
            sum += w[i];
        }
        for (int j = 0; j < n; ++j) point[j] = 0.0;
        for (int i = 0; i < verts; ++i)
            kern::axpy(w[i] / sum, simplex.vertex(i), point.data(), static_cast<std::size_t>(n));
        out[k] = distance_to_nearest_face(point.data(), simplex).eps;
    }
}

}  // namespace

std::vector<double> collect_distances(int n, int q, std::size_t num_samples,
                                      std::uint64_t seed, int workers) {
    const SimplexEmbedding simplex = build_regular_simplex(n, geom::side_length(n, q));
    if (workers < 1) workers = 1;
    if (static_cast<std::size_t>(workers) > num_samples && num_samples > 0)
        workers = static_cast<int>(num_samples);

    std::vector<double> eps(num_samples);
    const std::size_t chunk = (num_samples + workers - 1) / workers;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        const std::size_t begin = static_cast<std::size_t>(w) * chunk;
        if (begin >= num_samples) break;
        const std::size_t count = std::min(chunk, num_samples - begin);
        const std::uint64_t stream = derive_stream(seed, static_cast<std::uint64_t>(w));
        pool.emplace_back([&simplex, stream, out = eps.data() + begin, count] {
            fill_distances(simplex, stream, out, count);
        });
    }
    for (auto& t : pool) t.join();
    return eps;
}

Histogram empirical_distance_distribution(int n, int q, std::size_t num_samples,
                                          int num_bins, std::uint64_t seed, int workers) {
    if (num_samples < 10000)
        throw std::domain_error("empirical_distance_distribution: need at least 10^4 samples");
    if (num_bins < 1) throw std::domain_error("empirical_distance_distribution: bins must be >= 1");

    Histogram hist;
    hist.n = n;
    hist.q = q;
    hist.side = geom::side_length(n, q);
    hist.h = geom::inradius(n, hist.side);
    hist.samples = num_samples;
    hist.seed = seed;
    hist.workers = workers < 1 ? 1 : workers;
    hist.counts.assign(num_bins, 0);
    hist.sum_eps = 0.0;

    const std::vector<double> eps = collect_distances(n, q, num_samples, seed, hist.workers);
    const double inv_width = num_bins / hist.h;
    for (double e : eps) {
        auto bin = static_cast<std::size_t>(e * inv_width);
        if (bin >= static_cast<std::size_t>(num_bins)) bin = num_bins - 1;
        ++hist.counts[bin];
        hist.sum_eps += e;
    }

    hist.density.resize(num_bins);
    const double norm = 1.0 / (static_cast<double>(num_samples) * hist.bin_width());
    for (int b = 0; b < num_bins; ++b) hist.density[b] = hist.counts[b] * norm;
    return hist;
}

}  // namespace qrlab::mc
