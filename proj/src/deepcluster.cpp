#include "trafficast/deepcluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "trafficast/error.hpp"
#include "trafficast/ingest.hpp"
#include "trafficast/nn/loss.hpp"
#include "trafficast/raster.hpp"

namespace trafficast {

namespace {

/// First `count` entries of a uniformly shuffled 0..n-1.
std::vector<std::size_t> draw_distinct(std::size_t n, std::size_t count, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + uniform_index(rng, n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    return idx;
}

double distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(nn::squared_distance(a, b));
}

std::vector<std::size_t> day_counts(std::span<const DayGrid> grids) {
    std::vector<std::size_t> days;
    for (const auto& g : grids) {
        days.push_back(g.days());
    }
    return days;
}

void check_triplet_space(std::span<const std::size_t> days) {
    if (days.size() < 2) {
        throw ConfigError("triplets need at least 2 segments");
    }
    for (std::size_t r = 0; r < days.size(); ++r) {
        if (days[r] < 2) {
            throw ConfigError("triplets need at least 2 usable days per segment; segment " + std::to_string(r) +
                              " has " + std::to_string(days[r]));
        }
    }
}

struct LloydRun {
    std::vector<std::size_t> assign;
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;
};

std::vector<std::vector<double>> plus_plus_seeds(std::span<const std::vector<double>> pts, std::size_t k,
                                                 Rng& rng) {
    const std::size_t n = pts.size();
    std::vector<std::vector<double>> centers;
    centers.push_back(pts[uniform_index(rng, n)]);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], nn::squared_distance(pts[i], centers.back()));
            total += d2[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double u = uniform01(rng) * total;
            double acc = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (u < acc && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            // Every point coincides with a center; the empty-cluster repair
            // sorts out the duplicates.
            pick = uniform_index(rng, n);
        }
        centers.push_back(pts[pick]);
    }
    return centers;
}

LloydRun lloyd(std::span<const std::vector<double>> pts, std::vector<std::vector<double>> centroids,
               std::size_t max_iterations) {
    const std::size_t n = pts.size();
    const std::size_t k = centroids.size();
    const std::size_t dim = pts[0].size();
    LloydRun run;
    run.assign.assign(n, k);
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = nn::squared_distance(pts[i], centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (run.assign[i] != best) {
                run.assign[i] = best;
                changed = true;
            }
        }
        std::vector<std::size_t> counts(k, 0);
        for (auto a : run.assign) {
            ++counts[a];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) {
                continue;
            }
            // Reseed an empty cluster with the point farthest from its
            // centroid, taken from a cluster that can spare it.
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[run.assign[i]] < 2) {
                    continue;
                }
                const double d = nn::squared_distance(pts[i], centroids[run.assign[i]]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            --counts[run.assign[far]];
            run.assign[far] = c;
            counts[c] = 1;
            changed = true;
        }
        for (std::size_t c = 0; c < k; ++c) {
            centroids[c].assign(dim, 0.0);
        }
        for (std::size_t i = 0; i < n; ++i) {
            auto& cen = centroids[run.assign[i]];
            for (std::size_t d = 0; d < dim; ++d) {
                cen[d] += pts[i][d];
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            for (auto& v : centroids[c]) {
                v /= static_cast<double>(counts[c]);
            }
        }
        if (!changed) {
            break;
        }
    }
    run.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        run.inertia += nn::squared_distance(pts[i], centroids[run.assign[i]]);
    }
    run.centroids = std::move(centroids);
    return run;
}

}  // namespace

std::vector<TripletIndex> generate_triplets(std::span<const std::size_t> days, std::size_t count, Rng& rng,
                                            const BatchComposition& composition) {
    check_triplet_space(days);
    if (composition.batch_size == 0 || composition.segments_per_batch < 2 || composition.images_per_segment < 2) {
        throw ConfigError("batch composition needs batch_size >= 1, segments_per_batch >= 2, images_per_segment >= 2");
    }
    std::vector<TripletIndex> out;
    out.reserve(count);
    while (out.size() < count) {
        const auto segs = draw_distinct(days.size(), std::min(composition.segments_per_batch, days.size()), rng);
        std::vector<std::vector<std::size_t>> pool;
        for (auto r : segs) {
            pool.push_back(draw_distinct(days[r], std::min(composition.images_per_segment, days[r]), rng));
        }
        const std::size_t in_batch = std::min(composition.batch_size, count - out.size());
        for (std::size_t b = 0; b < in_batch; ++b) {
            TripletIndex t;
            const std::size_t a = uniform_index(rng, segs.size());
            const auto& own = pool[a];
            const std::size_t i = uniform_index(rng, own.size());
            std::size_t j = uniform_index(rng, own.size() - 1);
            if (j >= i) {
                ++j;
            }
            std::size_t neg = uniform_index(rng, segs.size() - 1);
            if (neg >= a) {
                ++neg;
            }
            t.anchor_segment = segs[a];
            t.anchor_day = own[i];
            t.positive_day = own[j];
            t.negative_segment = segs[neg];
            t.negative_day = pool[neg][uniform_index(rng, pool[neg].size())];
            out.push_back(t);
        }
    }
    return out;
}

std::vector<TripletIndex> generate_triplets(std::span<const DayGrid> grids, std::size_t count, Rng& rng,
                                            const BatchComposition& composition) {
    const auto days = day_counts(grids);
    return generate_triplets(days, count, rng, composition);
}

void EmbedderConfig::validate() const {
    train.validate();
    if (resolution < 16) {
        throw ConfigError("cluster.resolution: must be at least 16 for the embedder's two conv/pool stages");
    }
    if (embedding_dim == 0) {
        throw ConfigError("cluster.embedding_dim: must be at least 1");
    }
    if (batches_per_epoch == 0) {
        throw ConfigError("cluster.batches_per_epoch: must be at least 1");
    }
    if (composition.batch_size == 0) {
        throw ConfigError("cluster.batch_size: must be at least 1");
    }
    if (composition.segments_per_batch < 2) {
        throw ConfigError("cluster.segments_per_batch: must be at least 2");
    }
    if (composition.images_per_segment < 2) {
        throw ConfigError("cluster.images_per_segment: must be at least 2");
    }
}

std::vector<double> day_image(std::span<const double> day, std::size_t resolution) {
    std::vector<double> plane(resolution * resolution);
    to_plane(rasterize(normalize_unit(day), resolution), plane);
    return plane;
}

EmbedderResult train_embedder(std::span<const DayGrid> grids, const EmbedderConfig& config, std::uint64_t seed) {
    config.validate();
    const auto days = day_counts(grids);
    check_triplet_space(days);
    const std::size_t R = config.resolution;
    const std::size_t plane = R * R;

    std::vector<std::vector<RasterImage>> images(grids.size());
    for (std::size_t r = 0; r < grids.size(); ++r) {
        for (std::size_t d = 0; d < grids[r].days(); ++d) {
            images[r].push_back(rasterize(normalize_unit(grids[r].row(d)), R));
        }
    }

    EmbedderResult result;
    result.network = nn::make_embedder(R, config.embedding_dim);
    Rng init = make_rng(seed, "embedder/init");
    result.network.initialize(init);
    Rng sampler = make_rng(seed, "embedder/triplets");
    nn::Adam adam(result.network.parameter_count(), config.train);

    const std::size_t B = config.composition.batch_size;
    std::vector<double> grads(result.network.parameter_count());
    std::size_t above = 0;
    for (std::size_t epoch = 0; epoch < config.train.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t batch = 0; batch < config.batches_per_epoch; ++batch) {
            const auto triplets = generate_triplets(days, B, sampler, config.composition);
            nn::Tensor input({3 * B, 1, R, R});
            auto data = input.data();
            for (std::size_t t = 0; t < B; ++t) {
                const auto& tr = triplets[t];
                to_plane(images[tr.anchor_segment][tr.anchor_day], data.subspan(t * plane, plane));
                to_plane(images[tr.anchor_segment][tr.positive_day], data.subspan((B + t) * plane, plane));
                to_plane(images[tr.negative_segment][tr.negative_day], data.subspan((2 * B + t) * plane, plane));
            }
            nn::Trace trace;
            const nn::Tensor out = result.network.forward(input, trace);
            const std::size_t D = config.embedding_dim;
            nn::Tensor a({B, D});
            nn::Tensor p({B, D});
            nn::Tensor n({B, D});
            std::copy_n(out.data().begin(), B * D, a.data().begin());
            std::copy_n(out.data().begin() + static_cast<std::ptrdiff_t>(B * D), B * D, p.data().begin());
            std::copy_n(out.data().begin() + static_cast<std::ptrdiff_t>(2 * B * D), B * D, n.data().begin());
            nn::Tensor ga;
            nn::Tensor gp;
            nn::Tensor gn;
            const auto loss = nn::triplet_loss_batch(a, p, n, config.train.margin, &ga, &gp, &gn);
            if (!std::isfinite(loss.loss)) {
                throw DivergenceError("embedder loss became non-finite in epoch " + std::to_string(epoch + 1));
            }
            if (epoch == 0 && batch == 0) {
                result.initial_loss = loss.loss;
            }
            epoch_loss += loss.loss;
            nn::Tensor grad_out(out.shape());
            auto g = grad_out.data();
            std::copy(ga.data().begin(), ga.data().end(), g.begin());
            std::copy(gp.data().begin(), gp.data().end(), g.begin() + static_cast<std::ptrdiff_t>(B * D));
            std::copy(gn.data().begin(), gn.data().end(), g.begin() + static_cast<std::ptrdiff_t>(2 * B * D));
            std::fill(grads.begin(), grads.end(), 0.0);
            result.network.backward(trace, grad_out, grads);
            adam.step(result.network.parameters(), grads);
        }
        epoch_loss /= static_cast<double>(config.batches_per_epoch);
        result.loss_history.push_back(epoch_loss);
        if (result.initial_loss > 0.0 && epoch_loss > 10.0 * result.initial_loss) {
            if (++above >= 3) {
                throw DivergenceError("embedder loss stayed above 10x its initial value for 3 epochs");
            }
        } else {
            above = 0;
        }
    }
    return result;
}

std::vector<std::vector<double>> embed_days(const nn::Network& embedder, const DayGrid& grid) {
    const std::size_t R = embedder.input_shape().at(1);
    const std::size_t plane = R * R;
    constexpr std::size_t kChunk = 64;
    std::vector<std::vector<double>> out;
    for (std::size_t first = 0; first < grid.days(); first += kChunk) {
        const std::size_t count = std::min(kChunk, grid.days() - first);
        nn::Tensor input({count, 1, R, R});
        for (std::size_t d = 0; d < count; ++d) {
            to_plane(rasterize(normalize_unit(grid.row(first + d)), R), input.data().subspan(d * plane, plane));
        }
        const nn::Tensor emb = embedder.forward(input);
        for (std::size_t d = 0; d < count; ++d) {
            const auto s = emb.sample(d);
            out.emplace_back(s.begin(), s.end());
        }
    }
    return out;
}

std::vector<double> mean_direction(std::span<const std::vector<double>> embeddings) {
    if (embeddings.empty()) {
        throw DataError("cannot average an empty set of embeddings");
    }
    std::vector<double> mean(embeddings[0].size(), 0.0);
    for (const auto& e : embeddings) {
        for (std::size_t i = 0; i < mean.size(); ++i) {
            mean[i] += e[i];
        }
    }
    double sq = 0.0;
    for (auto& v : mean) {
        v /= static_cast<double>(embeddings.size());
        sq += v * v;
    }
    if (std::sqrt(sq) < 1e-9) {
        throw DataError("day embeddings cancel out; the mean has no direction");
    }
    return nn::l2_normalize(mean);
}

std::vector<double> segment_representation(const nn::Network& embedder, const DayGrid& grid) {
    if (grid.days() == 0) {
        throw DataError("segment '" + grid.segment_id() + "' has no days to represent");
    }
    return mean_direction(embed_days(embedder, grid));
}

Clustering kmeans(std::span<const std::vector<double>> points, std::size_t k, Rng& rng, const KMeansOptions& options) {
    const std::size_t n = points.size();
    if (k == 0 || k > n) {
        throw ConfigError("kmeans needs 1 <= K <= number of points (K=" + std::to_string(k) +
                          ", points=" + std::to_string(n) + ")");
    }
    if (options.restarts == 0 || options.max_iterations == 0) {
        throw ConfigError("kmeans needs at least one restart and one iteration");
    }
    for (const auto& p : points) {
        if (p.size() != points[0].size()) {
            throw ConfigError("kmeans points must share one dimension");
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    std::vector<std::vector<double>> pts;
    pts.reserve(n);
    for (auto i : order) {
        pts.push_back(points[i]);
    }

    LloydRun best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < options.restarts; ++r) {
        LloydRun run = lloyd(pts, plus_plus_seeds(pts, k, rng), options.max_iterations);
        if (run.inertia < best.inertia) {
            best = std::move(run);
        }
    }

    // Number clusters by first appearance in canonical order.
    std::vector<std::size_t> relabel(k, k);
    std::size_t next = 0;
    for (auto a : best.assign) {
        if (relabel[a] == k) {
            relabel[a] = next++;
        }
    }
    Clustering out;
    out.k = k;
    out.inertia = best.inertia;
    out.centroids.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        out.centroids[relabel[c]] = best.centroids[c];
    }
    out.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.assignments[order[i]] = relabel[best.assign[i]];
    }
    out.silhouette = k >= 2 ? silhouette(points, out.assignments) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

double silhouette(std::span<const std::vector<double>> points, std::span<const std::size_t> assignments) {
    const std::size_t n = points.size();
    if (assignments.size() != n) {
        throw ConfigError("silhouette: one assignment per point is required");
    }
    const std::size_t k = n == 0 ? 0 : *std::max_element(assignments.begin(), assignments.end()) + 1;
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignments) {
        ++sizes[a];
    }
    if (std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; }) < 2) {
        throw ConfigError("silhouette needs at least 2 non-empty clusters");
    }
    double total = 0.0;
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < n; ++i) {
        if (sizes[assignments[i]] == 1) {
            continue;
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                sums[assignments[j]] += distance(points[i], points[j]);
            }
        }
        const double a = sums[assignments[i]] / static_cast<double>(sizes[assignments[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != assignments[i] && sizes[c] > 0) {
                b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
            }
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

KSelection select_k(std::span<const std::vector<double>> points, std::size_t k_min, std::size_t k_max,
                    std::uint64_t seed, const KMeansOptions& options) {
    if (points.size() < 3) {
        throw ConfigError("choosing K needs at least 3 points");
    }
    const std::size_t hi = std::min(k_max, points.size() - 1);
    if (k_min < 2 || k_min > hi) {
        throw ConfigError("K range [" + std::to_string(k_min) + ", " + std::to_string(k_max) +
                          "] is empty within [2, " + std::to_string(points.size() - 1) + "]");
    }
    KSelection out;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = k_min; k <= hi; ++k) {
        Rng rng = make_rng(seed, "kmeans/k" + std::to_string(k));
        out.candidates.push_back(kmeans(points, k, rng, options));
        if (out.candidates.back().silhouette > best) {
            best = out.candidates.back().silhouette;
            out.k = k;
        }
    }
    return out;
}

double rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.size() != b.size()) {
        throw ConfigError("rand index needs two labelings of the same points");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        return 1.0;
    }
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            agree += ((a[i] == a[j]) == (b[i] == b[j])) ? 1 : 0;
        }
    }
    return static_cast<double>(agree) / static_cast<double>(n * (n - 1) / 2);
}

void ClusterConfig::validate() const {
    embedder.validate();
    if (forced_k == 0 && (k_min < 2 || k_max < k_min)) {
        throw ConfigError("cluster.k_min/k_max: need 2 <= k_min <= k_max");
    }
    if (kmeans.restarts == 0) {
        throw ConfigError("cluster.kmeans_restarts: must be at least 1");
    }
    if (kmeans.max_iterations == 0) {
        throw ConfigError("cluster.kmeans_iterations: must be at least 1");
    }
}

ClusterOutcome cluster_network(std::span<const DayGrid> grids, const ClusterConfig& config, std::uint64_t seed) {
    config.validate();
    if (grids.size() < 3) {
        throw ConfigError("clustering needs at least 3 segments");
    }
    ClusterOutcome out;
    out.embedder = train_embedder(grids, config.embedder, seed);
    for (const auto& g : grids) {
        out.representations.push_back(segment_representation(out.embedder.network, g));
    }
    if (config.forced_k != 0) {
        Rng rng = make_rng(seed, "kmeans/k" + std::to_string(config.forced_k));
        out.clustering = kmeans(out.representations, config.forced_k, rng, config.kmeans);
        out.candidates.push_back(out.clustering);
        return out;
    }
    const KSelection sel = select_k(out.representations, config.k_min, config.k_max, seed, config.kmeans);
    out.candidates = sel.candidates;
    out.clustering = sel.candidates.at(sel.k - config.k_min);
    return out;
}

}  // namespace trafficast
