#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "trafficast/nn/network.hpp"
#include "trafficast/nn/optimizer.hpp"
#include "trafficast/rng.hpp"
#include "trafficast/series.hpp"

namespace trafficast {

/// Anchor and positive are two different days of one segment; the negative
/// is any day of a different segment.
struct TripletIndex {
    std::size_t anchor_segment = 0;
    std::size_t anchor_day = 0;
    std::size_t positive_day = 0;
    std::size_t negative_segment = 0;
    std::size_t negative_day = 0;

    friend bool operator==(const TripletIndex&, const TripletIndex&) = default;
};

/// Each batch of triplets is drawn from a pool of `segments_per_batch`
/// segments with `images_per_segment` days each.
struct BatchComposition {
    std::size_t batch_size = 12;
    std::size_t segments_per_batch = 6;
    std::size_t images_per_segment = 9;
};

/// `days[r]` is the number of usable days of segment r.
[[nodiscard]] std::vector<TripletIndex> generate_triplets(std::span<const std::size_t> days, std::size_t count,
                                                          Rng& rng, const BatchComposition& composition = {});
[[nodiscard]] std::vector<TripletIndex> generate_triplets(std::span<const DayGrid> grids, std::size_t count,
                                                          Rng& rng, const BatchComposition& composition = {});

struct EmbedderConfig {
    std::size_t resolution = 64;
    std::size_t embedding_dim = 32;
    std::size_t batches_per_epoch = 50;
    BatchComposition composition;
    /// batch_size inside is ignored in favour of composition.batch_size.
    nn::TrainConfig train{.learning_rate = 1e-3, .batch_size = 12, .epochs = 10, .margin = 0.2};

    void validate() const;
};

struct EmbedderResult {
    nn::Network network;
    /// Mean hinged triplet loss of the untrained network on the first batch.
    double initial_loss = 0.0;
    /// Mean hinged triplet loss of each epoch.
    std::vector<double> loss_history;
};

/// Day image: the day normalized to [0, 1] on its own range, rasterized.
[[nodiscard]] std::vector<double> day_image(std::span<const double> day, std::size_t resolution);

/// Trains the embedder on triplets drawn from `grids`. Deterministic per
/// seed. Throws DivergenceError on non-finite losses or when the epoch loss
/// stays above ten times the initial loss for three epochs.
[[nodiscard]] EmbedderResult train_embedder(std::span<const DayGrid> grids, const EmbedderConfig& config,
                                            std::uint64_t seed);

/// Unit-norm embedding of every day of `grid`, in day order.
[[nodiscard]] std::vector<std::vector<double>> embed_days(const nn::Network& embedder, const DayGrid& grid);

/// Mean of the day embeddings, renormalized to unit length.
[[nodiscard]] std::vector<double> segment_representation(const nn::Network& embedder, const DayGrid& grid);
/// Same, from precomputed day embeddings.
[[nodiscard]] std::vector<double> mean_direction(std::span<const std::vector<double>> embeddings);

struct Clustering {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;
    /// NaN when k < 2.
    double silhouette = 0.0;
};

struct KMeansOptions {
    std::size_t restarts = 10;
    std::size_t max_iterations = 300;
};

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs by
/// inertia. Points are processed in a canonical (sorted) order, so the
/// result does not depend on the order they are given in.
[[nodiscard]] Clustering kmeans(std::span<const std::vector<double>> points, std::size_t k, Rng& rng,
                                const KMeansOptions& options = {});

/// Mean silhouette with Euclidean distance; singleton members score 0.
[[nodiscard]] double silhouette(std::span<const std::vector<double>> points,
                                std::span<const std::size_t> assignments);

struct KSelection {
    std::size_t k = 0;
    /// One clustering per k examined, in increasing k.
    std::vector<Clustering> candidates;
};

/// Runs kmeans for every k in [k_min, k_max] (clipped to n - 1) and keeps the
/// best silhouette; ties go to the smaller k.
[[nodiscard]] KSelection select_k(std::span<const std::vector<double>> points, std::size_t k_min,
                                  std::size_t k_max, std::uint64_t seed, const KMeansOptions& options = {});

/// Fraction of point pairs on which two labelings agree.
[[nodiscard]] double rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

struct ClusterConfig {
    EmbedderConfig embedder;
    std::size_t k_min = 2;
    std::size_t k_max = 8;
    /// Skip the silhouette search and use this K when nonzero.
    std::size_t forced_k = 0;
    KMeansOptions kmeans;

    void validate() const;
};

struct ClusterOutcome {
    Clustering clustering;
    std::vector<Clustering> candidates;
    std::vector<std::vector<double>> representations;
    EmbedderResult embedder;
};

/// rasterize -> train embedder -> per-segment representation -> choose K ->
/// kmeans.
[[nodiscard]] ClusterOutcome cluster_network(std::span<const DayGrid> grids, const ClusterConfig& config,
                                             std::uint64_t seed);

}  // namespace trafficast
