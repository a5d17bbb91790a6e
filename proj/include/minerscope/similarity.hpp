#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "minerscope/util.hpp"

namespace minerscope::similarity {

/// Sparse token n-gram counts. N-grams are stored as 64-bit hashes in
/// strictly increasing key order with parallel counts; exact n-grams are
/// queried through count_of. Counts are integral, which keeps dot products
/// exact regardless of summation order.
struct NGramVector {
    int n = 3;
    std::vector<std::uint64_t> keys;
    std::vector<double> counts;
    double norm_sq = 0;  // sum of squared counts

    bool empty() const { return keys.empty(); }
    double total() const;
    double count_of(std::span<const std::string_view> tokens) const;

    bool operator==(const NGramVector&) const = default;
};

std::vector<std::string_view> tokenize(std::string_view code);

/// Whitespace tokens, sliding-window n-grams. Documents with fewer than n
/// tokens yield the empty vector.
NGramVector vectorize(std::string_view code, int n = 3);

/// Renders bytes as one lowercase hex pair per byte, space-separated, so
/// Wasm code bases flow through the same n-gram pipeline as JavaScript.
std::string hex_tokens(std::span<const std::uint8_t> bytes);

/// dot/(|u||v|) clamped to [0,1]; 0 when either side is empty. Throws
/// std::invalid_argument when the n differ.
double cosine(const NGramVector& u, const NGramVector& v);

/// Full pairwise cosine matrix, row-major, diagonal pinned to 1. Computed
/// in parallel for larger sample sets.
std::vector<double> pairwise_cosine(std::span<const NGramVector> samples);

enum class Linkage { average, single, complete };

struct ClusterResult {
    std::vector<std::size_t> assignments;       // sample index -> dense cluster id
    std::vector<std::size_t> dendrogram_order;  // permutation of sample indices
    Linkage linkage = Linkage::average;
    double cut_similarity = 0;

    std::size_t cluster_count() const;
};

inline constexpr double kDefaultCut = 0.7;

/// Agglomerative clustering on distance 1 - cosine. The dendrogram is
/// always built to the root; the cut only decides cluster membership.
/// Deterministic: ties merge the pair with the lexicographically smallest
/// (smallest member, smallest member) indices.
ClusterResult cluster(std::span<const NGramVector> samples, double cut_similarity = kDefaultCut,
                      Linkage linkage = Linkage::average);

/// Same, starting from a precomputed similarity matrix (row-major n x n).
ClusterResult cluster_matrix(const std::vector<double>& similarities, std::size_t count,
                             double cut_similarity, Linkage linkage = Linkage::average);

/// Pairwise similarities permuted into dendrogram leaf order, ready for
/// heatmap rendering.
struct SimilarityMatrix {
    std::size_t count = 0;
    std::vector<std::size_t> order;  // row k shows sample order[k]
    std::vector<double> values;      // row-major in permuted order

    double at(std::size_t row, std::size_t col) const { return values[row * count + col]; }
};

SimilarityMatrix similarity_matrix(std::span<const NGramVector> samples,
                                   Linkage linkage = Linkage::average);

/// CSV with a header row of sample ids in dendrogram order.
void write_matrix_csv(std::ostream& out, const SimilarityMatrix& matrix,
                      std::span<const std::string> ids);

/// "sample_id,cluster_id" rows in original sample order.
void write_clusters_csv(std::ostream& out, const ClusterResult& result,
                        std::span<const std::string> ids);

}  // namespace minerscope::similarity
