#include "minerscope/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "minerscope/simd_dot.hpp"

namespace minerscope::similarity {

namespace {

constexpr std::uint64_t kFnvBasis = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv_step(std::uint64_t h, unsigned char byte) {
    return (h ^ byte) * kFnvPrime;
}

std::uint64_t ngram_hash(std::span<const std::string_view> tokens) {
    std::uint64_t h = kFnvBasis;
    for (auto token : tokens) {
        for (char c : token) h = fnv_step(h, static_cast<unsigned char>(c));
        // Tokens never contain whitespace, so a newline separator cannot
        // collide two different token sequences onto one hash input.
        h = fnv_step(h, '\n');
    }
    return h;
}

constexpr int kMaxN = 8;

void check_n(int n) {
    if (n < 1 || n > kMaxN) throw std::invalid_argument("n-gram size must be in [1, 8]");
}

}  // namespace

double NGramVector::total() const {
    double sum = 0;
    for (double c : counts) sum += c;
    return sum;
}

double NGramVector::count_of(std::span<const std::string_view> tokens) const {
    if (static_cast<int>(tokens.size()) != n) return 0;
    std::uint64_t key = ngram_hash(tokens);
    auto it = std::lower_bound(keys.begin(), keys.end(), key);
    if (it == keys.end() || *it != key) return 0;
    return counts[static_cast<std::size_t>(it - keys.begin())];
}

std::vector<std::string_view> tokenize(std::string_view code) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < code.size()) {
        while (i < code.size() && std::isspace(static_cast<unsigned char>(code[i]))) ++i;
        std::size_t start = i;
        while (i < code.size() && !std::isspace(static_cast<unsigned char>(code[i]))) ++i;
        if (i > start) tokens.push_back(code.substr(start, i - start));
    }
    return tokens;
}

NGramVector vectorize(std::string_view code, int n) {
    check_n(n);
    NGramVector vec;
    vec.n = n;
    auto tokens = tokenize(code);
    if (tokens.size() < static_cast<std::size_t>(n)) return vec;

    std::vector<std::uint64_t> hashes;
    hashes.reserve(tokens.size() - static_cast<std::size_t>(n) + 1);
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i)
        hashes.push_back(ngram_hash(std::span(tokens).subspan(i, static_cast<std::size_t>(n))));
    std::sort(hashes.begin(), hashes.end());

    for (std::size_t i = 0; i < hashes.size();) {
        std::size_t j = i;
        while (j < hashes.size() && hashes[j] == hashes[i]) ++j;
        vec.keys.push_back(hashes[i]);
        vec.counts.push_back(static_cast<double>(j - i));
        i = j;
    }
    for (double c : vec.counts) vec.norm_sq += c * c;
    return vec;
}

std::string hex_tokens(std::span<const std::uint8_t> bytes) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    if (bytes.empty()) return out;
    out.reserve(bytes.size() * 3 - 1);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out.push_back(kHex[bytes[i] >> 4]);
        out.push_back(kHex[bytes[i] & 0xf]);
    }
    return out;
}

double cosine(const NGramVector& u, const NGramVector& v) {
    if (u.n != v.n) throw std::invalid_argument("cosine: n-gram sizes differ");
    if (u.empty() || v.empty()) return 0;
    double dot = simd::active_dot_kernel()(u.keys.data(), u.counts.data(), u.keys.size(),
                                           v.keys.data(), v.counts.data(), v.keys.size());
    return std::clamp(dot / std::sqrt(u.norm_sq * v.norm_sq), 0.0, 1.0);
}

std::vector<double> pairwise_cosine(std::span<const NGramVector> samples) {
    std::size_t count = samples.size();
    for (const auto& s : samples)
        if (s.n != samples[0].n) throw std::invalid_argument("cosine: n-gram sizes differ");

    std::vector<double> matrix(count * count, 0.0);
    auto fill_row = [&](std::size_t i) {
        matrix[i * count + i] = 1.0;
        for (std::size_t j = i + 1; j < count; ++j) {
            double s = cosine(samples[i], samples[j]);
            matrix[i * count + j] = s;
            matrix[j * count + i] = s;
        }
    };

    std::size_t workers = std::min<std::size_t>(std::thread::hardware_concurrency(), count);
    if (count < 64 || workers < 2) {
        for (std::size_t i = 0; i < count; ++i) fill_row(i);
    } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < workers; ++w)
            threads.emplace_back([&, w] {
                for (std::size_t i = w; i < count; i += workers) fill_row(i);
            });
        for (auto& t : threads) t.join();
    }
    return matrix;
}

std::size_t ClusterResult::cluster_count() const {
    std::size_t max_id = 0;
    for (auto id : assignments) max_id = std::max(max_id, id);
    return assignments.empty() ? 0 : max_id + 1;
}

ClusterResult cluster_matrix(const std::vector<double>& similarities, std::size_t count,
                             double cut_similarity, Linkage linkage) {
    if (count == 0) throw std::invalid_argument("clustering requires at least one sample");
    if (!(cut_similarity >= 0 && cut_similarity <= 1))
        throw std::invalid_argument("cut similarity must lie in [0, 1]");
    if (similarities.size() != count * count)
        throw std::invalid_argument("similarity matrix size mismatch");

    struct Node {
        std::size_t smallest;  // smallest sample index in the subtree
        std::size_t size;
        int left = -1, right = -1;  // node ids; -1 marks a leaf
    };

    std::vector<Node> nodes;
    nodes.reserve(2 * count);
    for (std::size_t i = 0; i < count; ++i) nodes.push_back({i, 1, -1, -1});

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < count; ++i) active.push_back(i);

    // Inter-cluster similarity, indexed by node id pair; grows as merged
    // nodes are appended.
    std::size_t capacity = 2 * count;
    std::vector<double> sim(capacity * capacity, 0.0);
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < count; ++j) sim[i * capacity + j] = similarities[i * count + j];

    // Partition snapshot the first time the best merge falls below the
    // cut. Merging continues regardless to finish the dendrogram.
    std::vector<std::size_t> snapshot;
    bool snapped = false;

    while (active.size() > 1) {
        std::size_t best_a = 0, best_b = 0;
        double best_sim = -1;
        std::pair<std::size_t, std::size_t> best_key{0, 0};
        for (std::size_t x = 0; x < active.size(); ++x) {
            for (std::size_t y = x + 1; y < active.size(); ++y) {
                std::size_t a = active[x], b = active[y];
                double s = sim[a * capacity + b];
                auto key = std::pair(std::min(nodes[a].smallest, nodes[b].smallest),
                                     std::max(nodes[a].smallest, nodes[b].smallest));
                if (s > best_sim || (s == best_sim && key < best_key)) {
                    best_sim = s;
                    best_key = key;
                    best_a = a;
                    best_b = b;
                }
            }
        }

        if (!snapped && best_sim < cut_similarity) {
            snapshot = active;
            snapped = true;
        }

        std::size_t merged = nodes.size();
        const Node& na = nodes[best_a];
        const Node& nb = nodes[best_b];
        bool a_first = na.smallest < nb.smallest;
        nodes.push_back({std::min(na.smallest, nb.smallest), na.size + nb.size,
                         static_cast<int>(a_first ? best_a : best_b),
                         static_cast<int>(a_first ? best_b : best_a)});

        for (std::size_t other : active) {
            if (other == best_a || other == best_b) continue;
            double sa = sim[best_a * capacity + other];
            double sb = sim[best_b * capacity + other];
            double s;
            switch (linkage) {
                case Linkage::single: s = std::max(sa, sb); break;
                case Linkage::complete: s = std::min(sa, sb); break;
                case Linkage::average:
                default:
                    s = (sa * static_cast<double>(na.size) + sb * static_cast<double>(nb.size)) /
                        static_cast<double>(na.size + nb.size);
                    break;
            }
            sim[merged * capacity + other] = s;
            sim[other * capacity + merged] = s;
        }

        std::erase(active, best_a);
        std::erase(active, best_b);
        active.push_back(merged);
    }
    if (!snapped) snapshot = active;

    ClusterResult result;
    result.linkage = linkage;
    result.cut_similarity = cut_similarity;

    // Leaf order: in-order walk from the root, earlier-smallest child first.
    result.dendrogram_order.reserve(count);
    std::vector<std::size_t> stack{active.front()};
    while (!stack.empty()) {
        std::size_t id = stack.back();
        stack.pop_back();
        const Node& node = nodes[id];
        if (node.left < 0) {
            result.dendrogram_order.push_back(node.smallest);
        } else {
            stack.push_back(static_cast<std::size_t>(node.right));
            stack.push_back(static_cast<std::size_t>(node.left));
        }
    }

    // Dense cluster ids ordered by each cluster's smallest member.
    std::sort(snapshot.begin(), snapshot.end(),
              [&](std::size_t a, std::size_t b) { return nodes[a].smallest < nodes[b].smallest; });
    result.assignments.resize(count);
    for (std::size_t id = 0; id < snapshot.size(); ++id) {
        std::vector<std::size_t> walk{snapshot[id]};
        while (!walk.empty()) {
            const Node& node = nodes[walk.back()];
            walk.pop_back();
            if (node.left < 0) {
                result.assignments[node.smallest] = id;
            } else {
                walk.push_back(static_cast<std::size_t>(node.left));
                walk.push_back(static_cast<std::size_t>(node.right));
            }
        }
    }
    return result;
}

ClusterResult cluster(std::span<const NGramVector> samples, double cut_similarity,
                      Linkage linkage) {
    return cluster_matrix(pairwise_cosine(samples), samples.size(), cut_similarity, linkage);
}

SimilarityMatrix similarity_matrix(std::span<const NGramVector> samples, Linkage linkage) {
    auto pairwise = pairwise_cosine(samples);
    auto clusters = cluster_matrix(pairwise, samples.size(), kDefaultCut, linkage);

    SimilarityMatrix matrix;
    matrix.count = samples.size();
    matrix.order = clusters.dendrogram_order;
    matrix.values.resize(matrix.count * matrix.count);
    for (std::size_t r = 0; r < matrix.count; ++r)
        for (std::size_t c = 0; c < matrix.count; ++c)
            matrix.values[r * matrix.count + c] =
                pairwise[matrix.order[r] * matrix.count + matrix.order[c]];
    return matrix;
}

namespace {

void append_similarity(std::string& line, double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    line += buf;
}

}  // namespace

void write_matrix_csv(std::ostream& out, const SimilarityMatrix& matrix,
                      std::span<const std::string> ids) {
    if (ids.size() != matrix.count)
        throw std::invalid_argument("matrix csv: id count does not match matrix");
    std::string line = "id";
    for (auto idx : matrix.order) {
        line += ',';
        line += ids[idx];
    }
    out << line << '\n';
    for (std::size_t r = 0; r < matrix.count; ++r) {
        line = ids[matrix.order[r]];
        for (std::size_t c = 0; c < matrix.count; ++c) {
            line += ',';
            append_similarity(line, matrix.at(r, c));
        }
        out << line << '\n';
    }
}

void write_clusters_csv(std::ostream& out, const ClusterResult& result,
                        std::span<const std::string> ids) {
    if (ids.size() != result.assignments.size())
        throw std::invalid_argument("cluster csv: id count does not match assignments");
    out << "sample_id,cluster_id\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ',' << result.assignments[i]
                                                     << '\n';
}

}  // namespace minerscope::similarity
