#include <algorithm>
#include <limits>

#include "pm/neighbors.hpp"

namespace pm {

namespace {

// Shared by both backends: the tie-break contract needs bit-identical
// distances, so every path uses this one left-to-right scalar loop.
inline double sq_dist(const Eigen::MatrixXd& x, Eigen::Index a, Eigen::Index b) {
    double d = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double diff = x(a, c) - x(b, c);
        d += diff * diff;
    }
    return d;
}

using Cand = std::pair<double, int>;  // (squared distance, index), lexicographic order

void brute_row(const Eigen::MatrixXd& x, Eigen::Index i, int k, int* out) {
    const Eigen::Index n = x.rows();
    std::vector<Cand> cands;
    cands.reserve(n - 1);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        cands.emplace_back(sq_dist(x, i, j), static_cast<int>(j));
    }
    std::nth_element(cands.begin(), cands.begin() + (k - 1), cands.end());
    std::sort(cands.begin(), cands.begin() + k);
    for (int m = 0; m < k; ++m) out[m] = cands[m].second;
}

class KdTree {
public:
    KdTree(const Eigen::MatrixXd& x, int leaf_size = 16) : x_(x), leaf_size_(leaf_size) {
        perm_.resize(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) perm_[i] = static_cast<int>(i);
        root_ = build(0, static_cast<int>(x.rows()));
    }

    void query(Eigen::Index q, int k, int* out) const {
        std::vector<Cand> heap;  // max-heap, worst candidate on top
        heap.reserve(k + 1);
        search(root_, q, k, heap);
        std::sort_heap(heap.begin(), heap.end());
        for (int m = 0; m < k; ++m) out[m] = heap[m].second;
    }

private:
    struct Node {
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range into perm_
        int dim = 0;
        double split = 0.0;
        Eigen::VectorXd box_min, box_max;
    };

    int build(int begin, int end) {
        Node node;
        node.begin = begin;
        node.end = end;
        const Eigen::Index c = x_.cols();
        node.box_min = Eigen::VectorXd::Constant(c, std::numeric_limits<double>::infinity());
        node.box_max = Eigen::VectorXd::Constant(c, -std::numeric_limits<double>::infinity());
        for (int p = begin; p < end; ++p)
            for (Eigen::Index d = 0; d < c; ++d) {
                node.box_min[d] = std::min(node.box_min[d], x_(perm_[p], d));
                node.box_max[d] = std::max(node.box_max[d], x_(perm_[p], d));
            }
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(std::move(node));
        if (end - begin <= leaf_size_) return id;

        int dim = 0;
        double extent = -1.0;
        for (Eigen::Index d = 0; d < c; ++d) {
            const double e = nodes_[id].box_max[d] - nodes_[id].box_min[d];
            if (e > extent) {
                extent = e;
                dim = static_cast<int>(d);
            }
        }
        if (extent <= 0.0) return id;  // all points identical; keep as leaf

        const int mid = (begin + end) / 2;
        std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                         [&](int a, int b) {
                             const double va = x_(a, dim), vb = x_(b, dim);
                             return va < vb || (va == vb && a < b);
                         });
        nodes_[id].dim = dim;
        nodes_[id].split = x_(perm_[mid], dim);
        const int l = build(begin, mid);
        const int r = build(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    double box_min_sq_dist(const Node& node, Eigen::Index q) const {
        double d = 0.0;
        for (Eigen::Index c = 0; c < x_.cols(); ++c) {
            const double v = x_(q, c);
            double gap = 0.0;
            if (v < node.box_min[c])
                gap = node.box_min[c] - v;
            else if (v > node.box_max[c])
                gap = v - node.box_max[c];
            d += gap * gap;
        }
        return d;
    }

    void search(int id, Eigen::Index q, int k, std::vector<Cand>& heap) const {
        const Node& node = nodes_[id];
        if (static_cast<int>(heap.size()) == k &&
            box_min_sq_dist(node, q) > heap.front().first)
            return;  // strictly farther than the current worst; equal distances
                     // must still be visited for the index tie-break
        if (node.left < 0) {
            for (int p = node.begin; p < node.end; ++p) {
                const int j = perm_[p];
                if (j == static_cast<int>(q)) continue;
                const Cand cand(sq_dist(x_, q, j), j);
                if (static_cast<int>(heap.size()) < k) {
                    heap.push_back(cand);
                    std::push_heap(heap.begin(), heap.end());
                } else if (cand < heap.front()) {
                    std::pop_heap(heap.begin(), heap.end());
                    heap.back() = cand;
                    std::push_heap(heap.begin(), heap.end());
                }
            }
            return;
        }
        // nearer child first
        if (x_(q, node.dim) < node.split) {
            search(node.left, q, k, heap);
            search(node.right, q, k, heap);
        } else {
            search(node.right, q, k, heap);
            search(node.left, q, k, heap);
        }
    }

    const Eigen::MatrixXd& x_;
    int leaf_size_ = 16;
    int root_ = -1;
    std::vector<int> perm_;
    std::vector<Node> nodes_;
};

}  // namespace

NeighborGraph knn(const Eigen::Ref<const Eigen::MatrixXd>& features, int k, KnnBackend backend) {
    const Eigen::Index n = features.rows();
    if (k < 1) throw InvalidInputError("knn: k must be >= 1");
    if (n <= k)
        throw InvalidInputError("knn: need at least k+1 = " + std::to_string(k + 1) +
                                " points, got " + std::to_string(n));
    if (!features.allFinite()) throw InvalidInputError("knn: non-finite feature value");

    const Eigen::MatrixXd x = features;  // owned, col-major
    NeighborGraph g;
    g.k = k;
    g.n = n;
    g.indices.resize(static_cast<std::size_t>(n) * k);

    if (backend == KnnBackend::Auto)
        backend = (x.cols() <= 4 && n >= 256) ? KnnBackend::KdTree : KnnBackend::Brute;

    if (backend == KnnBackend::Brute) {
        parallel_for(static_cast<std::size_t>(n),
                     [&](std::size_t i) { brute_row(x, static_cast<Eigen::Index>(i), k, g.row(i)); });
    } else {
        KdTree tree(x);
        parallel_for(static_cast<std::size_t>(n),
                     [&](std::size_t i) { tree.query(static_cast<Eigen::Index>(i), k, g.row(i)); });
    }
    return g;
}

Eigen::MatrixXd pairwise_sq_dist(const Eigen::Ref<const Eigen::MatrixXd>& features) {
    if (!features.allFinite()) throw InvalidInputError("pairwise_sq_dist: non-finite feature value");
    const Eigen::MatrixXd x = features;
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = sq_dist(x, i, j);
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

}  // namespace pm
