#include "normest/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace normest {

KdTree::KdTree(const PointCloud& cloud, int leaf_size)
    : KdTree(cloud.points, leaf_size) {}

KdTree::KdTree(std::vector<Vec3> points, int leaf_size)
    : points_(std::move(points)), leaf_size_(std::max(1, leaf_size)) {
  if (points_.empty()) throw std::invalid_argument("KdTree: empty point set");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * points_.size() / static_cast<size_t>(leaf_size_) + 2);
  root_ = build(0, static_cast<int>(points_.size()));
}

int KdTree::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{});
  if (end - begin <= leaf_size_) {
    nodes_[static_cast<size_t>(id)].begin = begin;
    nodes_[static_cast<size_t>(id)].end = end;
    return id;
  }
  // Split along the axis of largest extent, at the median.
  Vec3 lo = points_[static_cast<size_t>(order_[static_cast<size_t>(begin)])];
  Vec3 hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    const Vec3& p = points_[static_cast<size_t>(order_[static_cast<size_t>(i)])];
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double ca = points_[static_cast<size_t>(a)][axis];
                     const double cb = points_[static_cast<size_t>(b)][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  Node& n = nodes_[static_cast<size_t>(id)];
  n.axis = axis;
  n.split = points_[static_cast<size_t>(order_[static_cast<size_t>(mid)])][axis];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[static_cast<size_t>(id)].left = left;
  nodes_[static_cast<size_t>(id)].right = right;
  return id;
}

namespace {

struct Candidate {
  double d2;
  int index;
  bool operator<(const Candidate& o) const {  // heap: worst on top
    return d2 < o.d2 || (d2 == o.d2 && index < o.index);
  }
};

}  // namespace

std::vector<Neighbor> KdTree::knn(const Vec3& query, int k) const {
  if (k < 1) throw std::invalid_argument("knn: k must be >= 1, got " + std::to_string(k));
  const int want = std::min<int>(k, static_cast<int>(points_.size()));

  // Max-heap of the current best `want` candidates, worst first.
  std::vector<Candidate> heap;
  heap.reserve(static_cast<size_t>(want) + 1);

  auto consider = [&](int idx) {
    const double d2 = (points_[static_cast<size_t>(idx)] - query).squaredNorm();
    Candidate c{d2, idx};
    if (static_cast<int>(heap.size()) < want) {
      heap.push_back(c);
      std::push_heap(heap.begin(), heap.end());
    } else if (c < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = c;
      std::push_heap(heap.begin(), heap.end());
    }
  };

  // Iterative traversal, nearer child first. Prune only on strict >, so
  // boundary ties are still visited and index tie-breaks stay exact.
  std::vector<int> stack{root_};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const Node& n = nodes_[static_cast<size_t>(id)];
    if (n.axis < 0) {
      for (int i = n.begin; i < n.end; ++i) consider(order_[static_cast<size_t>(i)]);
      continue;
    }
    const double delta = query[n.axis] - n.split;
    const int near = delta < 0.0 ? n.left : n.right;
    const int far = delta < 0.0 ? n.right : n.left;
    if (static_cast<int>(heap.size()) < want || delta * delta <= heap.front().d2) {
      stack.push_back(far);
    }
    stack.push_back(near);
  }

  std::sort(heap.begin(), heap.end());
  std::vector<Neighbor> out;
  out.reserve(heap.size());
  for (const Candidate& c : heap) out.push_back(Neighbor{c.index, std::sqrt(c.d2)});
  return out;
}

Patch extract_patch(const PointCloud& cloud, const KdTree& index, int query_index, int n_points) {
  if (n_points < 1) throw std::invalid_argument("extract_patch: patch size must be >= 1");
  if (static_cast<size_t>(n_points) > cloud.size()) {
    throw std::invalid_argument("extract_patch: patch size " + std::to_string(n_points) +
                                " exceeds cloud size " + std::to_string(cloud.size()));
  }
  if (query_index < 0 || static_cast<size_t>(query_index) >= cloud.size()) {
    throw std::invalid_argument("extract_patch: query index out of range");
  }

  const Vec3 query = cloud.points[static_cast<size_t>(query_index)];
  const std::vector<Neighbor> nbrs = index.knn(query, n_points);

  Patch patch;
  patch.query_index = query_index;
  patch.radius = nbrs.back().distance;
  if (!(patch.radius > 0.0)) {
    throw NumericError("extract_patch: degenerate patch at index " +
                       std::to_string(query_index) + " (all points coincident, radius 0)");
  }

  std::vector<Vec3> scaled;
  scaled.reserve(nbrs.size());
  patch.source_indices.reserve(nbrs.size());
  for (const Neighbor& nb : nbrs) {
    scaled.push_back((cloud.points[static_cast<size_t>(nb.index)] - query) / patch.radius);
    patch.source_indices.push_back(nb.index);
  }

  // Covariance about the patch mean (the query stays the coordinate origin).
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : scaled) mean += p;
  mean /= static_cast<double>(scaled.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : scaled) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  // Eigen orders eigenvalues ascending: col 2 = largest -> local x, col 0 = smallest -> local z.
  Vec3 ax = es.eigenvectors().col(2);
  Vec3 ay = es.eigenvectors().col(1);
  // Fix each axis sign so its largest-magnitude component is positive; the
  // third axis completes the right-handed frame (det +1).
  auto fix_sign = [](Vec3& v) {
    int imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0.0) v = -v;
  };
  fix_sign(ax);
  fix_sign(ay);
  const Vec3 az = ax.cross(ay);

  patch.frame.row(0) = ax.transpose();
  patch.frame.row(1) = ay.transpose();
  patch.frame.row(2) = az.transpose();

  patch.local_points.reserve(scaled.size());
  for (const Vec3& p : scaled) patch.local_points.push_back(patch.frame * p);

  if (cloud.has_normals()) {
    patch.gt_normal_local = patch.frame * cloud.normals[static_cast<size_t>(query_index)];
  }
  return patch;
}

double unoriented_angle(const Vec3& a, const Vec3& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na < 1e-12 || nb < 1e-12) {
    throw std::invalid_argument("unoriented_angle: zero-length input");
  }
  if (std::abs(na - 1.0) > 1e-6 || std::abs(nb - 1.0) > 1e-6) {
    throw std::invalid_argument("unoriented_angle: inputs must be unit length (got " +
                                std::to_string(na) + ", " + std::to_string(nb) + ")");
  }
  // atan2 keeps full precision at both ends of the range; acos(|dot|) cannot
  // resolve angles below ~1e-6 degrees.
  return deg_from_rad(std::atan2(a.cross(b).norm(), std::abs(a.dot(b))));
}

}  // namespace normest
