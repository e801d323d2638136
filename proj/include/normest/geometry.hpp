#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "normest/common.hpp"

namespace normest {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // ground truth when available; empty otherwise

  bool has_normals() const { return !normals.empty(); }
  size_t size() const { return points.size(); }
};

struct Neighbor {
  int index;
  double distance;
};

// k-d tree with axis-median splits. Immutable after construction; concurrent
// queries are safe. Results match an exhaustive linear scan exactly: sorted by
// nondecreasing Euclidean distance, ties broken by lower point index.
class KdTree {
 public:
  explicit KdTree(const PointCloud& cloud, int leaf_size = 16);
  explicit KdTree(std::vector<Vec3> points, int leaf_size = 16);

  std::vector<Neighbor> knn(const Vec3& query, int k) const;
  int size() const { return static_cast<int>(points_.size()); }

 private:
  struct Node {
    int axis = -1;        // -1 marks a leaf
    double split = 0.0;
    int begin = 0, end = 0;  // range into order_ (leaves)
    int left = -1, right = -1;
  };

  int build(int begin, int end);

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
  int leaf_size_;
};

// A query point with its N nearest neighbors, centered at the query, scaled by
// the patch radius and rotated into the PCA frame of the patch. Points are
// ordered by nondecreasing distance from the query (the query itself first).
struct Patch {
  int query_index = -1;
  std::vector<Vec3> local_points;
  double radius = 0.0;                   // world units
  Mat3 frame = Mat3::Identity();         // world -> local rotation, rows are the local axes
  std::optional<Vec3> gt_normal_local;
  std::vector<int> source_indices;       // into the source cloud, aligned with local_points

  int size() const { return static_cast<int>(local_points.size()); }
};

// Gathers the N nearest neighbors of cloud.points[query_index] (query included),
// centers at the query, scales by 1/radius and rotates into the covariance
// eigenframe (descending eigenvalues; smallest-eigenvalue axis is local z).
Patch extract_patch(const PointCloud& cloud, const KdTree& index, int query_index, int n_points);

// Angle between two unit vectors with sign ignored on both sides, in [0, 90] degrees.
double unoriented_angle(const Vec3& a, const Vec3& b);

}  // namespace normest
