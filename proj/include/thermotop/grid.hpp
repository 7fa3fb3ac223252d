#pragma once

#include <array>
#include <utility>
#include <vector>

namespace thermotop {

enum class Side { left, right, bottom, top };

/// Neighbor id reported for faces on the rectangle boundary.
inline constexpr int kDomainBoundary = -1;

struct FaceRef {
  int elem = 0;
  Side side = Side::left;
  int neighbor = kDomainBoundary;
  double length = 0.0;
  std::array<int, 2> nodes{};
};

/// Structured rectangular mesh of bilinear quads.
///
/// Nodes are numbered row-major with x fastest: node(i, j) = j * (nx + 1) + i.
/// Elements follow the same order, and each element lists its nodes
/// counterclockwise starting at the lower-left corner.
class Grid {
 public:
  Grid(int nx, int ny, double dx, double dy);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  int node_count() const { return (nx_ + 1) * (ny_ + 1); }
  int elem_count() const { return nx_ * ny_; }
  double elem_area() const { return dx_ * dy_; }
  double width() const { return nx_ * dx_; }
  double height() const { return ny_ * dy_; }

  int node(int i, int j) const { return j * (nx_ + 1) + i; }
  std::pair<int, int> node_coords(int n) const { return {n % (nx_ + 1), n / (nx_ + 1)}; }
  int elem(int i, int j) const { return j * nx_ + i; }
  std::pair<int, int> elem_coords(int e) const { return {e % nx_, e / nx_}; }

  const std::array<int, 4>& elem_nodes(int e) const { return connectivity_[e]; }
  std::array<double, 2> node_position(int n) const;
  std::array<double, 2> centroid(int e) const;

  /// Element across the given side, or kDomainBoundary.
  int neighbor(int e, Side side) const;

 private:
  int nx_;
  int ny_;
  double dx_;
  double dy_;
  std::vector<std::array<int, 4>> connectivity_;
};

Grid build_grid(int nx, int ny, double dx, double dy);

int scalar_dof(const Grid& grid, int node);
std::array<int, 2> vector_dofs(const Grid& grid, int node);

/// Four faces per element, in element order and left/right/bottom/top order
/// within an element.
std::vector<FaceRef> faces(const Grid& grid);

}  // namespace thermotop
