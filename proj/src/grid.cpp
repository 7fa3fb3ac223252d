#include "thermotop/grid.hpp"

#include <string>

#include "thermotop/errors.hpp"

namespace thermotop {

Grid::Grid(int nx, int ny, double dx, double dy) : nx_(nx), ny_(ny), dx_(dx), dy_(dy) {
  if (nx < 1 || ny < 1) {
    throw InvalidArgument("grid element counts must be >= 1 (got " + std::to_string(nx) + "x" +
                          std::to_string(ny) + ")");
  }
  if (!(dx > 0.0) || !(dy > 0.0)) throw InvalidArgument("grid spacing must be positive");
  connectivity_.resize(static_cast<size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      connectivity_[elem(i, j)] = {node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
    }
  }
}

std::array<double, 2> Grid::node_position(int n) const {
  auto [i, j] = node_coords(n);
  return {i * dx_, j * dy_};
}

std::array<double, 2> Grid::centroid(int e) const {
  auto [i, j] = elem_coords(e);
  return {(i + 0.5) * dx_, (j + 0.5) * dy_};
}

int Grid::neighbor(int e, Side side) const {
  auto [i, j] = elem_coords(e);
  switch (side) {
    case Side::left:
      return i > 0 ? elem(i - 1, j) : kDomainBoundary;
    case Side::right:
      return i + 1 < nx_ ? elem(i + 1, j) : kDomainBoundary;
    case Side::bottom:
      return j > 0 ? elem(i, j - 1) : kDomainBoundary;
    case Side::top:
      return j + 1 < ny_ ? elem(i, j + 1) : kDomainBoundary;
  }
  return kDomainBoundary;
}

Grid build_grid(int nx, int ny, double dx, double dy) { return Grid(nx, ny, dx, dy); }

int scalar_dof(const Grid& grid, int node) {
  if (node < 0 || node >= grid.node_count()) {
    throw InvalidArgument("node " + std::to_string(node) + " out of range");
  }
  return node;
}

std::array<int, 2> vector_dofs(const Grid& grid, int node) {
  if (node < 0 || node >= grid.node_count()) {
    throw InvalidArgument("node " + std::to_string(node) + " out of range");
  }
  return {2 * node, 2 * node + 1};
}

std::vector<FaceRef> faces(const Grid& grid) {
  std::vector<FaceRef> out;
  out.reserve(4 * static_cast<size_t>(grid.elem_count()));
  for (int e = 0; e < grid.elem_count(); ++e) {
    const auto& n = grid.elem_nodes(e);
    out.push_back({e, Side::left, grid.neighbor(e, Side::left), grid.dy(), {n[3], n[0]}});
    out.push_back({e, Side::right, grid.neighbor(e, Side::right), grid.dy(), {n[1], n[2]}});
    out.push_back({e, Side::bottom, grid.neighbor(e, Side::bottom), grid.dx(), {n[0], n[1]}});
    out.push_back({e, Side::top, grid.neighbor(e, Side::top), grid.dx(), {n[2], n[3]}});
  }
  return out;
}

}  // namespace thermotop
