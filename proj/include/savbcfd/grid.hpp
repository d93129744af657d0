#pragma once

// Staggered (block-centered) grid on a rectangle with homogeneous Neumann
// boundaries. Cell values live at cell centers, differences live at
// interior edge midpoints; boundary edges are structurally zero and never
// stored.
//
// Storage convention: a cell field is an Eigen column vector of length
// Nx*Ny with (i, j) -> j*Nx + i (zero-based), i.e. the column-major layout
// of an Nx-by-Ny matrix. An x-edge field has (Nx-1)*Ny entries laid out as an
// (Nx-1)-by-Ny matrix, a y-edge field Nx*(Ny-1) entries as Nx-by-(Ny-1).

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace savbcfd {

template <typename Scalar>
using Field = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Read-only field argument. Binds to fields and to Eigen expressions; the
/// scalar type is deduced from the accompanying Grid only.
template <typename Scalar>
using FieldIn = typename std::type_identity<
    Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>>::type;

template <typename Scalar> using CellField = Field<Scalar>;
template <typename Scalar> using EdgeFieldX = Field<Scalar>;
template <typename Scalar> using EdgeFieldY = Field<Scalar>;

/// A pair of edge fields, the discrete analogue of a vector field.
template <typename Scalar>
struct EdgePair {
  EdgeFieldX<Scalar> x;
  EdgeFieldY<Scalar> y;
};

template <typename Scalar>
class Grid {
 public:
  Grid(int nx, int ny, Scalar x0 = 0, Scalar x1 = 1, Scalar y0 = 0,
       Scalar y1 = 1)
      : nx_(nx), ny_(ny), x0_(x0), x1_(x1), y0_(y0), y1_(y1) {
    if (nx < 1 || ny < 1)
      throw std::invalid_argument("Grid: Nx and Ny must be positive");
    if (!(x1 > x0) || !(y1 > y0))
      throw std::invalid_argument("Grid: domain bounds must be increasing");
    hx_ = (x1 - x0) / Scalar(nx);
    hy_ = (y1 - y0) / Scalar(ny);
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  Scalar hx() const { return hx_; }
  Scalar hy() const { return hy_; }
  Scalar x0() const { return x0_; }
  Scalar x1() const { return x1_; }
  Scalar y0() const { return y0_; }
  Scalar y1() const { return y1_; }
  Scalar area() const { return (x1_ - x0_) * (y1_ - y0_); }
  Scalar cell_area() const { return hx_ * hy_; }

  Eigen::Index cells() const { return Eigen::Index(nx_) * ny_; }
  Eigen::Index x_edges() const { return Eigen::Index(nx_ - 1) * ny_; }
  Eigen::Index y_edges() const { return Eigen::Index(nx_) * (ny_ - 1); }

  /// Zero-based cell (i, j) to storage index.
  Eigen::Index index(int i, int j) const { return Eigen::Index(j) * nx_ + i; }

  // Zero-based: cell i has center x0 + (i + 1/2) hx.
  Scalar xc(int i) const { return x0_ + (Scalar(i) + Scalar(0.5)) * hx_; }
  Scalar yc(int j) const { return y0_ + (Scalar(j) + Scalar(0.5)) * hy_; }
  // Interior edge k sits between cells k and k+1.
  Scalar xe(int k) const { return x0_ + Scalar(k + 1) * hx_; }
  Scalar ye(int k) const { return y0_ + Scalar(k + 1) * hy_; }

  /// Grid with twice as many cells per axis on the same domain.
  Grid refined() const { return Grid(2 * nx_, 2 * ny_, x0_, x1_, y0_, y1_); }

  bool operator==(const Grid& o) const {
    return nx_ == o.nx_ && ny_ == o.ny_ && x0_ == o.x0_ && x1_ == o.x1_ &&
           y0_ == o.y0_ && y1_ == o.y1_;
  }

 private:
  int nx_, ny_;
  Scalar x0_, x1_, y0_, y1_;
  Scalar hx_{}, hy_{};
};

namespace detail {

inline void require_size(Eigen::Index got, Eigen::Index want,
                         const char* what) {
  if (got != want)
    throw std::invalid_argument(std::string(what) + ": expected " +
                                std::to_string(want) + " entries, got " +
                                std::to_string(got));
}

template <typename Scalar>
auto as_matrix(const Eigen::Ref<const Field<Scalar>>& f, Eigen::Index rows,
               Eigen::Index cols) {
  return Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>(
      f.data(), rows, cols);
}

template <typename Scalar>
auto as_matrix(const Field<Scalar>& f, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>(
      f.data(), rows, cols);
}

template <typename Scalar>
auto as_matrix(Field<Scalar>& f, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>(
      f.data(), rows, cols);
}

}  // namespace detail

/// Samples f(x, y) at cell centers.
template <typename Scalar, typename Fn>
CellField<Scalar> sample(const Grid<Scalar>& grid, Fn&& f) {
  CellField<Scalar> g(grid.cells());
  for (int j = 0; j < grid.ny(); ++j)
    for (int i = 0; i < grid.nx(); ++i)
      g[grid.index(i, j)] = f(grid.xc(i), grid.yc(j));
  return g;
}

template <typename Scalar>
CellField<Scalar> constant(const Grid<Scalar>& grid, Scalar value) {
  return CellField<Scalar>::Constant(grid.cells(), value);
}

/// [dx g]_{i+1/2,j} = (g_{i+1,j} - g_{i,j}) / hx on interior edges.
template <typename Scalar>
EdgeFieldX<Scalar> dx(FieldIn<Scalar> g, const Grid<Scalar>& grid) {
  detail::require_size(g.size(), grid.cells(), "dx");
  const int nx = grid.nx(), ny = grid.ny();
  EdgeFieldX<Scalar> w(grid.x_edges());
  auto G = detail::as_matrix(g, nx, ny);
  detail::as_matrix(w, nx - 1, ny) =
      (G.bottomRows(nx - 1) - G.topRows(nx - 1)) / grid.hx();
  return w;
}

/// [dy g]_{i,j+1/2} = (g_{i,j+1} - g_{i,j}) / hy on interior edges.
template <typename Scalar>
EdgeFieldY<Scalar> dy(FieldIn<Scalar> g, const Grid<Scalar>& grid) {
  detail::require_size(g.size(), grid.cells(), "dy");
  const int nx = grid.nx(), ny = grid.ny();
  EdgeFieldY<Scalar> w(grid.y_edges());
  auto G = detail::as_matrix(g, nx, ny);
  detail::as_matrix(w, nx, ny - 1) =
      (G.rightCols(ny - 1) - G.leftCols(ny - 1)) / grid.hy();
  return w;
}

template <typename Scalar>
EdgePair<Scalar> grad(FieldIn<Scalar> g, const Grid<Scalar>& grid) {
  return {dx(g, grid), dy(g, grid)};
}

/// [Dx w]_{i,j} = (w_{i+1/2,j} - w_{i-1/2,j}) / hx with zero boundary fluxes.
template <typename Scalar>
CellField<Scalar> Dx(FieldIn<Scalar> w, const Grid<Scalar>& grid) {
  detail::require_size(w.size(), grid.x_edges(), "Dx");
  const int nx = grid.nx(), ny = grid.ny();
  CellField<Scalar> g(grid.cells());
  auto W = detail::as_matrix(w, nx - 1, ny);
  auto G = detail::as_matrix(g, nx, ny);
  if (nx == 1) return CellField<Scalar>::Zero(grid.cells());
  const Scalar inv = Scalar(1) / grid.hx();
  G.row(0) = W.row(0) * inv;
  if (nx > 2)
    G.middleRows(1, nx - 2) = (W.bottomRows(nx - 2) - W.topRows(nx - 2)) * inv;
  G.row(nx - 1) = -W.row(nx - 2) * inv;
  return g;
}

/// [Dy w]_{i,j} = (w_{i,j+1/2} - w_{i,j-1/2}) / hy with zero boundary fluxes.
template <typename Scalar>
CellField<Scalar> Dy(FieldIn<Scalar> w, const Grid<Scalar>& grid) {
  detail::require_size(w.size(), grid.y_edges(), "Dy");
  const int nx = grid.nx(), ny = grid.ny();
  CellField<Scalar> g(grid.cells());
  auto W = detail::as_matrix(w, nx, ny - 1);
  auto G = detail::as_matrix(g, nx, ny);
  if (ny == 1) return CellField<Scalar>::Zero(grid.cells());
  const Scalar inv = Scalar(1) / grid.hy();
  G.col(0) = W.col(0) * inv;
  if (ny > 2)
    G.middleCols(1, ny - 2) = (W.rightCols(ny - 2) - W.leftCols(ny - 2)) * inv;
  G.col(ny - 1) = -W.col(ny - 2) * inv;
  return g;
}

template <typename Scalar>
CellField<Scalar> div(const EdgePair<Scalar>& v, const Grid<Scalar>& grid) {
  return Dx(v.x, grid) + Dy(v.y, grid);
}

/// Five-point Neumann Laplacian Dx dx + Dy dy.
template <typename Scalar>
CellField<Scalar> laplacian_bcfd(FieldIn<Scalar> g,
                                 const Grid<Scalar>& grid) {
  return Dx(dx(g, grid), grid) + Dy(dy(g, grid), grid);
}

/// (f, g)_m: cell-area weighted sum over all cells.
template <typename Scalar>
Scalar inner_m(FieldIn<Scalar> f, FieldIn<Scalar> g,
               const Grid<Scalar>& grid) {
  detail::require_size(f.size(), grid.cells(), "inner_m");
  detail::require_size(g.size(), grid.cells(), "inner_m");
  return grid.cell_area() * f.dot(g);
}

template <typename Scalar>
Scalar inner_x(FieldIn<Scalar> f, FieldIn<Scalar> g,
               const Grid<Scalar>& grid) {
  detail::require_size(f.size(), grid.x_edges(), "inner_x");
  detail::require_size(g.size(), grid.x_edges(), "inner_x");
  return grid.cell_area() * f.dot(g);
}

template <typename Scalar>
Scalar inner_y(FieldIn<Scalar> f, FieldIn<Scalar> g,
               const Grid<Scalar>& grid) {
  detail::require_size(f.size(), grid.y_edges(), "inner_y");
  detail::require_size(g.size(), grid.y_edges(), "inner_y");
  return grid.cell_area() * f.dot(g);
}

template <typename Scalar>
Scalar inner_tm(const EdgePair<Scalar>& v, const EdgePair<Scalar>& r,
                const Grid<Scalar>& grid) {
  return inner_x(v.x, r.x, grid) + inner_y(v.y, r.y, grid);
}

template <typename Scalar>
Scalar norm_m(FieldIn<Scalar> f, const Grid<Scalar>& grid) {
  return std::sqrt(inner_m(f, f, grid));
}

template <typename Scalar>
Scalar norm_x(FieldIn<Scalar> f, const Grid<Scalar>& grid) {
  return std::sqrt(inner_x(f, f, grid));
}

template <typename Scalar>
Scalar norm_y(FieldIn<Scalar> f, const Grid<Scalar>& grid) {
  return std::sqrt(inner_y(f, f, grid));
}

template <typename Scalar>
Scalar norm_tm(const EdgePair<Scalar>& v, const Grid<Scalar>& grid) {
  return std::sqrt(inner_tm(v, v, grid));
}

/// ||d g||_TM, the discrete H1 seminorm.
template <typename Scalar>
Scalar grad_norm(FieldIn<Scalar> g, const Grid<Scalar>& grid) {
  return norm_tm(grad(g, grid), grid);
}

/// (g, 1)_m
template <typename Scalar>
Scalar mass(FieldIn<Scalar> g, const Grid<Scalar>& grid) {
  detail::require_size(g.size(), grid.cells(), "mass");
  return grid.cell_area() * g.sum();
}

/// Largest eigenvalue magnitude of the Neumann Laplacian, 4/hx^2 + 4/hy^2
/// bounds it from above.
template <typename Scalar>
Scalar laplacian_norm_bound(const Grid<Scalar>& grid) {
  return Scalar(4) / (grid.hx() * grid.hx()) +
         Scalar(4) / (grid.hy() * grid.hy());
}

}  // namespace savbcfd
