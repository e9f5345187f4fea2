#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "elastoslab/errors.hpp"

namespace elastoslab {

/// Allocator that default-initializes (leaves doubles uninitialized) on
/// resize. Field outputs are always fully overwritten by the producing
/// operation, and the zero-fill of fresh multi-megabyte buffers dominated
/// the hot path.
template <class T, class A = std::allocator<T>>
struct default_init_allocator : A {
  template <class U>
  struct rebind {
    using other = default_init_allocator<U, typename std::allocator_traits<A>::template rebind_alloc<U>>;
  };
  using A::A;
  template <class U>
  void construct(U* ptr) noexcept(std::is_nothrow_default_constructible_v<U>) {
    ::new (static_cast<void*>(ptr)) U;
  }
  template <class U, class... Args>
  void construct(U* ptr, Args&&... args) {
    std::allocator_traits<A>::construct(static_cast<A&>(*this), ptr,
                                        std::forward<Args>(args)...);
  }
};

using FieldStorage = std::vector<double, default_init_allocator<double>>;

/// Which horizontal face of the slab.
enum class Face { bottom = 0, top = 1 };

inline const char* face_name(Face f) { return f == Face::bottom ? "bottom" : "top"; }

/// Outward normal third component (+1 on top, -1 on bottom).
inline double face_normal_sign(Face f) { return f == Face::top ? 1.0 : -1.0; }

/// Discrete T^2 x (0,1): n1 x n2 periodic horizontal samples, n3+1 vertical
/// nodes including both faces. Horizontal period is normalized to 1.
struct Grid {
  int n1 = 0, n2 = 0, n3 = 0;
  double h1 = 0.0, h2 = 0.0, h3 = 0.0;

  Grid() = default;
  Grid(int n1_, int n2_, int n3_) : n1(n1_), n2(n2_), n3(n3_) {
    auto pow2 = [](int n) { return n > 0 && (n & (n - 1)) == 0; };
    if (n1 < 8 || !pow2(n1)) throw ValidationError("n1", "must be a power of two >= 8");
    if (n2 < 8 || !pow2(n2)) throw ValidationError("n2", "must be a power of two >= 8");
    if (n3 < 8) throw ValidationError("n3", "must be >= 8");
    h1 = 1.0 / n1;
    h2 = 1.0 / n2;
    h3 = 1.0 / n3;
  }

  bool operator==(const Grid&) const = default;

  std::size_t layer_size() const { return std::size_t(n1) * n2; }
  std::size_t node_count() const { return layer_size() * (n3 + 1); }

  double x1(int i1) const { return i1 * h1; }
  double x2(int i2) const { return i2 * h2; }
  double x3(int i3) const { return i3 * h3; }

  /// Trapezoidal weight of vertical node i3 (times h3).
  double w3(int i3) const { return (i3 == 0 || i3 == n3) ? 0.5 * h3 : h3; }
};

/// Real samples on the slab, layer-contiguous: index (i1,i2,i3) lives at
/// layer i3, offset i1*n2+i2. Horizontal periodicity is implicit (no seam).
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0)
      : grid_(g), v_(g.node_count(), fill) {}

  const Grid& grid() const { return grid_; }

  double& operator()(int i1, int i2, int i3) { return v_[idx(i1, i2, i3)]; }
  double operator()(int i1, int i2, int i3) const { return v_[idx(i1, i2, i3)]; }

  double* layer(int i3) { return v_.data() + std::size_t(i3) * grid_.layer_size(); }
  const double* layer(int i3) const { return v_.data() + std::size_t(i3) * grid_.layer_size(); }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  std::size_t size() const { return v_.size(); }

  template <class F>
  static ScalarField sample(const Grid& g, F&& f) {
    ScalarField out(g);
    for (int i3 = 0; i3 <= g.n3; ++i3) {
      double* lay = out.layer(i3);
      const double z = g.x3(i3);
      for (int i1 = 0; i1 < g.n1; ++i1)
        for (int i2 = 0; i2 < g.n2; ++i2)
          lay[std::size_t(i1) * g.n2 + i2] = f(g.x1(i1), g.x2(i2), z);
    }
    return out;
  }

  ScalarField& operator+=(const ScalarField& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  ScalarField& operator*=(double a) {
    for (double& x : v_) x *= a;
    return *this;
  }
  /// this += a * o
  ScalarField& axpy(double a, const ScalarField& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += a * o.v_[i];
    return *this;
  }

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

  double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

  /// Allocated but not zero-filled; caller overwrites every node.
  static ScalarField uninitialized(const Grid& g) {
    ScalarField f;
    f.grid_ = g;
    f.v_.resize(g.node_count());
    return f;
  }

 private:
  std::size_t idx(int i1, int i2, int i3) const {
    return (std::size_t(i3) * grid_.n1 + i1) * grid_.n2 + i2;
  }
  Grid grid_;
  FieldStorage v_;
};

/// Three scalar components on one grid.
struct VectorField {
  std::array<ScalarField, 3> c;

  VectorField() = default;
  explicit VectorField(const Grid& g) : c{ScalarField(g), ScalarField(g), ScalarField(g)} {}

  const Grid& grid() const { return c[0].grid(); }
  ScalarField& operator[](int i) { return c[i]; }
  const ScalarField& operator[](int i) const { return c[i]; }

  static VectorField uninitialized(const Grid& g) {
    VectorField v;
    for (int i = 0; i < 3; ++i) v.c[i] = ScalarField::uninitialized(g);
    return v;
  }

  VectorField& operator+=(const VectorField& o) {
    for (int i = 0; i < 3; ++i) c[i] += o.c[i];
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    for (int i = 0; i < 3; ++i) c[i] -= o.c[i];
    return *this;
  }
  VectorField& operator*=(double a) {
    for (int i = 0; i < 3; ++i) c[i] *= a;
    return *this;
  }
  VectorField& axpy(double a, const VectorField& o) {
    for (int i = 0; i < 3; ++i) c[i].axpy(a, o.c[i]);
    return *this;
  }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }

  double max_abs() const {
    double m = 0.0;
    for (int i = 0; i < 3; ++i) m = std::max(m, c[i].max_abs());
    return m;
  }
};

/// 3x3 matrix of scalar components on one grid, row-major m(i,j).
struct MatrixField {
  std::array<ScalarField, 9> c;

  MatrixField() = default;
  explicit MatrixField(const Grid& g) {
    for (auto& f : c) f = ScalarField(g);
  }

  const Grid& grid() const { return c[0].grid(); }
  ScalarField& operator()(int i, int j) { return c[std::size_t(i) * 3 + j]; }
  const ScalarField& operator()(int i, int j) const { return c[std::size_t(i) * 3 + j]; }

  static MatrixField identity(const Grid& g) {
    MatrixField m(g);
    for (int i = 0; i < 3; ++i)
      for (std::size_t n = 0; n < m(i, i).size(); ++n) m(i, i).data()[n] = 1.0;
    return m;
  }

  MatrixField& operator-=(const MatrixField& o) {
    for (int i = 0; i < 9; ++i) c[i] -= o.c[i];
    return *this;
  }
  MatrixField& axpy(double a, const MatrixField& o) {
    for (int i = 0; i < 9; ++i) c[i].axpy(a, o.c[i]);
    return *this;
  }
  friend MatrixField operator-(MatrixField a, const MatrixField& b) { return a -= b; }

  double max_abs() const {
    double m = 0.0;
    for (const auto& f : c) m = std::max(m, f.max_abs());
    return m;
  }
};

/// Rank-3 array of scalar components, index (i,j,k) row-major.
struct Rank3Field {
  std::array<ScalarField, 27> c;

  Rank3Field() = default;
  explicit Rank3Field(const Grid& g) {
    for (auto& f : c) f = ScalarField(g);
  }
  const Grid& grid() const { return c[0].grid(); }
  ScalarField& operator()(int i, int j, int k) { return c[(std::size_t(i) * 3 + j) * 3 + k]; }
  const ScalarField& operator()(int i, int j, int k) const {
    return c[(std::size_t(i) * 3 + j) * 3 + k];
  }
};

/// Samples on one face of the slab (n1 x n2, periodic).
class BoundaryScalarField {
 public:
  BoundaryScalarField() = default;
  BoundaryScalarField(const Grid& g, Face face, double fill = 0.0)
      : grid_(g), face_(face), v_(g.layer_size(), fill) {}

  const Grid& grid() const { return grid_; }
  Face face() const { return face_; }

  double& operator()(int i1, int i2) { return v_[std::size_t(i1) * grid_.n2 + i2]; }
  double operator()(int i1, int i2) const { return v_[std::size_t(i1) * grid_.n2 + i2]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  std::size_t size() const { return v_.size(); }

  static BoundaryScalarField uninitialized(const Grid& g, Face face) {
    BoundaryScalarField f;
    f.grid_ = g;
    f.face_ = face;
    f.v_.resize(g.layer_size());
    return f;
  }

  template <class F>
  static BoundaryScalarField sample(const Grid& g, Face face, F&& f) {
    BoundaryScalarField out(g, face);
    for (int i1 = 0; i1 < g.n1; ++i1)
      for (int i2 = 0; i2 < g.n2; ++i2) out(i1, i2) = f(g.x1(i1), g.x2(i2));
    return out;
  }

  BoundaryScalarField& operator+=(const BoundaryScalarField& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  BoundaryScalarField& operator-=(const BoundaryScalarField& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  BoundaryScalarField& operator*=(double a) {
    for (double& x : v_) x *= a;
    return *this;
  }
  friend BoundaryScalarField operator+(BoundaryScalarField a, const BoundaryScalarField& b) {
    return a += b;
  }
  friend BoundaryScalarField operator-(BoundaryScalarField a, const BoundaryScalarField& b) {
    return a -= b;
  }
  friend BoundaryScalarField operator*(double s, BoundaryScalarField a) { return a *= s; }

  double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }

 private:
  Grid grid_;
  Face face_ = Face::bottom;
  FieldStorage v_;
};

/// o += a * b, elementwise; the workhorse of the nodewise contractions.
inline void fma_acc(double* __restrict o, const double* __restrict a,
                    const double* __restrict b, std::size_t n) {
  for (std::size_t p = 0; p < n; ++p) o[p] += a[p] * b[p];
}

/// Three boundary scalar components on one face.
struct BoundaryVectorField {
  std::array<BoundaryScalarField, 3> c;

  BoundaryVectorField() = default;
  BoundaryVectorField(const Grid& g, Face face)
      : c{BoundaryScalarField(g, face), BoundaryScalarField(g, face),
          BoundaryScalarField(g, face)} {}

  const Grid& grid() const { return c[0].grid(); }
  Face face() const { return c[0].face(); }
  BoundaryScalarField& operator[](int i) { return c[i]; }
  const BoundaryScalarField& operator[](int i) const { return c[i]; }
};

}  // namespace elastoslab
