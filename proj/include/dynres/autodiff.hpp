#pragma once

// Minimal reverse-mode autodiff over dense row-major matrices.
//
// A Tape records primitive ops in insertion order (which is a topological
// order) and evaluates each op eagerly when it is recorded, so shape errors
// surface at construction. forward() re-evaluates every node from the current
// leaf and Param values; backward() propagates adjoints from a 1x1 root.
//
// relu'(0) = 0 and sqrt'(0) = 0 (subgradient conventions).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dynres::ad {

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}
  Matrix(int r, int c, std::vector<double> values);

  double &operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return data.size(); }
  std::span<double> span() { return data; }
  std::span<const double> span() const { return data; }
  bool same_shape(const Matrix &o) const { return rows == o.rows && cols == o.cols; }
  bool operator==(const Matrix &) const = default;
};

/// Trainable tensor. grad always has the shape of value.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, int rows, int cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols) {}
  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

using Index = std::shared_ptr<const std::vector<int>>;

inline Index make_index(std::vector<int> idx) {
  return std::make_shared<const std::vector<int>>(std::move(idx));
}

/// Handle to a tape node.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

class Tape {
 public:
  Var constant(Matrix m);
  /// Leaf reading `m` by reference on every forward(); `m` must outlive the tape.
  Var constant_ref(const Matrix &m);
  /// Leaf whose adjoint is kept and readable through grad().
  Var input(Matrix m);
  /// Leaf bound to a Param; backward() accumulates into Param::grad.
  Var param(Param &p);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  /// a (n x c) + row (1 x c), broadcast over rows.
  Var add_row(Var a, Var row);
  Var relu(Var a);
  Var square(Var a);
  Var sqrt(Var a);
  /// Sum of all entries, 1 x 1.
  Var sum(Var a);
  /// Per-row sum, n x 1.
  Var row_sum(Var a);
  /// out[r] = a[idx[r]].
  Var gather_rows(Var a, Index idx);
  /// out (out_rows x c), out[idx[r]] += a[r].
  Var scatter_add_rows(Var a, Index idx, int out_rows);
  Var concat_cols(Var a, Var b);

  const Matrix &value(Var v) const { return nodes_.at(v.id).value; }
  /// Adjoint from the last backward(); empty matrix if the node needed none.
  const Matrix &grad(Var v) const { return nodes_.at(v.id).grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Mutable access to an owned leaf (constant or input) for re-evaluation.
  Matrix &leaf_value(Var v);

  void forward();
  void backward(Var root);

  /// Hash of which side of its kink every relu/sqrt input currently sits on.
  /// Finite-difference checks compare it at x +- h to skip kink crossings.
  std::uint64_t kink_signature() const;

 private:
  enum class Op {
    Constant, ConstantRef, Input, Param,
    MatMul, Add, Sub, Mul, Scale, AddRow, Relu, Square, Sqrt, Sum, RowSum,
    Gather, ScatterAdd, ConcatCols
  };

  struct Node {
    Op op = Op::Constant;
    std::size_t a = 0;
    std::size_t b = 0;
    double scalar = 0.0;
    int out_rows = 0;
    Index index;
    const Matrix *ref = nullptr;
    ad::Param *param = nullptr;
    bool needs_grad = false;
    Matrix value;
    Matrix grad;
  };

  Var push(Node n);
  void eval(Node &n);
  void propagate(const Node &n);
  Node &at(Var v) { return nodes_.at(v.id); }

  std::vector<Node> nodes_;
};

/// max_i |analytic_i - numeric_i| / max(1, |analytic_i|), numeric by central
/// differences with step h.
double grad_check(const std::function<double(std::span<const double>)> &f,
                  std::span<const double> x, std::span<const double> analytic, double h);

/// Adam moments for a list of params.
class Adam {
 public:
  struct Options {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 0.0;  // global grad-norm clip, 0 = off
  };

  Adam(std::vector<Param *> params, Options opts);
  /// One update from the accumulated grads; does not zero them.
  void step();
  long steps() const { return t_; }
  void set_lr(double lr) { opts_.lr = lr; }

 private:
  std::vector<Param *> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  Options opts_;
  long t_ = 0;
};

}  // namespace dynres::ad
