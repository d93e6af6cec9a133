#include "dynres/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dynres/kernels.hpp"

namespace dynres::ad {

Matrix::Matrix(int r, int c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != static_cast<std::size_t>(r) * c)
    throw std::invalid_argument("Matrix: value count does not match shape");
}

namespace {

[[noreturn]] void shape_error(const char *op, const Matrix &a, const Matrix &b) {
  throw std::invalid_argument(std::string("autodiff ") + op + ": shape mismatch (" +
                              std::to_string(a.rows) + "x" + std::to_string(a.cols) + " vs " +
                              std::to_string(b.rows) + "x" + std::to_string(b.cols) + ")");
}

void add_into(Matrix &dst, const Matrix &src, double s = 1.0) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += s * src.data[i];
}

}  // namespace

Var Tape::push(Node n) {
  eval(n);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Matrix m) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(m);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant_ref(const Matrix &m) {
  Node n;
  n.op = Op::ConstantRef;
  n.ref = &m;
  return push(std::move(n));
}

Var Tape::input(Matrix m) {
  Node n;
  n.op = Op::Input;
  n.needs_grad = true;
  n.value = std::move(m);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::param(ad::Param &p) {
  Node n;
  n.op = Op::Param;
  n.param = &p;
  n.needs_grad = true;
  return push(std::move(n));
}

Matrix &Tape::leaf_value(Var v) {
  Node &n = at(v);
  if (n.op != Op::Constant && n.op != Op::Input)
    throw std::logic_error("leaf_value: node is not an owned leaf");
  return n.value;
}

Var Tape::matmul(Var a, Var b) {
  const Matrix &A = value(a), &B = value(b);
  if (A.cols != B.rows) shape_error("matmul", A, B);
  Node n;
  n.op = Op::MatMul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

#define DYNRES_BINARY(NAME, OPCODE)                                 \
  Var Tape::NAME(Var a, Var b) {                                    \
    if (!value(a).same_shape(value(b))) shape_error(#NAME, value(a), value(b)); \
    Node n;                                                         \
    n.op = Op::OPCODE;                                              \
    n.a = a.id;                                                     \
    n.b = b.id;                                                     \
    n.needs_grad = at(a).needs_grad || at(b).needs_grad;            \
    return push(std::move(n));                                      \
  }

DYNRES_BINARY(add, Add)
DYNRES_BINARY(sub, Sub)
DYNRES_BINARY(mul, Mul)
#undef DYNRES_BINARY

Var Tape::scale(Var a, double s) {
  Node n;
  n.op = Op::Scale;
  n.a = a.id;
  n.scalar = s;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

Var Tape::add_row(Var a, Var row) {
  const Matrix &A = value(a), &R = value(row);
  if (R.rows != 1 || R.cols != A.cols) shape_error("add_row", A, R);
  Node n;
  n.op = Op::AddRow;
  n.a = a.id;
  n.b = row.id;
  n.needs_grad = at(a).needs_grad || at(row).needs_grad;
  return push(std::move(n));
}

#define DYNRES_UNARY(NAME, OPCODE)                  \
  Var Tape::NAME(Var a) {                           \
    Node n;                                         \
    n.op = Op::OPCODE;                              \
    n.a = a.id;                                     \
    n.needs_grad = at(a).needs_grad;                \
    return push(std::move(n));                      \
  }

DYNRES_UNARY(relu, Relu)
DYNRES_UNARY(square, Square)
DYNRES_UNARY(sqrt, Sqrt)
DYNRES_UNARY(sum, Sum)
DYNRES_UNARY(row_sum, RowSum)
#undef DYNRES_UNARY

Var Tape::gather_rows(Var a, Index idx) {
  const int rows = value(a).rows;
  for (int i : *idx)
    if (i < 0 || i >= rows) throw std::invalid_argument("gather_rows: index out of range");
  Node n;
  n.op = Op::Gather;
  n.a = a.id;
  n.index = std::move(idx);
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

Var Tape::scatter_add_rows(Var a, Index idx, int out_rows) {
  if (static_cast<int>(idx->size()) != value(a).rows)
    throw std::invalid_argument("scatter_add_rows: index length != row count");
  for (int i : *idx)
    if (i < 0 || i >= out_rows) throw std::invalid_argument("scatter_add_rows: index out of range");
  Node n;
  n.op = Op::ScatterAdd;
  n.a = a.id;
  n.index = std::move(idx);
  n.out_rows = out_rows;
  n.needs_grad = at(a).needs_grad;
  return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
  if (value(a).rows != value(b).rows) shape_error("concat_cols", value(a), value(b));
  Node n;
  n.op = Op::ConcatCols;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = at(a).needs_grad || at(b).needs_grad;
  return push(std::move(n));
}

void Tape::eval(Node &n) {
  switch (n.op) {
    case Op::Constant:
    case Op::Input:
      return;
    case Op::ConstantRef:
      n.value = *n.ref;
      return;
    case Op::Param:
      n.value = n.param->value;
      return;
    default:
      break;
  }
  const Matrix &A = nodes_[n.a].value;
  Matrix &out = n.value;
  switch (n.op) {
    case Op::MatMul: {
      const Matrix &B = nodes_[n.b].value;
      out = Matrix(A.rows, B.cols);
      kernels::gemm(A.span(), B.span(), out.span(), A.rows, A.cols, B.cols);
      break;
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul: {
      const Matrix &B = nodes_[n.b].value;
      out = Matrix(A.rows, A.cols);
      for (std::size_t i = 0; i < A.data.size(); ++i)
        out.data[i] = n.op == Op::Add   ? A.data[i] + B.data[i]
                      : n.op == Op::Sub ? A.data[i] - B.data[i]
                                        : A.data[i] * B.data[i];
      break;
    }
    case Op::Scale:
      out = A;
      for (double &x : out.data) x *= n.scalar;
      break;
    case Op::AddRow: {
      const Matrix &R = nodes_[n.b].value;
      out = A;
      for (int r = 0; r < A.rows; ++r)
        for (int c = 0; c < A.cols; ++c) out(r, c) += R.data[c];
      break;
    }
    case Op::Relu:
      out = A;
      for (double &x : out.data) x = x > 0.0 ? x : 0.0;
      break;
    case Op::Square:
      out = A;
      for (double &x : out.data) x = x * x;
      break;
    case Op::Sqrt:
      out = A;
      for (double &x : out.data) x = std::sqrt(x);
      break;
    case Op::Sum: {
      double s = 0.0;
      for (double x : A.data) s += x;
      out = Matrix(1, 1, s);
      break;
    }
    case Op::RowSum:
      out = Matrix(A.rows, 1);
      for (int r = 0; r < A.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < A.cols; ++c) s += A(r, c);
        out.data[r] = s;
      }
      break;
    case Op::Gather: {
      const auto &idx = *n.index;
      out = Matrix(static_cast<int>(idx.size()), A.cols);
      for (std::size_t r = 0; r < idx.size(); ++r)
        std::copy_n(A.data.begin() + static_cast<long>(idx[r]) * A.cols, A.cols,
                    out.data.begin() + static_cast<long>(r) * A.cols);
      break;
    }
    case Op::ScatterAdd: {
      const auto &idx = *n.index;
      out = Matrix(n.out_rows, A.cols);
      for (std::size_t r = 0; r < idx.size(); ++r) {
        double *dst = out.data.data() + static_cast<long>(idx[r]) * A.cols;
        const double *src = A.data.data() + static_cast<long>(r) * A.cols;
        for (int c = 0; c < A.cols; ++c) dst[c] += src[c];
      }
      break;
    }
    case Op::ConcatCols: {
      const Matrix &B = nodes_[n.b].value;
      out = Matrix(A.rows, A.cols + B.cols);
      for (int r = 0; r < A.rows; ++r) {
        std::copy_n(&A.data[static_cast<std::size_t>(r) * A.cols], A.cols, &out(r, 0));
        std::copy_n(&B.data[static_cast<std::size_t>(r) * B.cols], B.cols, &out(r, A.cols));
      }
      break;
    }
    default:
      throw std::logic_error("autodiff: unknown op");
  }
}

void Tape::forward() {
  for (Node &n : nodes_) eval(n);
}

void Tape::propagate(const Node &n) {
  const Matrix &G = n.grad;
  Node &na = nodes_[n.a];
  auto grad_a = [&]() -> Matrix & { return na.grad; };
  switch (n.op) {
    case Op::MatMul: {
      Node &nb = nodes_[n.b];
      const Matrix &A = na.value, &B = nb.value;
      if (na.needs_grad) kernels::gemm_a_bt_acc(G.span(), B.span(), na.grad.span(), A.rows, B.cols, A.cols);
      if (nb.needs_grad) kernels::gemm_at_b_acc(A.span(), G.span(), nb.grad.span(), A.rows, A.cols, B.cols);
      break;
    }
    case Op::Add:
    case Op::Sub: {
      Node &nb = nodes_[n.b];
      if (na.needs_grad) add_into(grad_a(), G);
      if (nb.needs_grad) add_into(nb.grad, G, n.op == Op::Add ? 1.0 : -1.0);
      break;
    }
    case Op::Mul: {
      Node &nb = nodes_[n.b];
      if (na.needs_grad)
        for (std::size_t i = 0; i < G.data.size(); ++i) na.grad.data[i] += G.data[i] * nb.value.data[i];
      if (nb.needs_grad)
        for (std::size_t i = 0; i < G.data.size(); ++i) nb.grad.data[i] += G.data[i] * na.value.data[i];
      break;
    }
    case Op::Scale:
      add_into(grad_a(), G, n.scalar);
      break;
    case Op::AddRow: {
      Node &nb = nodes_[n.b];
      if (na.needs_grad) add_into(grad_a(), G);
      if (nb.needs_grad)
        for (int r = 0; r < G.rows; ++r)
          for (int c = 0; c < G.cols; ++c) nb.grad.data[c] += G(r, c);
      break;
    }
    case Op::Relu:
      for (std::size_t i = 0; i < G.data.size(); ++i)
        if (na.value.data[i] > 0.0) na.grad.data[i] += G.data[i];
      break;
    case Op::Square:
      for (std::size_t i = 0; i < G.data.size(); ++i) na.grad.data[i] += 2.0 * na.value.data[i] * G.data[i];
      break;
    case Op::Sqrt:
      for (std::size_t i = 0; i < G.data.size(); ++i)
        if (n.value.data[i] > 0.0) na.grad.data[i] += 0.5 * G.data[i] / n.value.data[i];
      break;
    case Op::Sum:
      for (double &g : na.grad.data) g += G.data[0];
      break;
    case Op::RowSum:
      for (int r = 0; r < na.grad.rows; ++r)
        for (int c = 0; c < na.grad.cols; ++c) na.grad(r, c) += G.data[r];
      break;
    case Op::Gather: {
      const auto &idx = *n.index;
      const int cols = G.cols;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        double *dst = na.grad.data.data() + static_cast<long>(idx[r]) * cols;
        const double *src = G.data.data() + static_cast<long>(r) * cols;
        for (int c = 0; c < cols; ++c) dst[c] += src[c];
      }
      break;
    }
    case Op::ScatterAdd: {
      const auto &idx = *n.index;
      const int cols = G.cols;
      for (std::size_t r = 0; r < idx.size(); ++r) {
        double *dst = na.grad.data.data() + static_cast<long>(r) * cols;
        const double *src = G.data.data() + static_cast<long>(idx[r]) * cols;
        for (int c = 0; c < cols; ++c) dst[c] += src[c];
      }
      break;
    }
    case Op::ConcatCols: {
      Node &nb = nodes_[n.b];
      const int ca = na.value.cols, cb = nb.value.cols;
      for (int r = 0; r < G.rows; ++r) {
        if (na.needs_grad)
          for (int c = 0; c < ca; ++c) na.grad(r, c) += G(r, c);
        if (nb.needs_grad)
          for (int c = 0; c < cb; ++c) nb.grad(r, c) += G(r, ca + c);
      }
      break;
    }
    default:
      break;
  }
}

void Tape::backward(Var root) {
  Node &r = at(root);
  if (r.value.rows != 1 || r.value.cols != 1)
    throw std::invalid_argument("backward: root must be a 1x1 scalar");
  for (Node &n : nodes_) {
    if (n.needs_grad) {
      if (n.grad.same_shape(n.value))
        std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
      else
        n.grad = Matrix(n.value.rows, n.value.cols);
    } else {
      n.grad = Matrix();
    }
  }
  if (!r.needs_grad) return;
  r.grad.data[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node &n = nodes_[i];
    if (!n.needs_grad) continue;
    switch (n.op) {
      case Op::Param:
        add_into(n.param->grad, n.grad);
        break;
      case Op::Constant:
      case Op::ConstantRef:
      case Op::Input:
        break;
      default:
        propagate(n);
    }
  }
}

std::uint64_t Tape::kink_signature() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Node &n : nodes_) {
    if (n.op != Op::Relu && n.op != Op::Sqrt) continue;
    for (double x : nodes_[n.a].value.data) {
      h ^= x > 0.0 ? 1u : 2u;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

double grad_check(const std::function<double(std::span<const double>)> &f,
                  std::span<const double> x, std::span<const double> analytic, double h) {
  if (analytic.size() != x.size()) throw std::invalid_argument("grad_check: size mismatch");
  std::vector<double> xp(x.begin(), x.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    const double numeric = (fp - fm) / (2.0 * h);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

Adam::Adam(std::vector<Param *> params, Options opts) : params_(std::move(params)), opts_(opts) {
  for (Param *p : params_) {
    m_.emplace_back(p->value.rows, p->value.cols);
    v_.emplace_back(p->value.rows, p->value.cols);
  }
}

void Adam::step() {
  ++t_;
  double scale = 1.0;
  if (opts_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const Param *p : params_)
      for (double g : p->grad.data) sq += g * g;
    const double nrm = std::sqrt(sq);
    if (nrm > opts_.clip_norm) scale = opts_.clip_norm / nrm;
  }
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Param &p = *params_[k];
    auto &m = m_[k].data;
    auto &v = v_[k].data;
    for (std::size_t i = 0; i < p.value.data.size(); ++i) {
      const double g = p.grad.data[i] * scale;
      m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g;
      v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.value.data[i] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
    }
  }
}

}  // namespace dynres::ad
