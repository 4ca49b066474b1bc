// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/core/ops.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "sfc/core/tape.h"

namespace sfc::ops {
namespace {

using std::int64_t;
using std::size_t;

DType Promote(const Tensor& a, const Tensor& b) {
  return (a.dtype() == DType::kF64 || b.dtype() == DType::kF64) ? DType::kF64
                                                                : DType::kF32;
}

int NormalizeAxis(int axis, int rank, const char* op) {
  int a = axis < 0 ? axis + rank : axis;
  if (a < 0 || a >= rank) {
    throw ShapeError(fmt::format("{}: axis {} invalid for rank {}", op, axis, rank));
  }
  return a;
}

// Splits a shape around `axis` into (outer, extent, inner).
struct AxisSplit {
  int64_t outer = 1;
  int64_t extent = 1;
  int64_t inner = 1;
};

AxisSplit SplitAt(const Shape& shape, int axis) {
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

// Numpy broadcasting of two shapes; strides are 0 along broadcast axes.
struct Broadcast {
  Shape out;
  std::vector<int64_t> a_strides;
  std::vector<int64_t> b_strides;
};

std::vector<int64_t> ContiguousStrides(const Shape& shape) {
  std::vector<int64_t> strides(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) {
    strides[i] = strides[i + 1] * shape[i + 1];
  }
  return strides;
}

Broadcast MakeBroadcast(const Shape& a, const Shape& b, const char* op) {
  size_t rank = std::max(a.size(), b.size());
  Broadcast bc;
  bc.out.assign(rank, 1);
  bc.a_strides.assign(rank, 0);
  bc.b_strides.assign(rank, 0);
  auto sa = ContiguousStrides(a);
  auto sb = ContiguousStrides(b);
  for (size_t i = 0; i < rank; ++i) {
    int ia = static_cast<int>(i) - static_cast<int>(rank - a.size());
    int ib = static_cast<int>(i) - static_cast<int>(rank - b.size());
    int64_t da = ia >= 0 ? a[ia] : 1;
    int64_t db = ib >= 0 ? b[ib] : 1;
    if (da != db && da != 1 && db != 1) {
      throw ShapeError(fmt::format("{}: shapes {} and {} do not broadcast", op,
                                   ShapeToString(a), ShapeToString(b)));
    }
    bc.out[i] = std::max(da, db);
    if (da == 0 || db == 0) bc.out[i] = 0;
    if (ia >= 0 && da != 1) bc.a_strides[i] = sa[ia];
    if (ib >= 0 && db != 1) bc.b_strides[i] = sb[ib];
  }
  return bc;
}

// Calls f(out_index, a_offset, b_offset) over the broadcast output.
template <class F>
void ForEachBroadcast(const Broadcast& bc, F&& f) {
  int64_t total = NumElements(bc.out);
  if (total == 0) return;
  size_t rank = bc.out.size();
  if (rank == 0) {
    f(0, 0, 0);
    return;
  }
  std::vector<int64_t> idx(rank, 0);
  int64_t ao = 0, bo = 0;
  int64_t last = bc.out[rank - 1];
  int64_t as = bc.a_strides[rank - 1], bs = bc.b_strides[rank - 1];
  for (int64_t o = 0; o < total; o += last) {
    for (int64_t j = 0; j < last; ++j) f(o + j, ao + j * as, bo + j * bs);
    for (int d = static_cast<int>(rank) - 2; d >= 0; --d) {
      ++idx[d];
      ao += bc.a_strides[d];
      bo += bc.b_strides[d];
      if (idx[d] < bc.out[d]) break;
      ao -= bc.a_strides[d] * idx[d];
      bo -= bc.b_strides[d] * idx[d];
      idx[d] = 0;
    }
  }
}

enum class BinaryKind { kAdd, kSub, kMul, kDiv };

Tensor Binary(const Tensor& a, const Tensor& b, BinaryKind kind, const char* op) {
  Broadcast bc = MakeBroadcast(a.shape(), b.shape(), op);
  Tensor out(bc.out, Promote(a, b));
  auto o = out.mutable_data();
  auto x = a.data();
  auto y = b.data();
  switch (kind) {
    case BinaryKind::kAdd:
      ForEachBroadcast(bc, [&](int64_t i, int64_t ia, int64_t ib) { o[i] = x[ia] + y[ib]; });
      break;
    case BinaryKind::kSub:
      ForEachBroadcast(bc, [&](int64_t i, int64_t ia, int64_t ib) { o[i] = x[ia] - y[ib]; });
      break;
    case BinaryKind::kMul:
      ForEachBroadcast(bc, [&](int64_t i, int64_t ia, int64_t ib) { o[i] = x[ia] * y[ib]; });
      break;
    case BinaryKind::kDiv:
      ForEachBroadcast(bc, [&](int64_t i, int64_t ia, int64_t ib) { o[i] = x[ia] / y[ib]; });
      break;
  }
  FinalizeOutput(out, op);
  if (GradTape::ShouldRecord({&a, &b})) {
    GradTape::Current()->Record(
        op, {a, b}, out, [a, b, bc, kind](const BackwardContext& ctx) {
          auto g = ctx.out_grad();
          auto ga = ctx.input_grad(0);
          auto gb = ctx.input_grad(1);
          auto x = a.data();
          auto y = b.data();
          ForEachBroadcast(bc, [&](int64_t i, int64_t ia, int64_t ib) {
            switch (kind) {
              case BinaryKind::kAdd:
                if (!ga.empty()) ga[ia] += g[i];
                if (!gb.empty()) gb[ib] += g[i];
                break;
              case BinaryKind::kSub:
                if (!ga.empty()) ga[ia] += g[i];
                if (!gb.empty()) gb[ib] -= g[i];
                break;
              case BinaryKind::kMul:
                if (!ga.empty()) ga[ia] += g[i] * y[ib];
                if (!gb.empty()) gb[ib] += g[i] * x[ia];
                break;
              case BinaryKind::kDiv:
                if (!ga.empty()) ga[ia] += g[i] / y[ib];
                if (!gb.empty()) gb[ib] -= g[i] * x[ia] / (y[ib] * y[ib]);
                break;
            }
          });
        });
  }
  return out;
}

// Elementwise unary op; `deriv(x, y)` gives dy/dx from input and output.
template <class Fwd, class Deriv>
Tensor Unary(const Tensor& x, const char* op, Fwd fwd, Deriv deriv) {
  Tensor out(x.shape(), x.dtype());
  auto o = out.mutable_data();
  auto in = x.data();
  for (size_t i = 0; i < in.size(); ++i) o[i] = fwd(in[i]);
  FinalizeOutput(out, op);
  if (GradTape::ShouldRecord({&x})) {
    GradTape::Current()->Record(op, {x}, out,
                                [x, out, deriv](const BackwardContext& ctx) {
                                  auto g = ctx.out_grad();
                                  auto gx = ctx.input_grad(0);
                                  auto in = x.data();
                                  auto y = out.data();
                                  for (size_t i = 0; i < gx.size(); ++i) {
                                    gx[i] += g[i] * deriv(in[i], y[i]);
                                  }
                                });
  }
  return out;
}

double StableSigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  double e = std::exp(v);
  return e / (1.0 + e);
}

double StableSoftplus(double v) {
  return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

// C(i,j) += sum_p A(i,p) * B(p,j) with arbitrary element strides.
struct MatView {
  const double* data;
  int64_t row_stride;
  int64_t col_stride;
};

void Gemm(int64_t m, int64_t n, int64_t k, MatView a, MatView b, double* c,
          int64_t c_row, int64_t c_col) {
  if (b.col_stride == 1 && c_col == 1) {
    for (int64_t i = 0; i < m; ++i) {
      double* crow = c + i * c_row;
      for (int64_t p = 0; p < k; ++p) {
        double av = a.data[i * a.row_stride + p * a.col_stride];
        if (av == 0.0) continue;
        const double* brow = b.data + p * b.row_stride;
        for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
    return;
  }
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      const double* ap = a.data + i * a.row_stride;
      const double* bp = b.data + j * b.col_stride;
      for (int64_t p = 0; p < k; ++p) acc += ap[p * a.col_stride] * bp[p * b.row_stride];
      c[i * c_row + j * c_col] += acc;
    }
  }
}

}  // namespace

Tensor Add(const Tensor& a, const Tensor& b) { return Binary(a, b, BinaryKind::kAdd, "add"); }
Tensor Sub(const Tensor& a, const Tensor& b) { return Binary(a, b, BinaryKind::kSub, "sub"); }
Tensor Mul(const Tensor& a, const Tensor& b) { return Binary(a, b, BinaryKind::kMul, "mul"); }
Tensor Div(const Tensor& a, const Tensor& b) { return Binary(a, b, BinaryKind::kDiv, "div"); }

Tensor Scale(const Tensor& x, double c) {
  return Unary(x, "scale", [c](double v) { return c * v; },
               [c](double, double) { return c; });
}

Tensor AddScalar(const Tensor& x, double c) {
  return Unary(x, "add_scalar", [c](double v) { return v + c; },
               [](double, double) { return 1.0; });
}

Tensor Neg(const Tensor& x) { return Scale(x, -1.0); }

Tensor Square(const Tensor& x) {
  return Unary(x, "square", [](double v) { return v * v; },
               [](double v, double) { return 2.0 * v; });
}

Tensor Tanh(const Tensor& x) {
  return Unary(x, "tanh", [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor Sigmoid(const Tensor& x) {
  return Unary(x, "sigmoid", StableSigmoid,
               [](double, double y) { return y * (1.0 - y); });
}

Tensor Softplus(const Tensor& x) {
  return Unary(x, "softplus", StableSoftplus,
               [](double v, double) { return StableSigmoid(v); });
}

Tensor Silu(const Tensor& x) {
  return Unary(x, "silu", [](double v) { return v * StableSigmoid(v); },
               [](double v, double) {
                 double s = StableSigmoid(v);
                 return s * (1.0 + v * (1.0 - s));
               });
}

Tensor Exp(const Tensor& x) {
  return Unary(x, "exp", [](double v) { return std::exp(v); },
               [](double, double y) { return y; });
}

Tensor Log(const Tensor& x) {
  return Unary(x, "log", [](double v) { return std::log(v); },
               [](double v, double) { return 1.0 / v; });
}

Tensor Sum(const Tensor& x) {
  Tensor out(Shape{}, x.dtype());
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  out.mutable_data()[0] = acc;
  FinalizeOutput(out, "sum");
  if (GradTape::ShouldRecord({&x})) {
    GradTape::Current()->Record("sum", {x}, out, [](const BackwardContext& ctx) {
      double g = ctx.out_grad()[0];
      for (auto& v : ctx.input_grad(0)) v += g;
    });
  }
  return out;
}

Tensor Sum(const Tensor& x, int axis, bool keepdim) {
  int ax = NormalizeAxis(axis, x.rank(), "sum");
  auto s = SplitAt(x.shape(), ax);
  Shape shape = x.shape();
  if (keepdim) {
    shape[ax] = 1;
  } else {
    shape.erase(shape.begin() + ax);
  }
  Tensor out(shape, x.dtype());
  auto o = out.mutable_data();
  auto in = x.data();
  for (int64_t a = 0; a < s.outer; ++a)
    for (int64_t e = 0; e < s.extent; ++e)
      for (int64_t i = 0; i < s.inner; ++i)
        o[a * s.inner + i] += in[(a * s.extent + e) * s.inner + i];
  FinalizeOutput(out, "sum_axis");
  if (GradTape::ShouldRecord({&x})) {
    GradTape::Current()->Record("sum_axis", {x}, out, [s](const BackwardContext& ctx) {
      auto g = ctx.out_grad();
      auto gx = ctx.input_grad(0);
      for (int64_t a = 0; a < s.outer; ++a)
        for (int64_t e = 0; e < s.extent; ++e)
          for (int64_t i = 0; i < s.inner; ++i)
            gx[(a * s.extent + e) * s.inner + i] += g[a * s.inner + i];
    });
  }
  return out;
}

Tensor Mean(const Tensor& x, int axis, bool keepdim) {
  int ax = NormalizeAxis(axis, x.rank(), "mean");
  auto n = x.shape()[ax];
  if (n == 0) throw ShapeError("mean: empty axis");
  return Scale(Sum(x, ax, keepdim), 1.0 / static_cast<double>(n));
}

Tensor MatMul(const Tensor& a, const Tensor& b, bool transpose_a, bool transpose_b) {
  if (a.rank() < 2 || b.rank() < 2) {
    throw ShapeError(fmt::format("matmul: operands need rank >= 2, got {} and {}",
                                 ShapeToString(a.shape()), ShapeToString(b.shape())));
  }
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  int64_t ar = as[as.size() - 2], ac = as[as.size() - 1];
  int64_t br = bs[bs.size() - 2], bc = bs[bs.size() - 1];
  int64_t m = transpose_a ? ac : ar;
  int64_t k = transpose_a ? ar : ac;
  int64_t k2 = transpose_b ? bc : br;
  int64_t n = transpose_b ? br : bc;
  if (k != k2) {
    throw ShapeError(fmt::format("matmul: inner dims differ for {}{} and {}{}",
                                 ShapeToString(as), transpose_a ? "^T" : "",
                                 ShapeToString(bs), transpose_b ? "^T" : ""));
  }
  Shape a_batch(as.begin(), as.end() - 2);
  Shape b_batch(bs.begin(), bs.end() - 2);
  Broadcast batch = MakeBroadcast(a_batch, b_batch, "matmul");
  Shape out_shape = batch.out;
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor out(out_shape, Promote(a, b));

  // Batch offsets in units of matrices.
  std::vector<std::array<int64_t, 3>> offsets;
  ForEachBroadcast(batch, [&](int64_t i, int64_t ia, int64_t ib) {
    offsets.push_back({i, ia, ib});
  });
  int64_t a_mat = ar * ac, b_mat = br * bc, c_mat = m * n;
  MatView av{nullptr, transpose_a ? 1 : ac, transpose_a ? ac : 1};
  MatView bv{nullptr, transpose_b ? 1 : bc, transpose_b ? bc : 1};
  auto o = out.mutable_data();
  for (auto [ic, ia, ib] : offsets) {
    av.data = a.data().data() + ia * a_mat;
    bv.data = b.data().data() + ib * b_mat;
    Gemm(m, n, k, av, bv, o.data() + ic * c_mat, n, 1);
  }
  FinalizeOutput(out, "matmul");
  if (GradTape::ShouldRecord({&a, &b})) {
    GradTape::Current()->Record(
        "matmul", {a, b}, out,
        [a, b, offsets, m, n, k, ac, bc, a_mat, b_mat, c_mat, transpose_a,
         transpose_b](const BackwardContext& ctx) {
          auto g = ctx.out_grad();
          auto ga = ctx.input_grad(0);
          auto gb = ctx.input_grad(1);
          for (auto [ic, ia, ib] : offsets) {
            MatView gv{g.data() + ic * c_mat, n, 1};
            if (!ga.empty()) {
              // dA(i,p) = sum_j dC(i,j) B(p,j), stored per A's layout.
              MatView bt{b.data().data() + ib * b_mat, transpose_b ? bc : 1,
                         transpose_b ? 1 : bc};
              double* dst = ga.data() + ia * a_mat;
              Gemm(m, k, n, gv, bt, dst, transpose_a ? 1 : ac, transpose_a ? ac : 1);
            }
            if (!gb.empty()) {
              // dB(p,j) = sum_i A(i,p) dC(i,j).
              MatView at{a.data().data() + ia * a_mat, transpose_a ? ac : 1,
                         transpose_a ? 1 : ac};
              double* dst = gb.data() + ib * b_mat;
              Gemm(k, n, m, at, gv, dst, transpose_b ? 1 : bc, transpose_b ? bc : 1);
            }
          }
        });
  }
  return out;
}

Tensor Softmax(const Tensor& x, int axis) {
  int ax = NormalizeAxis(axis, x.rank(), "softmax");
  auto s = SplitAt(x.shape(), ax);
  Tensor out(x.shape(), x.dtype());
  auto o = out.mutable_data();
  auto in = x.data();
  for (int64_t a = 0; a < s.outer; ++a) {
    for (int64_t i = 0; i < s.inner; ++i) {
      int64_t base = a * s.extent * s.inner + i;
      double mx = -std::numeric_limits<double>::infinity();
      for (int64_t e = 0; e < s.extent; ++e) mx = std::max(mx, in[base + e * s.inner]);
      if (!std::isfinite(mx)) throw NumericFault("softmax: non-finite logits");
      double z = 0.0;
      for (int64_t e = 0; e < s.extent; ++e) {
        double v = std::exp(in[base + e * s.inner] - mx);
        o[base + e * s.inner] = v;
        z += v;
      }
      for (int64_t e = 0; e < s.extent; ++e) o[base + e * s.inner] /= z;
    }
  }
  FinalizeOutput(out, "softmax");
  if (GradTape::ShouldRecord({&x})) {
    GradTape::Current()->Record("softmax", {x}, out, [out, s](const BackwardContext& ctx) {
      auto g = ctx.out_grad();
      auto gx = ctx.input_grad(0);
      auto y = out.data();
      for (int64_t a = 0; a < s.outer; ++a) {
        for (int64_t i = 0; i < s.inner; ++i) {
          int64_t base = a * s.extent * s.inner + i;
          double dot = 0.0;
          for (int64_t e = 0; e < s.extent; ++e) {
            dot += g[base + e * s.inner] * y[base + e * s.inner];
          }
          for (int64_t e = 0; e < s.extent; ++e) {
            int64_t j = base + e * s.inner;
            gx[j] += y[j] * (g[j] - dot);
          }
        }
      }
    });
  }
  return out;
}

Tensor MaskedSoftmax(const Tensor& x, const std::vector<std::uint8_t>& allowed) {
  if (x.rank() < 2) throw ShapeError("masked_softmax: rank must be >= 2");
  int64_t lq = x.dim(-2), lk = x.dim(-1);
  if (static_cast<int64_t>(allowed.size()) != lq * lk) {
    throw ShapeError(fmt::format("masked_softmax: mask has {} entries, logits {} need {}",
                                 allowed.size(), ShapeToString(x.shape()), lq * lk));
  }
  for (int64_t q = 0; q < lq; ++q) {
    bool any = false;
    for (int64_t j = 0; j < lk; ++j) any = any || allowed[q * lk + j];
    if (!any) throw ConfigError(fmt::format("masked_softmax: row {} fully masked", q));
  }
  int64_t rows = x.numel() / lk;
  Tensor out(x.shape(), x.dtype());
  auto o = out.mutable_data();
  auto in = x.data();
  for (int64_t r = 0; r < rows; ++r) {
    const std::uint8_t* mrow = allowed.data() + (r % lq) * lk;
    const double* xr = in.data() + r * lk;
    double* yr = o.data() + r * lk;
    double mx = -std::numeric_limits<double>::infinity();
    for (int64_t j = 0; j < lk; ++j)
      if (mrow[j]) mx = std::max(mx, xr[j]);
    if (!std::isfinite(mx)) throw NumericFault("masked_softmax: non-finite logits");
    double z = 0.0;
    for (int64_t j = 0; j < lk; ++j) {
      yr[j] = mrow[j] ? std::exp(xr[j] - mx) : 0.0;
      z += yr[j];
    }
    for (int64_t j = 0; j < lk; ++j) yr[j] /= z;
  }
  FinalizeOutput(out, "masked_softmax");
  if (GradTape::ShouldRecord({&x})) {
    GradTape::Current()->Record("masked_softmax", {x}, out,
                                [out, lk, rows](const BackwardContext& ctx) {
                                  auto g = ctx.out_grad();
                                  auto gx = ctx.input_grad(0);
                                  auto y = out.data();
                                  for (int64_t r = 0; r < rows; ++r) {
                                    double dot = 0.0;
                                    for (int64_t j = 0; j < lk; ++j)
                                      dot += g[r * lk + j] * y[r * lk + j];
                                    for (int64_t j = 0; j < lk; ++j)
                                      gx[r * lk + j] += y[r * lk + j] * (g[r * lk + j] - dot);
                                  }
                                });
  }
  return out;
}

Tensor Concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  int ax = NormalizeAxis(axis, parts[0].rank(), "concat");
  Shape shape = parts[0].shape();
  int64_t total = 0;
  DType dtype = parts[0].dtype();
  for (const auto& p : parts) {
    if (p.rank() != parts[0].rank()) throw ShapeError("concat: rank mismatch");
    for (int d = 0; d < p.rank(); ++d) {
      if (d != ax && p.shape()[d] != shape[d]) {
        throw ShapeError(fmt::format("concat: shapes {} and {} differ off axis {}",
                                     ShapeToString(parts[0].shape()),
                                     ShapeToString(p.shape()), ax));
      }
    }
    total += p.shape()[ax];
    if (p.dtype() == DType::kF64) dtype = DType::kF64;
  }
  shape[ax] = total;
  Tensor out(shape, dtype);
  auto s = SplitAt(shape, ax);
  auto o = out.mutable_data();
  std::vector<int64_t> starts;
  int64_t start = 0;
  for (const auto& p : parts) {
    starts.push_back(start);
    int64_t len = p.shape()[ax];
    auto in = p.data();
    for (int64_t a = 0; a < s.outer; ++a) {
      std::copy_n(in.begin() + a * len * s.inner, len * s.inner,
                  o.begin() + (a * total + start) * s.inner);
    }
    start += len;
  }
  FinalizeOutput(out, "concat");
  if (GradTape::ShouldRecord(std::span<const Tensor>(parts))) {
    std::vector<int64_t> lens;
    for (const auto& p : parts) lens.push_back(p.shape()[ax]);
    GradTape::Current()->Record("concat", parts, out,
                                [s, starts, lens, total](const BackwardContext& ctx) {
                                  auto g = ctx.out_grad();
                                  for (size_t i = 0; i < lens.size(); ++i) {
                                    auto gi = ctx.input_grad(i);
                                    if (gi.empty()) continue;
                                    int64_t len = lens[i];
                                    for (int64_t a = 0; a < s.outer; ++a)
                                      for (int64_t j = 0; j < len * s.inner; ++j)
                                        gi[a * len * s.inner + j] +=
                                            g[(a * total + starts[i]) * s.inner + j];
                                  }
                                });
  }
  return out;
}

Tensor Permute(const Tensor& x, const std::vector<int>& perm) {
  int r = x.rank();
  if (static_cast<int>(perm.size()) != r) {
    throw ShapeError(fmt::format("permute: {} axes for shape {}", perm.size(),
                                 ShapeToString(x.shape())));
  }
  std::vector<bool> seen(r, false);
  for (int p : perm) {
    if (p < 0 || p >= r || seen[p]) throw ShapeError("permute: invalid permutation");
    seen[p] = true;
  }
  auto in_strides = ContiguousStrides(x.shape());
  Shape out_shape(r);
  std::vector<int64_t> src_strides(r);
  for (int i = 0; i < r; ++i) {
    out_shape[i] = x.shape()[perm[i]];
    src_strides[i] = in_strides[perm[i]];
  }
  // Source offset for each output element in order.
  Broadcast walk;
  walk.out = out_shape;
  walk.a_strides = src_strides;
  walk.b_strides.assign(r, 0);
  Tensor out(out_shape, x.dtype());
  auto o = out.mutable_data();
  auto in = x.data();
  ForEachBroadcast(walk, [&](int64_t i, int64_t src, int64_t) { o[i] = in[src]; });
  if (GradTape::ShouldRecord({&x})) {
    GradTape::Current()->Record("permute", {x}, out, [walk](const BackwardContext& ctx) {
      auto g = ctx.out_grad();
      auto gx = ctx.input_grad(0);
      ForEachBroadcast(walk, [&](int64_t i, int64_t src, int64_t) { gx[src] += g[i]; });
    });
  }
  return out;
}

Tensor Reshape(const Tensor& x, Shape shape) {
  int64_t known = 1;
  int infer = -1;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == -1) {
      if (infer >= 0) throw ShapeError("reshape: more than one -1");
      infer = static_cast<int>(i);
    } else {
      known *= shape[i];
    }
  }
  if (infer >= 0) {
    if (known == 0 || x.numel() % known != 0) throw ShapeError("reshape: cannot infer");
    shape[infer] = x.numel() / known;
  }
  if (NumElements(shape) != x.numel()) {
    throw ShapeError(fmt::format("reshape: {} to {} changes element count",
                                 ShapeToString(x.shape()), ShapeToString(shape)));
  }
  Tensor out(shape, x.ToVector(), x.dtype());
  if (GradTape::ShouldRecord({&x})) {
    GradTape::Current()->Record("reshape", {x}, out, [](const BackwardContext& ctx) {
      auto g = ctx.out_grad();
      auto gx = ctx.input_grad(0);
      for (size_t i = 0; i < gx.size(); ++i) gx[i] += g[i];
    });
  }
  return out;
}

Tensor Slice(const Tensor& x, int axis, int64_t start, int64_t end) {
  int ax = NormalizeAxis(axis, x.rank(), "slice");
  int64_t extent = x.shape()[ax];
  if (start < 0 || end > extent || start > end) {
    throw ShapeError(fmt::format("slice: [{}, {}) outside axis {} of {}", start, end,
                                 ax, ShapeToString(x.shape())));
  }
  std::vector<int64_t> idx(end - start);
  std::iota(idx.begin(), idx.end(), start);
  return IndexSelect(x, ax, idx);
}

Tensor IndexSelect(const Tensor& x, int axis, const std::vector<int64_t>& indices) {
  int ax = NormalizeAxis(axis, x.rank(), "index_select");
  auto s = SplitAt(x.shape(), ax);
  for (auto i : indices) {
    if (i < 0 || i >= s.extent) {
      throw ShapeError(fmt::format("index_select: index {} out of range {}", i, s.extent));
    }
  }
  Shape shape = x.shape();
  shape[ax] = static_cast<int64_t>(indices.size());
  Tensor out(shape, x.dtype());
  auto o = out.mutable_data();
  auto in = x.data();
  int64_t n = shape[ax];
  for (int64_t a = 0; a < s.outer; ++a)
    for (int64_t j = 0; j < n; ++j)
      std::copy_n(in.begin() + (a * s.extent + indices[j]) * s.inner, s.inner,
                  o.begin() + (a * n + j) * s.inner);
  if (GradTape::ShouldRecord({&x})) {
    GradTape::Current()->Record("index_select", {x}, out,
                                [s, indices, n](const BackwardContext& ctx) {
                                  auto g = ctx.out_grad();
                                  auto gx = ctx.input_grad(0);
                                  for (int64_t a = 0; a < s.outer; ++a)
                                    for (int64_t j = 0; j < n; ++j)
                                      for (int64_t i = 0; i < s.inner; ++i)
                                        gx[(a * s.extent + indices[j]) * s.inner + i] +=
                                            g[(a * n + j) * s.inner + i];
                                });
  }
  return out;
}

Tensor IndexAdd(const Tensor& x, int axis, const std::vector<int64_t>& indices,
                int64_t size) {
  int ax = NormalizeAxis(axis, x.rank(), "index_add");
  auto s = SplitAt(x.shape(), ax);
  if (static_cast<int64_t>(indices.size()) != s.extent) {
    throw ShapeError(fmt::format("index_add: {} indices for axis extent {}",
                                 indices.size(), s.extent));
  }
  for (auto i : indices) {
    if (i < 0 || i >= size) throw ShapeError("index_add: index out of range");
  }
  Shape shape = x.shape();
  shape[ax] = size;
  Tensor out(shape, x.dtype());
  auto o = out.mutable_data();
  auto in = x.data();
  for (int64_t a = 0; a < s.outer; ++a)
    for (int64_t j = 0; j < s.extent; ++j)
      for (int64_t i = 0; i < s.inner; ++i)
        o[(a * size + indices[j]) * s.inner + i] += in[(a * s.extent + j) * s.inner + i];
  FinalizeOutput(out, "index_add");
  if (GradTape::ShouldRecord({&x})) {
    GradTape::Current()->Record("index_add", {x}, out,
                                [s, indices, size](const BackwardContext& ctx) {
                                  auto g = ctx.out_grad();
                                  auto gx = ctx.input_grad(0);
                                  for (int64_t a = 0; a < s.outer; ++a)
                                    for (int64_t j = 0; j < s.extent; ++j)
                                      for (int64_t i = 0; i < s.inner; ++i)
                                        gx[(a * s.extent + j) * s.inner + i] +=
                                            g[(a * size + indices[j]) * s.inner + i];
                                });
  }
  return out;
}

Tensor Conv2d(const Tensor& x, const Tensor& w, const Tensor* bias) {
  if (x.rank() != 3 || w.rank() != 4 || w.dim(1) != x.dim(0)) {
    throw ShapeError(fmt::format("conv2d: input {} incompatible with weight {}",
                                 ShapeToString(x.shape()), ShapeToString(w.shape())));
  }
  int64_t ci = x.dim(0), h = x.dim(1), wd = x.dim(2);
  int64_t co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (kh % 2 == 0 || kw % 2 == 0) throw ShapeError("conv2d: 'same' padding needs odd kernels");
  if (bias && (bias->rank() != 1 || bias->dim(0) != co)) {
    throw ShapeError("conv2d: bias shape " + ShapeToString(bias->shape()));
  }
  int64_t ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  DType dtype = Promote(x, w);
  Tensor out(Shape{co, h, wd}, dtype);
  auto o = out.mutable_data();
  auto in = x.data();
  auto wt = w.data();
  // Visits (output row, input row, kernel row/col offsets) with valid ranges.
  auto for_taps = [=](auto&& body) {
    for (int64_t oc = 0; oc < co; ++oc)
      for (int64_t ic = 0; ic < ci; ++ic)
        for (int64_t a = 0; a < kh; ++a)
          for (int64_t c = 0; c < kw; ++c) {
            int64_t widx = ((oc * ci + ic) * kh + a) * kw + c;
            int64_t di = a - ph, dj = c - pw;
            int64_t i0 = std::max<int64_t>(0, -di), i1 = std::min(h, h - di);
            int64_t j0 = std::max<int64_t>(0, -dj), j1 = std::min(wd, wd - dj);
            for (int64_t i = i0; i < i1; ++i) {
              body(widx, oc * h * wd + i * wd, ic * h * wd + (i + di) * wd + dj, j0, j1);
            }
          }
  };
  for_taps([&](int64_t widx, int64_t orow, int64_t irow, int64_t j0, int64_t j1) {
    double wv = wt[widx];
    for (int64_t j = j0; j < j1; ++j) o[orow + j] += wv * in[irow + j];
  });
  if (bias) {
    for (int64_t oc = 0; oc < co; ++oc)
      for (int64_t p = 0; p < h * wd; ++p) o[oc * h * wd + p] += bias->data()[oc];
  }
  FinalizeOutput(out, "conv2d");
  std::vector<Tensor> inputs{x, w};
  if (bias) inputs.push_back(*bias);
  if (GradTape::ShouldRecord(std::span<const Tensor>(inputs))) {
    GradTape::Current()->Record(
        "conv2d", inputs, out,
        [x, w, for_taps, co, h, wd, has_bias = bias != nullptr](const BackwardContext& ctx) {
          auto g = ctx.out_grad();
          auto gx = ctx.input_grad(0);
          auto gw = ctx.input_grad(1);
          auto in = x.data();
          auto wt = w.data();
          for_taps([&](int64_t widx, int64_t orow, int64_t irow, int64_t j0, int64_t j1) {
            if (!gx.empty()) {
              double wv = wt[widx];
              for (int64_t j = j0; j < j1; ++j) gx[irow + j] += wv * g[orow + j];
            }
            if (!gw.empty()) {
              double acc = 0.0;
              for (int64_t j = j0; j < j1; ++j) acc += g[orow + j] * in[irow + j];
              gw[widx] += acc;
            }
          });
          if (has_bias) {
            auto gb = ctx.input_grad(2);
            if (!gb.empty()) {
              for (int64_t oc = 0; oc < co; ++oc)
                for (int64_t p = 0; p < h * wd; ++p) gb[oc] += g[oc * h * wd + p];
            }
          }
        });
  }
  return out;
}

Tensor ConvTranspose2d(const Tensor& x, const Tensor& w, const Tensor* bias) {
  if (x.rank() != 3 || w.rank() != 4 || w.dim(0) != x.dim(0)) {
    throw ShapeError(fmt::format("conv_transpose2d: input {} incompatible with weight {}",
                                 ShapeToString(x.shape()), ShapeToString(w.shape())));
  }
  int64_t ci = x.dim(0), h = x.dim(1), wd = x.dim(2);
  int64_t co = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw ShapeError("conv_transpose2d: size-preserving padding needs odd kernels");
  }
  if (bias && (bias->rank() != 1 || bias->dim(0) != co)) {
    throw ShapeError("conv_transpose2d: bias shape " + ShapeToString(bias->shape()));
  }
  int64_t ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  Tensor out(Shape{co, h, wd}, Promote(x, w));
  auto o = out.mutable_data();
  // out[oc, i + a - ph, j + c - pw] += x[ic, i, j] * w[ic, oc, a, c]
  auto for_taps = [=](auto&& body) {
    for (int64_t ic = 0; ic < ci; ++ic)
      for (int64_t oc = 0; oc < co; ++oc)
        for (int64_t a = 0; a < kh; ++a)
          for (int64_t c = 0; c < kw; ++c) {
            int64_t widx = ((ic * co + oc) * kh + a) * kw + c;
            int64_t di = a - ph, dj = c - pw;
            int64_t i0 = std::max<int64_t>(0, -di), i1 = std::min(h, h - di);
            int64_t j0 = std::max<int64_t>(0, -dj), j1 = std::min(wd, wd - dj);
            for (int64_t i = i0; i < i1; ++i) {
              body(widx, ic * h * wd + i * wd, oc * h * wd + (i + di) * wd + dj, j0, j1);
            }
          }
  };
  auto in = x.data();
  auto wt = w.data();
  for_taps([&](int64_t widx, int64_t irow, int64_t orow, int64_t j0, int64_t j1) {
    double wv = wt[widx];
    for (int64_t j = j0; j < j1; ++j) o[orow + j] += wv * in[irow + j];
  });
  if (bias) {
    for (int64_t oc = 0; oc < co; ++oc)
      for (int64_t p = 0; p < h * wd; ++p) o[oc * h * wd + p] += bias->data()[oc];
  }
  FinalizeOutput(out, "conv_transpose2d");
  std::vector<Tensor> inputs{x, w};
  if (bias) inputs.push_back(*bias);
  if (GradTape::ShouldRecord(std::span<const Tensor>(inputs))) {
    GradTape::Current()->Record(
        "conv_transpose2d", inputs, out,
        [x, w, for_taps, co, h, wd, has_bias = bias != nullptr](const BackwardContext& ctx) {
          auto g = ctx.out_grad();
          auto gx = ctx.input_grad(0);
          auto gw = ctx.input_grad(1);
          auto in = x.data();
          auto wt = w.data();
          for_taps([&](int64_t widx, int64_t irow, int64_t orow, int64_t j0, int64_t j1) {
            if (!gx.empty()) {
              double wv = wt[widx];
              for (int64_t j = j0; j < j1; ++j) gx[irow + j] += wv * g[orow + j];
            }
            if (!gw.empty()) {
              double acc = 0.0;
              for (int64_t j = j0; j < j1; ++j) acc += g[orow + j] * in[irow + j];
              gw[widx] += acc;
            }
          });
          if (has_bias) {
            auto gb = ctx.input_grad(2);
            if (!gb.empty()) {
              for (int64_t oc = 0; oc < co; ++oc)
                for (int64_t p = 0; p < h * wd; ++p) gb[oc] += g[oc * h * wd + p];
            }
          }
        });
  }
  return out;
}

Tensor Conv1d(const Tensor& x, const Tensor& w, const Tensor* bias, int64_t pad_left,
              int64_t pad_right, int groups) {
  if (x.rank() != 3 || w.rank() != 3 || groups < 1) {
    throw ShapeError(fmt::format("conv1d: input {} / weight {} need rank 3",
                                 ShapeToString(x.shape()), ShapeToString(w.shape())));
  }
  int64_t batch = x.dim(0), ci = x.dim(1), len = x.dim(2);
  int64_t co = w.dim(0), cig = w.dim(1), k = w.dim(2);
  if (ci % groups != 0 || co % groups != 0 || cig != ci / groups) {
    throw ShapeError(fmt::format("conv1d: channels {} -> {} with {} groups vs weight {}",
                                 ci, co, groups, ShapeToString(w.shape())));
  }
  if (bias && (bias->rank() != 1 || bias->dim(0) != co)) {
    throw ShapeError("conv1d: bias shape " + ShapeToString(bias->shape()));
  }
  int64_t lout = len + pad_left + pad_right - k + 1;
  if (lout < 1) throw ShapeError("conv1d: kernel longer than padded input");
  int64_t cog = co / groups;
  Tensor out(Shape{batch, co, lout}, Promote(x, w));
  // out[b, oc, t] += w[oc, icg, a] * x[b, g*cig + icg, t + a - pad_left]
  auto for_taps = [=](auto&& body) {
    for (int64_t b = 0; b < batch; ++b)
      for (int64_t oc = 0; oc < co; ++oc) {
        int64_t grp = oc / cog;
        for (int64_t icg = 0; icg < cig; ++icg) {
          int64_t ic = grp * cig + icg;
          for (int64_t a = 0; a < k; ++a) {
            int64_t shift = a - pad_left;
            int64_t t0 = std::max<int64_t>(0, -shift);
            int64_t t1 = std::min(lout, len - shift);
            if (t0 >= t1) continue;
            body((oc * cig + icg) * k + a, (b * co + oc) * lout, (b * ci + ic) * len + shift,
                 t0, t1);
          }
        }
      }
  };
  auto o = out.mutable_data();
  auto in = x.data();
  auto wt = w.data();
  for_taps([&](int64_t widx, int64_t orow, int64_t irow, int64_t t0, int64_t t1) {
    double wv = wt[widx];
    for (int64_t t = t0; t < t1; ++t) o[orow + t] += wv * in[irow + t];
  });
  if (bias) {
    for (int64_t b = 0; b < batch; ++b)
      for (int64_t oc = 0; oc < co; ++oc)
        for (int64_t t = 0; t < lout; ++t) o[(b * co + oc) * lout + t] += bias->data()[oc];
  }
  FinalizeOutput(out, "conv1d");
  std::vector<Tensor> inputs{x, w};
  if (bias) inputs.push_back(*bias);
  if (GradTape::ShouldRecord(std::span<const Tensor>(inputs))) {
    GradTape::Current()->Record(
        "conv1d", inputs, out,
        [x, w, for_taps, batch, co, lout, has_bias = bias != nullptr](const BackwardContext& ctx) {
          auto g = ctx.out_grad();
          auto gx = ctx.input_grad(0);
          auto gw = ctx.input_grad(1);
          auto in = x.data();
          auto wt = w.data();
          for_taps([&](int64_t widx, int64_t orow, int64_t irow, int64_t t0, int64_t t1) {
            if (!gx.empty()) {
              double wv = wt[widx];
              for (int64_t t = t0; t < t1; ++t) gx[irow + t] += wv * g[orow + t];
            }
            if (!gw.empty()) {
              double acc = 0.0;
              for (int64_t t = t0; t < t1; ++t) acc += g[orow + t] * in[irow + t];
              gw[widx] += acc;
            }
          });
          if (has_bias) {
            auto gb = ctx.input_grad(2);
            if (!gb.empty()) {
              for (int64_t b = 0; b < batch; ++b)
                for (int64_t oc = 0; oc < co; ++oc)
                  for (int64_t t = 0; t < lout; ++t) gb[oc] += g[(b * co + oc) * lout + t];
            }
          }
        });
  }
  return out;
}

Tensor Linear(const Tensor& x, const Tensor& w, const Tensor* bias) {
  if (x.rank() < 1 || w.rank() != 2 || x.dim(-1) != w.dim(1)) {
    throw ShapeError(fmt::format("linear: input {} incompatible with weight {}",
                                 ShapeToString(x.shape()), ShapeToString(w.shape())));
  }
  int64_t in_f = w.dim(1), out_f = w.dim(0);
  if (bias && (bias->rank() != 1 || bias->dim(0) != out_f)) {
    throw ShapeError("linear: bias shape " + ShapeToString(bias->shape()));
  }
  int64_t rows = x.numel() / std::max<int64_t>(in_f, 1);
  Shape shape = x.shape();
  shape.back() = out_f;
  Tensor out(shape, Promote(x, w));
  auto o = out.mutable_data();
  // out = x W^T
  Gemm(rows, out_f, in_f, MatView{x.data().data(), in_f, 1},
       MatView{w.data().data(), 1, in_f}, o.data(), out_f, 1);
  if (bias) {
    auto b = bias->data();
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t j = 0; j < out_f; ++j) o[r * out_f + j] += b[j];
  }
  FinalizeOutput(out, "linear");
  std::vector<Tensor> inputs{x, w};
  if (bias) inputs.push_back(*bias);
  if (GradTape::ShouldRecord(std::span<const Tensor>(inputs))) {
    GradTape::Current()->Record(
        "linear", inputs, out,
        [x, w, rows, in_f, out_f, has_bias = bias != nullptr](const BackwardContext& ctx) {
          auto g = ctx.out_grad();
          auto gx = ctx.input_grad(0);
          auto gw = ctx.input_grad(1);
          MatView gv{g.data(), out_f, 1};
          if (!gx.empty()) {
            Gemm(rows, in_f, out_f, gv, MatView{w.data().data(), in_f, 1}, gx.data(), in_f, 1);
          }
          if (!gw.empty()) {
            Gemm(out_f, in_f, rows, MatView{g.data(), 1, out_f},
                 MatView{x.data().data(), in_f, 1}, gw.data(), in_f, 1);
          }
          if (has_bias) {
            auto gb = ctx.input_grad(2);
            if (!gb.empty()) {
              for (int64_t r = 0; r < rows; ++r)
                for (int64_t j = 0; j < out_f; ++j) gb[j] += g[r * out_f + j];
            }
          }
        });
  }
  return out;
}

Tensor Glu(const Tensor& x, int axis) {
  int ax = NormalizeAxis(axis, x.rank(), "glu");
  if (x.shape()[ax] % 2 != 0) {
    throw ShapeError("glu: odd extent along split axis in " + ShapeToString(x.shape()));
  }
  auto s = SplitAt(x.shape(), ax);
  int64_t half = s.extent / 2;
  Shape shape = x.shape();
  shape[ax] = half;
  Tensor out(shape, x.dtype());
  auto o = out.mutable_data();
  auto in = x.data();
  for (int64_t a = 0; a < s.outer; ++a)
    for (int64_t e = 0; e < half; ++e)
      for (int64_t i = 0; i < s.inner; ++i) {
        double av = in[(a * s.extent + e) * s.inner + i];
        double bv = in[(a * s.extent + e + half) * s.inner + i];
        o[(a * half + e) * s.inner + i] = av * StableSigmoid(bv);
      }
  FinalizeOutput(out, "glu");
  if (GradTape::ShouldRecord({&x})) {
    GradTape::Current()->Record("glu", {x}, out, [x, s, half](const BackwardContext& ctx) {
      auto g = ctx.out_grad();
      auto gx = ctx.input_grad(0);
      auto in = x.data();
      for (int64_t a = 0; a < s.outer; ++a)
        for (int64_t e = 0; e < half; ++e)
          for (int64_t i = 0; i < s.inner; ++i) {
            int64_t ia = (a * s.extent + e) * s.inner + i;
            int64_t ib = (a * s.extent + e + half) * s.inner + i;
            double sg = StableSigmoid(in[ib]);
            double gv = g[(a * half + e) * s.inner + i];
            gx[ia] += gv * sg;
            gx[ib] += gv * in[ia] * sg * (1.0 - sg);
          }
    });
  }
  return out;
}

Tensor RmsNorm(const Tensor& x, const Tensor& g, double eps) {
  if (x.rank() < 1 || g.rank() != 1 || g.dim(0) != x.dim(-1)) {
    throw ShapeError(fmt::format("rms_norm: input {} incompatible with gain {}",
                                 ShapeToString(x.shape()), ShapeToString(g.shape())));
  }
  if (eps < 0) throw ConfigError("rms_norm: eps must be non-negative");
  int64_t d = x.dim(-1);
  int64_t rows = d == 0 ? 0 : x.numel() / d;
  Tensor out(x.shape(), Promote(x, g));
  std::vector<double> inv_rms(rows);
  auto o = out.mutable_data();
  auto in = x.data();
  auto gain = g.data();
  for (int64_t r = 0; r < rows; ++r) {
    double ms = 0.0;
    for (int64_t j = 0; j < d; ++j) ms += in[r * d + j] * in[r * d + j];
    ms = ms / static_cast<double>(d) + eps;
    // mean square of zero rows with eps == 0 would divide by zero
    inv_rms[r] = ms > 0 ? 1.0 / std::sqrt(ms) : 0.0;
    for (int64_t j = 0; j < d; ++j) o[r * d + j] = in[r * d + j] * gain[j] * inv_rms[r];
  }
  FinalizeOutput(out, "rms_norm");
  if (GradTape::ShouldRecord({&x, &g})) {
    GradTape::Current()->Record(
        "rms_norm", {x, g}, out, [x, g, inv_rms, rows, d](const BackwardContext& ctx) {
          auto gy = ctx.out_grad();
          auto gx = ctx.input_grad(0);
          auto gg = ctx.input_grad(1);
          auto in = x.data();
          auto gain = g.data();
          for (int64_t r = 0; r < rows; ++r) {
            double ir = inv_rms[r];
            const double* xr = in.data() + r * d;
            const double* gr = gy.data() + r * d;
            if (!gg.empty()) {
              for (int64_t j = 0; j < d; ++j) gg[j] += gr[j] * xr[j] * ir;
            }
            if (!gx.empty()) {
              double dot = 0.0;
              for (int64_t j = 0; j < d; ++j) dot += gr[j] * gain[j] * xr[j];
              double coef = dot * ir * ir * ir / static_cast<double>(d);
              for (int64_t j = 0; j < d; ++j) {
                gx[r * d + j] += gain[j] * gr[j] * ir - xr[j] * coef;
              }
            }
          }
        });
  }
  return out;
}

}  // namespace sfc::ops
