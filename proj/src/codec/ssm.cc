// Copyright 2026 The SFC Authors
// SPDX-License-Identifier: Apache-2.0

#include "sfc/codec/ssm.h"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "sfc/core/error.h"
#include "sfc/core/ops.h"
#include "sfc/core/tape.h"

namespace sfc::codec {

Tensor SelectiveScan(const Tensor& x, const Tensor& delta, const Tensor& a, const Tensor& b,
                     const Tensor& c, const Tensor& d) {
  if (x.rank() != 3 || delta.shape() != x.shape() || a.rank() != 2 || a.dim(0) != x.dim(2) ||
      b.rank() != 3 || b.dim(0) != x.dim(0) || b.dim(1) != x.dim(1) || b.dim(2) != a.dim(1) ||
      c.shape() != b.shape() || d.shape() != Shape{x.dim(2)}) {
    throw ShapeError(fmt::format("ssm_scan: x {} delta {} A {} B {} C {} D {}",
                                 ShapeToString(x.shape()), ShapeToString(delta.shape()),
                                 ShapeToString(a.shape()), ShapeToString(b.shape()),
                                 ShapeToString(c.shape()), ShapeToString(d.shape())));
  }
  const std::int64_t nb = x.dim(0), nl = x.dim(1), ne = x.dim(2), nn = a.dim(1);
  if (nl < 1) throw ShapeError("ssm_scan: empty sequence");
  DType dtype = x.dtype() == DType::kF64 || a.dtype() == DType::kF64 ? DType::kF64 : DType::kF32;
  Tensor out(x.shape(), dtype);
  auto xs = x.data(), dl = delta.data(), as = a.data(), bs = b.data(), cs = c.data(),
       ds = d.data();
  auto ys = out.mutable_data();

  // Runs one (batch, channel) recurrence; `states` (L x N) is filled when
  // given so the reverse pass can reuse it.
  auto run = [=](std::int64_t bi, std::int64_t e, double* states, double* y) {
    std::vector<double> h(nn, 0.0);
    for (std::int64_t i = 0; i < nl; ++i) {
      const std::int64_t xi = (bi * nl + i) * ne + e;
      const std::int64_t bc = (bi * nl + i) * nn;
      const double dt = dl[xi], xv = xs[xi];
      double acc = ds[e] * xv;
      for (std::int64_t n = 0; n < nn; ++n) {
        h[n] = std::exp(dt * as[e * nn + n]) * h[n] + dt * bs[bc + n] * xv;
        acc += cs[bc + n] * h[n];
        if (states) states[i * nn + n] = h[n];
      }
      if (!std::isfinite(acc)) {
        throw NumericFault(fmt::format("ssm_scan: non-finite state at batch {} position {} "
                                       "channel {}", bi, i, e));
      }
      if (y) y[xi] = acc;
    }
  };
  for (std::int64_t bi = 0; bi < nb; ++bi)
    for (std::int64_t e = 0; e < ne; ++e) run(bi, e, nullptr, ys.data());
  FinalizeOutput(out, "ssm_scan");

  MaybeRecord("ssm_scan", {x, delta, a, b, c, d}, out, [=](const BackwardContext& ctx) {
    auto gy = ctx.out_grad();
    auto gx = ctx.input_grad(0), gdl = ctx.input_grad(1), ga = ctx.input_grad(2),
         gb = ctx.input_grad(3), gc = ctx.input_grad(4), gd = ctx.input_grad(5);
    std::vector<double> states(nl * nn), gh(nn);
    for (std::int64_t bi = 0; bi < nb; ++bi) {
      for (std::int64_t e = 0; e < ne; ++e) {
        run(bi, e, states.data(), nullptr);
        std::fill(gh.begin(), gh.end(), 0.0);  // dL/dh_i carried from i+1
        for (std::int64_t i = nl - 1; i >= 0; --i) {
          const std::int64_t xi = (bi * nl + i) * ne + e;
          const std::int64_t bc = (bi * nl + i) * nn;
          const double g = gy[xi], dt = dl[xi], xv = xs[xi];
          if (!gd.empty()) gd[e] += g * xv;
          double gxv = g * ds[e], gdt = 0.0;
          for (std::int64_t n = 0; n < nn; ++n) {
            const double h = states[i * nn + n];
            const double prev = i > 0 ? states[(i - 1) * nn + n] : 0.0;
            const double an = as[e * nn + n];
            const double decay = std::exp(dt * an);
            if (!gc.empty()) gc[bc + n] += g * h;
            const double ghn = gh[n] + g * cs[bc + n];
            gdt += ghn * (prev * decay * an + bs[bc + n] * xv);
            if (!ga.empty()) ga[e * nn + n] += ghn * prev * decay * dt;
            if (!gb.empty()) gb[bc + n] += ghn * dt * xv;
            gxv += ghn * dt * bs[bc + n];
            gh[n] = ghn * decay;
          }
          if (!gx.empty()) gx[xi] += gxv;
          if (!gdl.empty()) gdl[xi] += gdt;
        }
      }
    }
  });
  return out;
}

MambaLayer::MambaLayer(InitContext& ctx, const std::string& name, const SsmConfig& config)
    : config_(config),
      inner_(config.expand * config.width),
      dt_rank_((config.width + 15) / 16) {
  const std::int64_t e = inner_, n = config.state;
  in_proj_ = LinearLayer(ctx, name + ".in_proj", config.width, 2 * e, false);
  conv_weight_ = ctx.params->Add(name + ".conv.weight",
                                 UniformInit({e, 1, config.conv_width}, config.conv_width,
                                             *ctx.rng, ctx.dtype));
  conv_bias_ = ctx.params->Add(name + ".conv.bias", Tensor::Zeros({e}, ctx.dtype));
  x_proj_ = LinearLayer(ctx, name + ".x_proj", e, dt_rank_ + 2 * n, false);
  dt_proj_ = LinearLayer(ctx, name + ".dt_proj", dt_rank_, e);
  // Step sizes start log-uniform in [dt_min, dt_max]: bias = softplus^-1(dt).
  {
    Tensor bias = *ctx.params->Find(name + ".dt_proj.bias");
    auto bd = bias.mutable_data();
    for (auto& v : bd) {
      const double dt = std::exp(ctx.rng->Uniform(std::log(config.dt_min), std::log(config.dt_max)));
      v = dt + std::log(-std::expm1(-dt));
    }
  }
  std::vector<double> a(e * n);
  for (std::int64_t i = 0; i < e; ++i)
    for (std::int64_t j = 0; j < n; ++j) a[i * n + j] = std::log(static_cast<double>(j + 1));
  a_log_ = ctx.params->Add(name + ".a_log", Tensor({e, n}, std::move(a), ctx.dtype));
  d_skip_ = ctx.params->Add(name + ".d_skip", Tensor::Full({e}, 1.0, ctx.dtype));
  out_proj_ = LinearLayer(ctx, name + ".out_proj", e, config.width, false);
}

Tensor MambaLayer::Forward(const Tensor& u) const {
  if (u.rank() != 3 || u.dim(2) != config_.width) {
    throw ShapeError(fmt::format("mamba: expected (B, L, {}), got {}", config_.width,
                                 ShapeToString(u.shape())));
  }
  const std::int64_t e = inner_, n = config_.state;
  Tensor xz = in_proj_.Forward(u);
  Tensor x = ops::Slice(xz, 2, 0, e);
  Tensor z = ops::Slice(xz, 2, e, 2 * e);
  x = ops::Permute(x, {0, 2, 1});  // (B, E, L)
  x = ops::Conv1d(x, conv_weight_, &conv_bias_, config_.conv_width - 1, 0,
                  static_cast<int>(e));
  x = ops::Silu(ops::Permute(x, {0, 2, 1}));
  Tensor dbc = x_proj_.Forward(x);
  Tensor delta = ops::Softplus(dt_proj_.Forward(ops::Slice(dbc, 2, 0, dt_rank_)));
  Tensor b = ops::Slice(dbc, 2, dt_rank_, dt_rank_ + n);
  Tensor c = ops::Slice(dbc, 2, dt_rank_ + n, dt_rank_ + 2 * n);
  Tensor a = ops::Neg(ops::Exp(a_log_));
  Tensor y = SelectiveScan(x, delta, a, b, c, d_skip_);
  return out_proj_.Forward(ops::Mul(y, ops::Silu(z)));
}

}  // namespace sfc::codec
