#pragma once

#include <string>
#include <vector>

#include "ocean/ops.hpp"
#include "ocean/rng.hpp"

namespace ocean {

template <class T>
Tensor<T> randn_tensor(Shape s, Rng& rng, double stddev) {
  Tensor<T> t(std::move(s));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.normal() * stddev);
  return t;
}

/// Fan-in scaled normal init for a dense weight [I,O].
template <class T>
ParamBlock<T> dense_weight(std::string name, int64_t in, int64_t out, Rng& rng) {
  return ParamBlock<T>(std::move(name), randn_tensor<T>({in, out}, rng, 1.0 / std::sqrt(double(in))));
}

template <class T>
ParamBlock<T> zeros_param(std::string name, Shape s) {
  return ParamBlock<T>(std::move(name), Tensor<T>(std::move(s)));
}

/// Parameter injection: trainable leaf or frozen constant.
template <class T>
inline Var pv(Tape<T>& t, ParamBlock<T>& p, bool frozen) {
  return frozen ? t.frozen(p) : t.leaf(p);
}

/// x.w without bias; x may be [I] or [B,I].
template <class T>
Var linear(Tape<T>& t, Var x, Var w) {
  const bool vec = t.val(x).ndim() == 1;
  Var x2 = vec ? reshape(t, x, Shape{1, t.val(x).numel()}) : x;
  Var y = matmul(t, x2, w);
  return vec ? reshape(t, y, Shape{t.val(w).shape[1]}) : y;
}

template <class T>
struct DenseParams {
  ParamBlock<T> w, b;
  DenseParams() = default;
  DenseParams(const std::string& name, int64_t in, int64_t out, Rng& rng)
      : w(dense_weight<T>(name + ".w", in, out, rng)), b(zeros_param<T>(name + ".b", {out})) {}
  std::vector<ParamBlock<T>*> params() { return {&w, &b}; }
  Var operator()(Tape<T>& t, Var x, bool frozen = false) {
    return affine(t, x, pv(t, w, frozen), pv(t, b, frozen));
  }
};

/// Gated recurrent cell, update-gate convention:
///   z = sigmoid(Wz e + Uz h + bz), r = sigmoid(Wr e + Ur h + br)
///   htil = tanh(Wh e + Uh (r*h) + bh), h' = (1-z)*h + z*htil
template <class T>
struct GruParams {
  ParamBlock<T> wz, uz, bz, wr, ur, br, wh, uh, bh;
  int64_t in = 0, hidden = 0;

  GruParams() = default;
  GruParams(const std::string& name, int64_t in_dim, int64_t hidden_dim, Rng& rng)
      : wz(dense_weight<T>(name + ".wz", in_dim, hidden_dim, rng)),
        uz(dense_weight<T>(name + ".uz", hidden_dim, hidden_dim, rng)),
        bz(zeros_param<T>(name + ".bz", {hidden_dim})),
        wr(dense_weight<T>(name + ".wr", in_dim, hidden_dim, rng)),
        ur(dense_weight<T>(name + ".ur", hidden_dim, hidden_dim, rng)),
        br(zeros_param<T>(name + ".br", {hidden_dim})),
        wh(dense_weight<T>(name + ".wh", in_dim, hidden_dim, rng)),
        uh(dense_weight<T>(name + ".uh", hidden_dim, hidden_dim, rng)),
        bh(zeros_param<T>(name + ".bh", {hidden_dim})),
        in(in_dim),
        hidden(hidden_dim) {}

  std::vector<ParamBlock<T>*> params() {
    return {&wz, &uz, &bz, &wr, &ur, &br, &wh, &uh, &bh};
  }
};

template <class T>
Var gru_cell(Tape<T>& t, Var e, Var h, GruParams<T>& p, bool frozen = false) {
  if (!t.val(e).all_finite() || !t.val(h).all_finite())
    throw std::domain_error("gru_cell: non-finite input");
  Var z = sigmoid(t, add(t, affine(t, e, pv(t, p.wz, frozen), pv(t, p.bz, frozen)),
                         linear(t, h, pv(t, p.uz, frozen))));
  Var r = sigmoid(t, add(t, affine(t, e, pv(t, p.wr, frozen), pv(t, p.br, frozen)),
                         linear(t, h, pv(t, p.ur, frozen))));
  Var htil = tanh_op(t, add(t, affine(t, e, pv(t, p.wh, frozen), pv(t, p.bh, frozen)),
                            linear(t, mul(t, r, h), pv(t, p.uh, frozen))));
  // (1-z)*h + z*htil == h - z*h + z*htil
  return add(t, sub(t, h, mul(t, z, h)), mul(t, z, htil));
}

}  // namespace ocean
