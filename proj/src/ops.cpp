#include "ocean/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace ocean {

namespace detail {

// C[M,N] += A[M,K] * B[K,N]
template <class T>
void gemm_acc_nn(const T* A, const T* B, T* C, int64_t M, int64_t K, int64_t N) {
  for (int64_t i = 0; i < M; ++i) {
    const T* arow = A + i * K;
    T* crow = C + i * N;
    for (int64_t k = 0; k < K; ++k) {
      const T a = arow[k];
      const T* brow = B + k * N;
      for (int64_t j = 0; j < N; ++j) crow[j] += a * brow[j];
    }
  }
}

// C[M,N] += A[M,K] * B[N,K]^T
template <class T>
void gemm_acc_nt(const T* A, const T* B, T* C, int64_t M, int64_t K, int64_t N) {
  for (int64_t i = 0; i < M; ++i) {
    const T* arow = A + i * K;
    T* crow = C + i * N;
    for (int64_t j = 0; j < N; ++j) {
      const T* brow = B + j * K;
      T acc = T(0);
      for (int64_t k = 0; k < K; ++k) acc += arow[k] * brow[k];
      crow[j] += acc;
    }
  }
}

// C[M,N] += A[K,M]^T * B[K,N]
template <class T>
void gemm_acc_tn(const T* A, const T* B, T* C, int64_t M, int64_t K, int64_t N) {
  for (int64_t k = 0; k < K; ++k) {
    const T* arow = A + k * M;
    const T* brow = B + k * N;
    for (int64_t i = 0; i < M; ++i) {
      const T a = arow[i];
      T* crow = C + i * N;
      for (int64_t j = 0; j < N; ++j) crow[j] += a * brow[j];
    }
  }
}

template <class T>
bool any_tracked(Tape<T>& t, std::initializer_list<Var> vs) {
  for (Var v : vs)
    if (v.valid() && t.tracked(v)) return true;
  return false;
}

template <class T>
void check_2d(const Tensor<T>& x, const char* who) {
  require(x.ndim() == 2, std::string(who) + ": expected 2-D, got " + shape_str(x.shape));
}

}  // namespace detail

using detail::any_tracked;

template <class T>
Var matmul(Tape<T>& t, Var a, Var b) {
  const Tensor<T>&A = t.val(a), &B = t.val(b);
  detail::check_2d(A, "matmul");
  detail::check_2d(B, "matmul");
  require(A.shape[1] == B.shape[0],
          "matmul: inner extents differ, " + shape_str(A.shape) + " vs " + shape_str(B.shape));
  const int64_t M = A.shape[0], K = A.shape[1], N = B.shape[1];
  Tensor<T> C({M, N});
  detail::gemm_acc_nn(A.ptr(), B.ptr(), C.ptr(), M, K, N);
  Var o = t.make_node(std::move(C), any_tracked(t, {a, b}));
  if (t.tracked(o))
    t.record([tp = &t, a, b, o, M, K, N] {
      const Tensor<T>& g = tp->grad(o);
      if (tp->tracked(a))
        detail::gemm_acc_nt(g.ptr(), tp->val(b).ptr(), tp->grad(a).ptr(), M, N, K);
      if (tp->tracked(b))
        detail::gemm_acc_tn(tp->val(a).ptr(), g.ptr(), tp->grad(b).ptr(), K, M, N);
    });
  return o;
}

template <class T>
Var matmul_tn(Tape<T>& t, Var a, Var b) {
  const Tensor<T>&A = t.val(a), &B = t.val(b);
  detail::check_2d(A, "matmul_tn");
  detail::check_2d(B, "matmul_tn");
  require(A.shape[0] == B.shape[0], "matmul_tn: leading extents differ, " +
                                        shape_str(A.shape) + " vs " + shape_str(B.shape));
  const int64_t K = A.shape[0], M = A.shape[1], N = B.shape[1];
  Tensor<T> C({M, N});
  detail::gemm_acc_tn(A.ptr(), B.ptr(), C.ptr(), M, K, N);
  Var o = t.make_node(std::move(C), any_tracked(t, {a, b}));
  if (t.tracked(o))
    t.record([tp = &t, a, b, o, M, K, N] {
      const Tensor<T>& g = tp->grad(o);
      // A[K,M], B[K,N], C=A^T B: dA += B g^T, dB += A g
      if (tp->tracked(a))
        detail::gemm_acc_nt(tp->val(b).ptr(), g.ptr(), tp->grad(a).ptr(), K, N, M);
      if (tp->tracked(b))
        detail::gemm_acc_nn(tp->val(a).ptr(), g.ptr(), tp->grad(b).ptr(), K, M, N);
    });
  return o;
}

template <class T>
Var transpose(Tape<T>& t, Var a) {
  const Tensor<T>& A = t.val(a);
  detail::check_2d(A, "transpose");
  const int64_t R = A.shape[0], C = A.shape[1];
  Tensor<T> out({C, R});
  for (int64_t r = 0; r < R; ++r)
    for (int64_t c = 0; c < C; ++c) out.at2(c, r) = A.at2(r, c);
  Var o = t.make_node(std::move(out), any_tracked(t, {a}));
  if (t.tracked(o))
    t.record([tp = &t, a, o, R, C] {
      if (!tp->tracked(a)) return;
      const Tensor<T>& g = tp->grad(o);
      Tensor<T>& ga = tp->grad(a);
      for (int64_t r = 0; r < R; ++r)
        for (int64_t c = 0; c < C; ++c) ga.at2(r, c) += g.at2(c, r);
    });
  return o;
}

template <class T>
Var affine(Tape<T>& t, Var x, Var w, Var b) {
  const Tensor<T>&X = t.val(x), &W = t.val(w), &B = t.val(b);
  detail::check_2d(W, "affine");
  const bool vec = X.ndim() == 1;
  const int64_t Bn = vec ? 1 : X.shape[0];
  const int64_t I = vec ? X.shape[0] : X.shape[1];
  const int64_t O = W.shape[1];
  require(I == W.shape[0] && B.numel() == O,
          "affine: shape mismatch, x " + shape_str(X.shape) + " vs w " + shape_str(W.shape) +
              " vs b " + shape_str(B.shape));
  Tensor<T> out(vec ? Shape{O} : Shape{Bn, O});
  for (int64_t r = 0; r < Bn; ++r)
    for (int64_t j = 0; j < O; ++j) out[r * O + j] = B[j];
  detail::gemm_acc_nn(X.ptr(), W.ptr(), out.ptr(), Bn, I, O);
  Var o = t.make_node(std::move(out), any_tracked(t, {x, w, b}));
  if (t.tracked(o))
    t.record([tp = &t, x, w, b, o, Bn, I, O] {
      const Tensor<T>& g = tp->grad(o);
      if (tp->tracked(x))
        detail::gemm_acc_nt(g.ptr(), tp->val(w).ptr(), tp->grad(x).ptr(), Bn, O, I);
      if (tp->tracked(w))
        detail::gemm_acc_tn(tp->val(x).ptr(), g.ptr(), tp->grad(w).ptr(), I, Bn, O);
      if (tp->tracked(b)) {
        Tensor<T>& gb = tp->grad(b);
        for (int64_t r = 0; r < Bn; ++r)
          for (int64_t j = 0; j < O; ++j) gb[j] += g[r * O + j];
      }
    });
  return o;
}

namespace {

template <class T, class FwdFn, class BwdFn>
Var binary_same_shape(Tape<T>& t, Var a, Var b, const char* who, FwdFn fwd, BwdFn bwd) {
  const Tensor<T>&A = t.val(a), &B = t.val(b);
  require_same_shape(A.shape, B.shape, who);
  Tensor<T> out(A.shape);
  const int64_t n = A.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = fwd(A[i], B[i]);
  Var o = t.make_node(std::move(out), any_tracked(t, {a, b}));
  if (t.tracked(o))
    t.record([tp = &t, a, b, o, n, bwd] {
      const Tensor<T>& g = tp->grad(o);
      const bool ta = tp->tracked(a), tb = tp->tracked(b);
      for (int64_t i = 0; i < n; ++i) {
        auto [da, db] = bwd(tp->val(a)[i], tp->val(b)[i], g[i]);
        if (ta) tp->grad(a)[i] += da;
        if (tb) tp->grad(b)[i] += db;
      }
    });
  return o;
}

template <class T, class FwdFn, class BwdFn>
Var unary_elementwise(Tape<T>& t, Var a, FwdFn fwd, BwdFn bwd) {
  const Tensor<T>& A = t.val(a);
  Tensor<T> out(A.shape);
  const int64_t n = A.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = fwd(A[i]);
  Var o = t.make_node(std::move(out), any_tracked(t, {a}));
  if (t.tracked(o))
    t.record([tp = &t, a, o, n, bwd] {
      if (!tp->tracked(a)) return;
      const Tensor<T>& g = tp->grad(o);
      Tensor<T>& ga = tp->grad(a);
      const Tensor<T>& x = tp->val(a);
      const Tensor<T>& y = tp->val(o);
      for (int64_t i = 0; i < n; ++i) ga[i] += bwd(x[i], y[i]) * g[i];
    });
  return o;
}

}  // namespace

template <class T>
Var add(Tape<T>& t, Var a, Var b) {
  return binary_same_shape(
      t, a, b, "add", [](T x, T y) { return x + y; },
      [](T, T, T g) { return std::pair<T, T>{g, g}; });
}

template <class T>
Var sub(Tape<T>& t, Var a, Var b) {
  return binary_same_shape(
      t, a, b, "sub", [](T x, T y) { return x - y; },
      [](T, T, T g) { return std::pair<T, T>{g, -g}; });
}

template <class T>
Var mul(Tape<T>& t, Var a, Var b) {
  return binary_same_shape(
      t, a, b, "mul", [](T x, T y) { return x * y; },
      [](T x, T y, T g) { return std::pair<T, T>{g * y, g * x}; });
}

template <class T>
Var scale(Tape<T>& t, Var a, T c) {
  return unary_elementwise(
      t, a, [c](T x) { return c * x; }, [c](T, T) { return c; });
}

template <class T>
Var relu(Tape<T>& t, Var a) {
  return unary_elementwise(
      t, a, [](T x) { return x > T(0) ? x : T(0); },
      [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <class T>
Var tanh_op(Tape<T>& t, Var a) {
  return unary_elementwise(
      t, a, [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <class T>
Var sigmoid(Tape<T>& t, Var a) {
  return unary_elementwise(
      t, a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
      [](T, T y) { return y * (T(1) - y); });
}

template <class T>
Var log_clamped(Tape<T>& t, Var a, T floor) {
  return unary_elementwise(
      t, a, [floor](T x) { return std::log(std::max(x, floor)); },
      [floor](T x, T) { return x > floor ? T(1) / x : T(0); });
}

template <class T>
Var square(Tape<T>& t, Var a) {
  return unary_elementwise(
      t, a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

template <class T>
Var add_rowvec(Tape<T>& t, Var a, Var v) {
  const Tensor<T>&A = t.val(a), &V = t.val(v);
  detail::check_2d(A, "add_rowvec");
  require(V.numel() == A.shape[1], "add_rowvec: vector length " + shape_str(V.shape) +
                                       " does not match columns of " + shape_str(A.shape));
  Tensor<T> out(A.shape);
  const int64_t R = A.shape[0], C = A.shape[1];
  for (int64_t r = 0; r < R; ++r)
    for (int64_t c = 0; c < C; ++c) out.at2(r, c) = A.at2(r, c) + V[c];
  Var o = t.make_node(std::move(out), any_tracked(t, {a, v}));
  if (t.tracked(o))
    t.record([tp = &t, a, v, o, R, C] {
      const Tensor<T>& g = tp->grad(o);
      if (tp->tracked(a)) {
        Tensor<T>& ga = tp->grad(a);
        for (int64_t i = 0; i < R * C; ++i) ga[i] += g[i];
      }
      if (tp->tracked(v)) {
        Tensor<T>& gv = tp->grad(v);
        for (int64_t r = 0; r < R; ++r)
          for (int64_t c = 0; c < C; ++c) gv[c] += g.at2(r, c);
      }
    });
  return o;
}

template <class T>
Var div_colvec(Tape<T>& t, Var a, Var d) {
  const Tensor<T>&A = t.val(a), &D = t.val(d);
  detail::check_2d(A, "div_colvec");
  require(D.numel() == A.shape[1], "div_colvec: divisor length " + shape_str(D.shape) +
                                       " does not match columns of " + shape_str(A.shape));
  Tensor<T> out(A.shape);
  const int64_t R = A.shape[0], C = A.shape[1];
  for (int64_t r = 0; r < R; ++r)
    for (int64_t c = 0; c < C; ++c) out.at2(r, c) = A.at2(r, c) / D[c];
  Var o = t.make_node(std::move(out), any_tracked(t, {a, d}));
  if (t.tracked(o))
    t.record([tp = &t, a, d, o, R, C] {
      const Tensor<T>& g = tp->grad(o);
      const Tensor<T>&A2 = tp->val(a), &D2 = tp->val(d);
      if (tp->tracked(a)) {
        Tensor<T>& ga = tp->grad(a);
        for (int64_t r = 0; r < R; ++r)
          for (int64_t c = 0; c < C; ++c) ga.at2(r, c) += g.at2(r, c) / D2[c];
      }
      if (tp->tracked(d)) {
        Tensor<T>& gd = tp->grad(d);
        for (int64_t r = 0; r < R; ++r)
          for (int64_t c = 0; c < C; ++c)
            gd[c] -= g.at2(r, c) * A2.at2(r, c) / (D2[c] * D2[c]);
      }
    });
  return o;
}

template <class T>
Var reshape(Tape<T>& t, Var a, Shape s) {
  const Tensor<T>& A = t.val(a);
  require(shape_numel(s) == A.numel(),
          "reshape: numel mismatch " + shape_str(A.shape) + " -> " + shape_str(s));
  Tensor<T> out(std::move(s), A.data);
  Var o = t.make_node(std::move(out), any_tracked(t, {a}));
  if (t.tracked(o))
    t.record([tp = &t, a, o] {
      if (!tp->tracked(a)) return;
      const Tensor<T>& g = tp->grad(o);
      Tensor<T>& ga = tp->grad(a);
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
    });
  return o;
}

template <class T>
Var stack_rows(Tape<T>& t, std::span<const Var> rows) {
  require(!rows.empty(), "stack_rows: no rows");
  const int64_t D = t.val(rows[0]).numel();
  const int64_t N = static_cast<int64_t>(rows.size());
  Tensor<T> out({N, D});
  bool tracked = false;
  for (int64_t r = 0; r < N; ++r) {
    const Tensor<T>& R = t.val(rows[r]);
    require(R.numel() == D, "stack_rows: row " + std::to_string(r) + " has " +
                                shape_str(R.shape) + ", expected numel " + std::to_string(D));
    for (int64_t c = 0; c < D; ++c) out.at2(r, c) = R[c];
    tracked = tracked || t.tracked(rows[r]);
  }
  Var o = t.make_node(std::move(out), tracked);
  if (t.tracked(o)) {
    std::vector<Var> rv(rows.begin(), rows.end());
    t.record([tp = &t, rv, o, D] {
      const Tensor<T>& g = tp->grad(o);
      for (size_t r = 0; r < rv.size(); ++r) {
        if (!tp->tracked(rv[r])) continue;
        Tensor<T>& gr = tp->grad(rv[r]);
        for (int64_t c = 0; c < D; ++c) gr[c] += g.at2(static_cast<int64_t>(r), c);
      }
    });
  }
  return o;
}

template <class T>
Var gather_row(Tape<T>& t, Var x, int row) {
  const Tensor<T>& X = t.val(x);
  detail::check_2d(X, "gather_row");
  require(row >= 0 && row < X.shape[0],
          "gather_row: row " + std::to_string(row) + " out of range for " + shape_str(X.shape));
  const int64_t D = X.shape[1];
  Tensor<T> out({D});
  for (int64_t c = 0; c < D; ++c) out[c] = X.at2(row, c);
  Var o = t.make_node(std::move(out), any_tracked(t, {x}));
  if (t.tracked(o))
    t.record([tp = &t, x, o, row, D] {
      if (!tp->tracked(x)) return;
      const Tensor<T>& g = tp->grad(o);
      Tensor<T>& gx = tp->grad(x);
      for (int64_t c = 0; c < D; ++c) gx.at2(row, c) += g[c];
    });
  return o;
}

template <class T>
Var gather_scalar(Tape<T>& t, Var x, int idx) {
  const Tensor<T>& X = t.val(x);
  require(idx >= 0 && idx < X.numel(),
          "gather_scalar: index " + std::to_string(idx) + " out of range for " +
              shape_str(X.shape));
  Var o = t.make_node(Tensor<T>::scalar(X[idx]), any_tracked(t, {x}));
  if (t.tracked(o))
    t.record([tp = &t, x, o, idx] {
      if (tp->tracked(x)) tp->grad(x)[idx] += tp->grad(o)[0];
    });
  return o;
}

template <class T>
Var broadcast_grid(Tape<T>& t, Var v, int grid) {
  const Tensor<T>& V = t.val(v);
  const int64_t D = V.numel(), G = grid;
  Tensor<T> out({D, G, G});
  for (int64_t d = 0; d < D; ++d)
    for (int64_t i = 0; i < G * G; ++i) out[d * G * G + i] = V[d];
  Var o = t.make_node(std::move(out), any_tracked(t, {v}));
  if (t.tracked(o))
    t.record([tp = &t, v, o, D, G] {
      if (!tp->tracked(v)) return;
      const Tensor<T>& g = tp->grad(o);
      Tensor<T>& gv = tp->grad(v);
      for (int64_t d = 0; d < D; ++d) {
        T acc = T(0);
        for (int64_t i = 0; i < G * G; ++i) acc += g[d * G * G + i];
        gv[d] += acc;
      }
    });
  return o;
}

template <class T>
Var slice_dim0(Tape<T>& t, Var x, int from, int to) {
  const Tensor<T>& X = t.val(x);
  require(X.ndim() >= 1 && from >= 0 && to > from && to <= X.shape[0],
          "slice_dim0: bad range [" + std::to_string(from) + "," + std::to_string(to) +
              ") for " + shape_str(X.shape));
  Shape s = X.shape;
  s[0] = to - from;
  const int64_t inner = X.numel() / X.shape[0];
  Tensor<T> out(s);
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = X[from * inner + i];
  Var o = t.make_node(std::move(out), any_tracked(t, {x}));
  if (t.tracked(o))
    t.record([tp = &t, x, o, from, inner] {
      if (!tp->tracked(x)) return;
      const Tensor<T>& g = tp->grad(o);
      Tensor<T>& gx = tp->grad(x);
      for (int64_t i = 0; i < g.numel(); ++i) gx[from * inner + i] += g[i];
    });
  return o;
}

template <class T>
Var sum_all(Tape<T>& t, Var a) {
  const Tensor<T>& A = t.val(a);
  T acc = T(0);
  for (int64_t i = 0; i < A.numel(); ++i) acc += A[i];
  Var o = t.make_node(Tensor<T>::scalar(acc), any_tracked(t, {a}));
  if (t.tracked(o))
    t.record([tp = &t, a, o] {
      if (!tp->tracked(a)) return;
      const T g = tp->grad(o)[0];
      Tensor<T>& ga = tp->grad(a);
      for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += g;
    });
  return o;
}

template <class T>
Var mean_all(Tape<T>& t, Var a) {
  const int64_t n = t.val(a).numel();
  return scale(t, sum_all(t, a), T(1) / static_cast<T>(n));
}

template <class T>
Var sum_axis0(Tape<T>& t, Var a) {
  const Tensor<T>& A = t.val(a);
  detail::check_2d(A, "sum_axis0");
  const int64_t R = A.shape[0], C = A.shape[1];
  Tensor<T> out({C});
  for (int64_t r = 0; r < R; ++r)
    for (int64_t c = 0; c < C; ++c) out[c] += A.at2(r, c);
  Var o = t.make_node(std::move(out), any_tracked(t, {a}));
  if (t.tracked(o))
    t.record([tp = &t, a, o, R, C] {
      if (!tp->tracked(a)) return;
      const Tensor<T>& g = tp->grad(o);
      Tensor<T>& ga = tp->grad(a);
      for (int64_t r = 0; r < R; ++r)
        for (int64_t c = 0; c < C; ++c) ga.at2(r, c) += g[c];
    });
  return o;
}

template <class T>
Var sum_axis1(Tape<T>& t, Var a) {
  const Tensor<T>& A = t.val(a);
  detail::check_2d(A, "sum_axis1");
  const int64_t R = A.shape[0], C = A.shape[1];
  Tensor<T> out({R});
  for (int64_t r = 0; r < R; ++r) {
    T acc = T(0);
    for (int64_t c = 0; c < C; ++c) acc += A.at2(r, c);
    out[r] = acc;
  }
  Var o = t.make_node(std::move(out), any_tracked(t, {a}));
  if (t.tracked(o))
    t.record([tp = &t, a, o, R, C] {
      if (!tp->tracked(a)) return;
      const Tensor<T>& g = tp->grad(o);
      Tensor<T>& ga = tp->grad(a);
      for (int64_t r = 0; r < R; ++r)
        for (int64_t c = 0; c < C; ++c) ga.at2(r, c) += g[r];
    });
  return o;
}

template <class T>
Var softmax(Tape<T>& t, Var logits) {
  const Tensor<T>& X = t.val(logits);
  require(X.ndim() >= 1, "softmax: scalar input");
  const int64_t K = X.shape.back();
  const int64_t rows = X.numel() / K;
  Tensor<T> out(X.shape);
  for (int64_t r = 0; r < rows; ++r) {
    const T* xr = X.ptr() + r * K;
    T* yr = out.ptr() + r * K;
    T mx = xr[0];
    for (int64_t k = 1; k < K; ++k) mx = std::max(mx, xr[k]);
    T sum = T(0);
    for (int64_t k = 0; k < K; ++k) {
      yr[k] = std::exp(xr[k] - mx);
      sum += yr[k];
    }
    for (int64_t k = 0; k < K; ++k) yr[k] /= sum;
  }
  Var o = t.make_node(std::move(out), any_tracked(t, {logits}));
  if (t.tracked(o))
    t.record([tp = &t, logits, o, rows, K] {
      if (!tp->tracked(logits)) return;
      const Tensor<T>& g = tp->grad(o);
      const Tensor<T>& y = tp->val(o);
      Tensor<T>& gx = tp->grad(logits);
      for (int64_t r = 0; r < rows; ++r) {
        const T* yr = y.ptr() + r * K;
        const T* gr = g.ptr() + r * K;
        T dot = T(0);
        for (int64_t k = 0; k < K; ++k) dot += yr[k] * gr[k];
        T* gxr = gx.ptr() + r * K;
        for (int64_t k = 0; k < K; ++k) gxr[k] += yr[k] * (gr[k] - dot);
      }
    });
  return o;
}

template <class T>
Var layernorm(Tape<T>& t, Var x, Var gamma, Var beta, T eps) {
  const Tensor<T>& X = t.val(x);
  const int64_t C = X.shape.back();
  const int64_t R = X.numel() / C;
  require(t.val(gamma).numel() == C && t.val(beta).numel() == C,
          "layernorm: gamma/beta length must match trailing extent " + std::to_string(C));
  Tensor<T> out(X.shape);
  Tensor<T> xhat(X.shape);
  Tensor<T> inv_sigma({R});
  const Tensor<T>&G = t.val(gamma), &Bt = t.val(beta);
  for (int64_t r = 0; r < R; ++r) {
    const T* xr = X.ptr() + r * C;
    T mu = T(0);
    for (int64_t c = 0; c < C; ++c) mu += xr[c];
    mu /= static_cast<T>(C);
    T var = T(0);
    for (int64_t c = 0; c < C; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var /= static_cast<T>(C);
    const T is = T(1) / std::sqrt(var + eps);
    inv_sigma[r] = is;
    T* hr = xhat.ptr() + r * C;
    T* yr = out.ptr() + r * C;
    for (int64_t c = 0; c < C; ++c) {
      hr[c] = (xr[c] - mu) * is;
      yr[c] = G[c] * hr[c] + Bt[c];
    }
  }
  Var o = t.make_node(std::move(out), any_tracked(t, {x, gamma, beta}));
  if (t.tracked(o)) {
    auto hs = std::make_shared<Tensor<T>>(std::move(xhat));
    auto is = std::make_shared<Tensor<T>>(std::move(inv_sigma));
    t.record([tp = &t, x, gamma, beta, o, R, C, hs, is] {
      const Tensor<T>& g = tp->grad(o);
      const Tensor<T>& G2 = tp->val(gamma);
      for (int64_t r = 0; r < R; ++r) {
        const T* gr = g.ptr() + r * C;
        const T* hr = hs->ptr() + r * C;
        if (tp->tracked(gamma)) {
          Tensor<T>& gg = tp->grad(gamma);
          for (int64_t c = 0; c < C; ++c) gg[c] += gr[c] * hr[c];
        }
        if (tp->tracked(beta)) {
          Tensor<T>& gb = tp->grad(beta);
          for (int64_t c = 0; c < C; ++c) gb[c] += gr[c];
        }
        if (tp->tracked(x)) {
          T mean_dh = T(0), mean_dh_h = T(0);
          for (int64_t c = 0; c < C; ++c) {
            const T dh = gr[c] * G2[c];
            mean_dh += dh;
            mean_dh_h += dh * hr[c];
          }
          mean_dh /= static_cast<T>(C);
          mean_dh_h /= static_cast<T>(C);
          T* gx = tp->grad(x).ptr() + r * C;
          for (int64_t c = 0; c < C; ++c) {
            const T dh = gr[c] * G2[c];
            gx[c] += (*is)[r] * (dh - mean_dh - hr[c] * mean_dh_h);
          }
        }
      }
    });
  }
  return o;
}

template <class T>
Var cross_entropy(Tape<T>& t, Var probs, std::span<const int> labels) {
  const Tensor<T>& P = t.val(probs);
  const int64_t K = P.shape.back();
  const int64_t B = P.numel() / K;
  require(static_cast<int64_t>(labels.size()) == B,
          "cross_entropy: got " + std::to_string(labels.size()) + " labels for " +
              std::to_string(B) + " rows");
  constexpr T kFloor = T(1e-12);
  T loss = T(0);
  for (int64_t r = 0; r < B; ++r) {
    const int y = labels[r];
    if (y < 0 || y >= K)
      throw std::invalid_argument("cross_entropy: label " + std::to_string(y) +
                                  " out of range [0," + std::to_string(K) + ")");
    loss -= std::log(std::max(P[r * K + y], kFloor));
  }
  loss /= static_cast<T>(B);
  Var o = t.make_node(Tensor<T>::scalar(loss), any_tracked(t, {probs}));
  if (t.tracked(o)) {
    std::vector<int> ls(labels.begin(), labels.end());
    t.record([tp = &t, probs, o, ls, B, K] {
      if (!tp->tracked(probs)) return;
      const T g = tp->grad(o)[0];
      const Tensor<T>& P2 = tp->val(probs);
      Tensor<T>& gp = tp->grad(probs);
      for (int64_t r = 0; r < B; ++r) {
        const T p = P2[r * K + ls[r]];
        if (p > T(1e-12)) gp[r * K + ls[r]] -= g / (p * static_cast<T>(B));
      }
    });
  }
  return o;
}

template <class T>
Var mse(Tape<T>& t, Var a, Var b) {
  const Tensor<T>&A = t.val(a), &B = t.val(b);
  require_same_shape(A.shape, B.shape, "mse");
  const int64_t n = A.numel();
  T acc = T(0);
  for (int64_t i = 0; i < n; ++i) {
    const T d = A[i] - B[i];
    acc += d * d;
  }
  Var o = t.make_node(Tensor<T>::scalar(acc / static_cast<T>(n)), any_tracked(t, {a, b}));
  if (t.tracked(o))
    t.record([tp = &t, a, b, o, n] {
      const T g = tp->grad(o)[0] * T(2) / static_cast<T>(n);
      const Tensor<T>&A2 = tp->val(a), &B2 = tp->val(b);
      const bool ta = tp->tracked(a), tb = tp->tracked(b);
      for (int64_t i = 0; i < n; ++i) {
        const T d = g * (A2[i] - B2[i]);
        if (ta) tp->grad(a)[i] += d;
        if (tb) tp->grad(b)[i] -= d;
      }
    });
  return o;
}

template <class T>
Var conv2d(Tape<T>& t, Var x, Var w, Var b, int stride, int pad) {
  const Tensor<T>&X = t.val(x), &W = t.val(w), &B = t.val(b);
  require(X.ndim() == 3 && W.ndim() == 4, "conv2d: expected x [C,H,W], w [Co,Ci,k,k], got " +
                                              shape_str(X.shape) + " and " + shape_str(W.shape));
  const int64_t Ci = X.shape[0], H = X.shape[1], Wd = X.shape[2];
  const int64_t Co = W.shape[0], k = W.shape[2];
  require(W.shape[1] == Ci && W.shape[3] == k && B.numel() == Co,
          "conv2d: weight " + shape_str(W.shape) + " incompatible with input " +
              shape_str(X.shape));
  const int64_t Ho = (H + 2 * pad - k) / stride + 1;
  const int64_t Wo = (Wd + 2 * pad - k) / stride + 1;
  Tensor<T> out({Co, Ho, Wo});
  for (int64_t co = 0; co < Co; ++co) {
    T* op = out.ptr() + co * Ho * Wo;
    for (int64_t i = 0; i < Ho * Wo; ++i) op[i] = B[co];
    for (int64_t ci = 0; ci < Ci; ++ci) {
      const T* xp = X.ptr() + ci * H * Wd;
      const T* wp = W.ptr() + (co * Ci + ci) * k * k;
      for (int64_t oy = 0; oy < Ho; ++oy) {
        for (int64_t ky = 0; ky < k; ++ky) {
          const int64_t iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          const T* xrow = xp + iy * Wd;
          const T* wrow = wp + ky * k;
          T* orow = op + oy * Wo;
          for (int64_t ox = 0; ox < Wo; ++ox) {
            const int64_t ix0 = ox * stride - pad;
            T acc = T(0);
            for (int64_t kx = 0; kx < k; ++kx) {
              const int64_t ix = ix0 + kx;
              if (ix >= 0 && ix < Wd) acc += xrow[ix] * wrow[kx];
            }
            orow[ox] += acc;
          }
        }
      }
    }
  }
  Var o = t.make_node(std::move(out), any_tracked(t, {x, w, b}));
  if (t.tracked(o))
    t.record([tp = &t, x, w, b, o, Ci, H, Wd, Co, k, Ho, Wo, stride, pad] {
      const Tensor<T>& g = tp->grad(o);
      const Tensor<T>&X2 = tp->val(x), &W2 = tp->val(w);
      const bool tx = tp->tracked(x), tw = tp->tracked(w), tb = tp->tracked(b);
      if (tb) {
        Tensor<T>& gb = tp->grad(b);
        for (int64_t co = 0; co < Co; ++co) {
          const T* gp = g.ptr() + co * Ho * Wo;
          T acc = T(0);
          for (int64_t i = 0; i < Ho * Wo; ++i) acc += gp[i];
          gb[co] += acc;
        }
      }
      if (!tx && !tw) return;
      for (int64_t co = 0; co < Co; ++co) {
        const T* gp = g.ptr() + co * Ho * Wo;
        for (int64_t ci = 0; ci < Ci; ++ci) {
          const T* xp = X2.ptr() + ci * H * Wd;
          const T* wp = W2.ptr() + (co * Ci + ci) * k * k;
          T* gxp = tx ? tp->grad(x).ptr() + ci * H * Wd : nullptr;
          T* gwp = tw ? tp->grad(w).ptr() + (co * Ci + ci) * k * k : nullptr;
          for (int64_t oy = 0; oy < Ho; ++oy) {
            for (int64_t ky = 0; ky < k; ++ky) {
              const int64_t iy = oy * stride - pad + ky;
              if (iy < 0 || iy >= H) continue;
              const T* grow = gp + oy * Wo;
              for (int64_t ox = 0; ox < Wo; ++ox) {
                const T gv = grow[ox];
                const int64_t ix0 = ox * stride - pad;
                for (int64_t kx = 0; kx < k; ++kx) {
                  const int64_t ix = ix0 + kx;
                  if (ix < 0 || ix >= Wd) continue;
                  if (tw) gwp[ky * k + kx] += gv * xp[iy * Wd + ix];
                  if (tx) gxp[iy * Wd + ix] += gv * wp[ky * k + kx];
                }
              }
            }
          }
        }
      }
    });
  return o;
}

template <class T>
Var conv2d_transpose(Tape<T>& t, Var x, Var w, Var b, int stride, int pad) {
  const Tensor<T>&X = t.val(x), &W = t.val(w), &B = t.val(b);
  require(X.ndim() == 3 && W.ndim() == 4,
          "conv2d_transpose: expected x [C,H,W], w [Ci,Co,k,k], got " + shape_str(X.shape) +
              " and " + shape_str(W.shape));
  const int64_t Ci = X.shape[0], H = X.shape[1], Wd = X.shape[2];
  const int64_t Co = W.shape[1], k = W.shape[2];
  require(W.shape[0] == Ci && W.shape[3] == k && B.numel() == Co,
          "conv2d_transpose: weight " + shape_str(W.shape) + " incompatible with input " +
              shape_str(X.shape));
  const int64_t Ho = (H - 1) * stride - 2 * pad + k;
  const int64_t Wo = (Wd - 1) * stride - 2 * pad + k;
  require(Ho > 0 && Wo > 0, "conv2d_transpose: empty output");
  Tensor<T> out({Co, Ho, Wo});
  for (int64_t co = 0; co < Co; ++co) {
    T* op = out.ptr() + co * Ho * Wo;
    for (int64_t i = 0; i < Ho * Wo; ++i) op[i] = B[co];
  }
  for (int64_t ci = 0; ci < Ci; ++ci) {
    const T* xp = X.ptr() + ci * H * Wd;
    for (int64_t co = 0; co < Co; ++co) {
      const T* wp = W.ptr() + (ci * Co + co) * k * k;
      T* op = out.ptr() + co * Ho * Wo;
      for (int64_t iy = 0; iy < H; ++iy) {
        for (int64_t ix = 0; ix < Wd; ++ix) {
          const T xv = xp[iy * Wd + ix];
          if (xv == T(0)) continue;
          for (int64_t ky = 0; ky < k; ++ky) {
            const int64_t oy = iy * stride - pad + ky;
            if (oy < 0 || oy >= Ho) continue;
            T* orow = op + oy * Wo;
            const T* wrow = wp + ky * k;
            for (int64_t kx = 0; kx < k; ++kx) {
              const int64_t ox = ix * stride - pad + kx;
              if (ox >= 0 && ox < Wo) orow[ox] += xv * wrow[kx];
            }
          }
        }
      }
    }
  }
  Var o = t.make_node(std::move(out), any_tracked(t, {x, w, b}));
  if (t.tracked(o))
    t.record([tp = &t, x, w, b, o, Ci, H, Wd, Co, k, Ho, Wo, stride, pad] {
      const Tensor<T>& g = tp->grad(o);
      const Tensor<T>&X2 = tp->val(x), &W2 = tp->val(w);
      const bool tx = tp->tracked(x), tw = tp->tracked(w), tb = tp->tracked(b);
      if (tb) {
        Tensor<T>& gb = tp->grad(b);
        for (int64_t co = 0; co < Co; ++co) {
          const T* gp = g.ptr() + co * Ho * Wo;
          T acc = T(0);
          for (int64_t i = 0; i < Ho * Wo; ++i) acc += gp[i];
          gb[co] += acc;
        }
      }
      if (!tx && !tw) return;
      for (int64_t ci = 0; ci < Ci; ++ci) {
        const T* xp = X2.ptr() + ci * H * Wd;
        T* gxp = tx ? tp->grad(x).ptr() + ci * H * Wd : nullptr;
        for (int64_t co = 0; co < Co; ++co) {
          const T* wp = W2.ptr() + (ci * Co + co) * k * k;
          T* gwp = tw ? tp->grad(w).ptr() + (ci * Co + co) * k * k : nullptr;
          const T* gp = g.ptr() + co * Ho * Wo;
          for (int64_t iy = 0; iy < H; ++iy) {
            for (int64_t ix = 0; ix < Wd; ++ix) {
              const T xv = xp[iy * Wd + ix];
              T gx_acc = T(0);
              for (int64_t ky = 0; ky < k; ++ky) {
                const int64_t oy = iy * stride - pad + ky;
                if (oy < 0 || oy >= Ho) continue;
                const T* grow = gp + oy * Wo;
                const T* wrow = wp + ky * k;
                T* gwrow = gwp ? gwp + ky * k : nullptr;
                for (int64_t kx = 0; kx < k; ++kx) {
                  const int64_t ox = ix * stride - pad + kx;
                  if (ox < 0 || ox >= Wo) continue;
                  const T gv = grow[ox];
                  gx_acc += gv * wrow[kx];
                  if (tw) gwrow[kx] += gv * xv;
                }
              }
              if (tx) gxp[iy * Wd + ix] += gx_acc;
            }
          }
        }
      }
    });
  return o;
}

#define OCEAN_INSTANTIATE_OPS(T)                                               \
  template Var matmul<T>(Tape<T>&, Var, Var);                                  \
  template Var matmul_tn<T>(Tape<T>&, Var, Var);                               \
  template Var transpose<T>(Tape<T>&, Var);                                    \
  template Var affine<T>(Tape<T>&, Var, Var, Var);                             \
  template Var add<T>(Tape<T>&, Var, Var);                                     \
  template Var sub<T>(Tape<T>&, Var, Var);                                     \
  template Var mul<T>(Tape<T>&, Var, Var);                                     \
  template Var scale<T>(Tape<T>&, Var, T);                                     \
  template Var relu<T>(Tape<T>&, Var);                                         \
  template Var tanh_op<T>(Tape<T>&, Var);                                      \
  template Var sigmoid<T>(Tape<T>&, Var);                                      \
  template Var log_clamped<T>(Tape<T>&, Var, T);                               \
  template Var square<T>(Tape<T>&, Var);                                       \
  template Var add_rowvec<T>(Tape<T>&, Var, Var);                              \
  template Var div_colvec<T>(Tape<T>&, Var, Var);                              \
  template Var reshape<T>(Tape<T>&, Var, Shape);                               \
  template Var stack_rows<T>(Tape<T>&, std::span<const Var>);                  \
  template Var gather_row<T>(Tape<T>&, Var, int);                              \
  template Var gather_scalar<T>(Tape<T>&, Var, int);                           \
  template Var broadcast_grid<T>(Tape<T>&, Var, int);                          \
  template Var slice_dim0<T>(Tape<T>&, Var, int, int);                         \
  template Var sum_all<T>(Tape<T>&, Var);                                      \
  template Var mean_all<T>(Tape<T>&, Var);                                     \
  template Var sum_axis0<T>(Tape<T>&, Var);                                    \
  template Var sum_axis1<T>(Tape<T>&, Var);                                    \
  template Var softmax<T>(Tape<T>&, Var);                                      \
  template Var layernorm<T>(Tape<T>&, Var, Var, Var, T);                       \
  template Var cross_entropy<T>(Tape<T>&, Var, std::span<const int>);          \
  template Var mse<T>(Tape<T>&, Var, Var);                                     \
  template Var conv2d<T>(Tape<T>&, Var, Var, Var, int, int);                   \
  template Var conv2d_transpose<T>(Tape<T>&, Var, Var, Var, int, int);

OCEAN_INSTANTIATE_OPS(float)
OCEAN_INSTANTIATE_OPS(double)
#undef OCEAN_INSTANTIATE_OPS

}  // namespace ocean
