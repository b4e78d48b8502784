#pragma once

#include <span>

#include "ocean/tape.hpp"

namespace ocean {

// All ops compute forward values immediately and record their backward pass on
// the tape. Output nodes are tracked iff any input is tracked.

// ---- linear algebra ----
template <class T> Var matmul(Tape<T>& t, Var a, Var b);      // [M,K]x[K,N] -> [M,N]
template <class T> Var matmul_tn(Tape<T>& t, Var a, Var b);   // [K,M]^T x [K,N] -> [M,N]
template <class T> Var transpose(Tape<T>& t, Var a);          // [R,C] -> [C,R]

/// x:[B,I] or [I], w:[I,O], b:[O] -> x.w + b
template <class T> Var affine(Tape<T>& t, Var x, Var w, Var b);

// ---- elementwise ----
template <class T> Var add(Tape<T>& t, Var a, Var b);
template <class T> Var sub(Tape<T>& t, Var a, Var b);
template <class T> Var mul(Tape<T>& t, Var a, Var b);
template <class T> Var scale(Tape<T>& t, Var a, T c);
template <class T> Var relu(Tape<T>& t, Var a);
template <class T> Var tanh_op(Tape<T>& t, Var a);
template <class T> Var sigmoid(Tape<T>& t, Var a);
template <class T> Var log_clamped(Tape<T>& t, Var a, T floor = T(1e-12));
template <class T> Var square(Tape<T>& t, Var a);

// ---- broadcasting / shaping ----
template <class T> Var add_rowvec(Tape<T>& t, Var a, Var v);   // [R,C] + [C]
template <class T> Var div_colvec(Tape<T>& t, Var a, Var d);   // [R,C] / d[c] per column
template <class T> Var reshape(Tape<T>& t, Var a, Shape s);
template <class T> Var stack_rows(Tape<T>& t, std::span<const Var> rows);  // N x [D] -> [N,D]
template <class T> Var gather_row(Tape<T>& t, Var x, int row);             // [N,D] -> [D]
template <class T> Var gather_scalar(Tape<T>& t, Var x, int idx);          // [K] -> [1]
template <class T> Var broadcast_grid(Tape<T>& t, Var v, int grid);        // [D] -> [D,G,G]
template <class T> Var slice_dim0(Tape<T>& t, Var x, int from, int to);    // [C,...] -> [to-from,...]

// ---- reductions ----
template <class T> Var sum_all(Tape<T>& t, Var a);    // -> [1]
template <class T> Var mean_all(Tape<T>& t, Var a);   // -> [1]
template <class T> Var sum_axis0(Tape<T>& t, Var a);  // [R,C] -> [C]
template <class T> Var sum_axis1(Tape<T>& t, Var a);  // [R,C] -> [R]

// ---- normalisation / losses ----
/// Softmax over the trailing axis, computed with max-subtraction.
template <class T> Var softmax(Tape<T>& t, Var logits);
/// Row-wise layer normalisation with affine parameters gamma, beta: [*,C].
template <class T> Var layernorm(Tape<T>& t, Var x, Var gamma, Var beta, T eps = T(1e-5));
/// Mean over rows of -log(prob of the true label), inputs clamped at 1e-12.
/// probs: [B,Y] (or [Y] with one label).
template <class T> Var cross_entropy(Tape<T>& t, Var probs, std::span<const int> labels);
/// Mean squared error between two same-shaped tensors.
template <class T> Var mse(Tape<T>& t, Var a, Var b);

// ---- convolution ----
/// x:[Cin,H,W], w:[Cout,Cin,k,k], b:[Cout]; zero padding.
template <class T> Var conv2d(Tape<T>& t, Var x, Var w, Var b, int stride, int pad);
/// x:[Cin,H,W], w:[Cin,Cout,k,k], b:[Cout]; output (H-1)*stride - 2*pad + k.
template <class T> Var conv2d_transpose(Tape<T>& t, Var x, Var w, Var b, int stride, int pad);

#define OCEAN_DECLARE_OPS(T)                                                          \
  extern template Var matmul<T>(Tape<T>&, Var, Var);                                  \
  extern template Var matmul_tn<T>(Tape<T>&, Var, Var);                               \
  extern template Var transpose<T>(Tape<T>&, Var);                                    \
  extern template Var affine<T>(Tape<T>&, Var, Var, Var);                             \
  extern template Var add<T>(Tape<T>&, Var, Var);                                     \
  extern template Var sub<T>(Tape<T>&, Var, Var);                                     \
  extern template Var mul<T>(Tape<T>&, Var, Var);                                     \
  extern template Var scale<T>(Tape<T>&, Var, T);                                     \
  extern template Var relu<T>(Tape<T>&, Var);                                         \
  extern template Var tanh_op<T>(Tape<T>&, Var);                                      \
  extern template Var sigmoid<T>(Tape<T>&, Var);                                      \
  extern template Var log_clamped<T>(Tape<T>&, Var, T);                               \
  extern template Var square<T>(Tape<T>&, Var);                                       \
  extern template Var add_rowvec<T>(Tape<T>&, Var, Var);                              \
  extern template Var div_colvec<T>(Tape<T>&, Var, Var);                              \
  extern template Var reshape<T>(Tape<T>&, Var, Shape);                               \
  extern template Var stack_rows<T>(Tape<T>&, std::span<const Var>);                  \
  extern template Var gather_row<T>(Tape<T>&, Var, int);                              \
  extern template Var gather_scalar<T>(Tape<T>&, Var, int);                           \
  extern template Var broadcast_grid<T>(Tape<T>&, Var, int);                          \
  extern template Var slice_dim0<T>(Tape<T>&, Var, int, int);                         \
  extern template Var sum_all<T>(Tape<T>&, Var);                                      \
  extern template Var mean_all<T>(Tape<T>&, Var);                                     \
  extern template Var sum_axis0<T>(Tape<T>&, Var);                                    \
  extern template Var sum_axis1<T>(Tape<T>&, Var);                                    \
  extern template Var softmax<T>(Tape<T>&, Var);                                      \
  extern template Var layernorm<T>(Tape<T>&, Var, Var, Var, T);                       \
  extern template Var cross_entropy<T>(Tape<T>&, Var, std::span<const int>);          \
  extern template Var mse<T>(Tape<T>&, Var, Var);                                     \
  extern template Var conv2d<T>(Tape<T>&, Var, Var, Var, int, int);                   \
  extern template Var conv2d_transpose<T>(Tape<T>&, Var, Var, Var, int, int);

OCEAN_DECLARE_OPS(float)
OCEAN_DECLARE_OPS(double)
#undef OCEAN_DECLARE_OPS

}  // namespace ocean
