#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ocean/tape.hpp"

namespace ocean {

template <class T>
struct FdBlockResult {
  std::string name;
  T max_rel_err = T(0);
  int64_t worst_index = -1;
  T analytic_at_worst = T(0);
  T fd_at_worst = T(0);
};

template <class T>
struct FdReport {
  std::vector<FdBlockResult<T>> blocks;
  T max_rel_err = T(0);
  T tolerance = T(0);
  bool passed() const { return max_rel_err < tolerance; }
  std::string summary() const;
};

/// Compares analytic gradients of f against central finite differences for
/// every element of every block. f must deterministically rebuild the same
/// scalar loss on the given tape; failures are reported, never thrown.
/// rel err = |a - fd| / max(|a|, |fd|, denom_floor).
template <class T>
FdReport<T> finite_diff_check(const std::function<Var(Tape<T>&)>& f,
                              std::span<ParamBlock<T>* const> blocks, T step = T(1e-3),
                              T tolerance = T(1e-4), T denom_floor = T(1e-4));

extern template struct FdReport<float>;
extern template struct FdReport<double>;
extern template FdReport<float> finite_diff_check<float>(
    const std::function<Var(Tape<float>&)>&, std::span<ParamBlock<float>* const>, float, float,
    float);
extern template FdReport<double> finite_diff_check<double>(
    const std::function<Var(Tape<double>&)>&, std::span<ParamBlock<double>* const>, double,
    double, double);

}  // namespace ocean
