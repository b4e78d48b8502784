#include "ocean/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ocean {

template <class T>
std::string FdReport<T>::summary() const {
  std::ostringstream os;
  os << "finite-diff check: max rel err " << max_rel_err << " (tolerance " << tolerance
     << ", " << (passed() ? "pass" : "FAIL") << ")\n";
  for (const auto& b : blocks) {
    os << "  " << b.name << ": max rel err " << b.max_rel_err;
    if (b.worst_index >= 0)
      os << " at [" << b.worst_index << "] analytic=" << b.analytic_at_worst
         << " fd=" << b.fd_at_worst;
    os << "\n";
  }
  return os.str();
}

template <class T>
FdReport<T> finite_diff_check(const std::function<Var(Tape<T>&)>& f,
                              std::span<ParamBlock<T>* const> blocks, T step, T tolerance,
                              T denom_floor) {
  for (ParamBlock<T>* b : blocks) b->zero_grad();

  std::vector<Tensor<T>> analytic;
  {
    Tape<T> tape;
    Var loss = f(tape);
    // a loss that never touches a tracked node has zero gradient everywhere
    if (tape.tracked(loss)) tape.backward(loss);
  }
  for (ParamBlock<T>* b : blocks) {
    analytic.push_back(b->grad);
    b->zero_grad();
  }

  auto eval = [&]() -> T {
    Tape<T> tape(false);
    Var loss = f(tape);
    return tape.val(loss)[0];
  };

  FdReport<T> report;
  report.tolerance = tolerance;
  for (size_t bi = 0; bi < blocks.size(); ++bi) {
    ParamBlock<T>* b = blocks[bi];
    FdBlockResult<T> res;
    res.name = b->name;
    for (int64_t i = 0; i < b->numel(); ++i) {
      const T saved = b->value[i];
      b->value[i] = saved + step;
      const T up = eval();
      b->value[i] = saved - step;
      const T down = eval();
      b->value[i] = saved;
      const T fd = (up - down) / (T(2) * step);
      const T a = analytic[bi][i];
      const T denom = std::max({std::abs(a), std::abs(fd), denom_floor});
      const T rel = std::abs(a - fd) / denom;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_index = i;
        res.analytic_at_worst = a;
        res.fd_at_worst = fd;
      }
    }
    report.max_rel_err = std::max(report.max_rel_err, res.max_rel_err);
    report.blocks.push_back(std::move(res));
  }
  return report;
}

template struct FdReport<float>;
template struct FdReport<double>;
template FdReport<float> finite_diff_check<float>(const std::function<Var(Tape<float>&)>&,
                                                  std::span<ParamBlock<float>* const>, float,
                                                  float, float);
template FdReport<double> finite_diff_check<double>(const std::function<Var(Tape<double>&)>&,
                                                    std::span<ParamBlock<double>* const>,
                                                    double, double, double);

}  // namespace ocean
