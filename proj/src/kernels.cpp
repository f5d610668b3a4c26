#include "hystkit/kernels.hpp"

#include <exception>
#include <string>
#include <vector>

#include <omp.h>

#include "hystkit/errors.hpp"

namespace hystkit {

namespace {

void check_sizes(std::size_t inputs, std::size_t states, std::size_t outputs,
                 const BatchOptions& options) {
  if (states != inputs || outputs != inputs) {
    throw InvalidArgument("batch inputs, states and outputs differ in length");
  }
  if (!options.start.empty() && options.start.size() != inputs) {
    throw InvalidArgument("batch start states differ in length from inputs");
  }
}

// Runs eval(i) for every point and rethrows the failure with the lowest
// index. Exceptions must not escape an OpenMP region, so they are parked per
// point first.
template <class Eval>
void for_each_point(std::size_t n, Execution execution, Eval eval) {
  std::vector<std::exception_ptr> errors;
  auto guarded = [&](std::size_t i) {
    try {
      eval(i);
    } catch (...) {
#pragma omp critical(hystkit_batch_errors)
      {
        if (errors.empty()) errors.resize(n);
        errors[i] = std::current_exception();
      }
    }
  };

  if (execution == Execution::Serial) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 32)
    for (long i = 0; i < count; ++i) guarded(static_cast<std::size_t>(i));
  }

  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const OperatorError& e) {
      throw BatchError("point " + std::to_string(i) + ": " + e.what(),
                       e.site(), i);
    }
  }
}

}  // namespace

void forward_batch(const MaterialParams& params, std::span<const Vector2> h,
                   std::span<const MaterialState> prev,
                   const SolverSettings& settings, std::span<ForwardResult> out,
                   const BatchOptions& options) {
  check_sizes(h.size(), prev.size(), out.size(), options);
  params.validate();
  settings.validate();
  for_each_point(h.size(), options.execution, [&](std::size_t i) {
    EvalOptions eval;
    eval.tangent = options.tangent;
    if (!options.start.empty()) eval.start = &options.start[i];
    out[i] = forward_update(params, h[i], prev[i], settings, eval);
  });
}

void inverse_batch(const MaterialParams& params, std::span<const Vector2> b,
                   std::span<const MaterialState> prev,
                   const SolverSettings& settings, std::span<InverseResult> out,
                   const BatchOptions& options) {
  check_sizes(b.size(), prev.size(), out.size(), options);
  params.validate();
  settings.validate();
  for_each_point(b.size(), options.execution, [&](std::size_t i) {
    EvalOptions eval;
    eval.tangent = options.tangent;
    if (!options.start.empty()) eval.start = &options.start[i];
    out[i] = inverse_update(params, b[i], prev[i], settings, eval);
  });
}

int batch_threads() { return omp_get_max_threads(); }

}  // namespace hystkit
