#pragma once

#include <span>

#include "hystkit/forward.hpp"
#include "hystkit/inverse.hpp"

namespace hystkit {

/// Serial is the reference loop; Parallel distributes points over OpenMP
/// threads. Both give bitwise identical results because every point is
/// evaluated independently with the same code.
enum class Execution { Serial, Parallel };

struct BatchOptions {
  Execution execution = Execution::Parallel;
  bool tangent = false;
  /// Optional per-point Newton starts (same length as the batch, or empty).
  std::span<const MaterialState> start;
};

/// out[i] = forward_update(params, h[i], prev[i], ...). On failure throws
/// BatchError for the lowest failing index, independent of thread count.
void forward_batch(const MaterialParams& params, std::span<const Vector2> h,
                   std::span<const MaterialState> prev,
                   const SolverSettings& settings, std::span<ForwardResult> out,
                   const BatchOptions& options = {});

/// out[i] = inverse_update(params, b[i], prev[i], ...); errors as above.
void inverse_batch(const MaterialParams& params, std::span<const Vector2> b,
                   std::span<const MaterialState> prev,
                   const SolverSettings& settings, std::span<InverseResult> out,
                   const BatchOptions& options = {});

/// Threads a Parallel batch will use.
int batch_threads();

}  // namespace hystkit
