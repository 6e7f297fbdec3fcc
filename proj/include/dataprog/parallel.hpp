#pragma once

namespace dprog {

/// Execution policy for the data-parallel kernels. `serial` is the reference
/// path; `parallel` distributes independent rows/candidates over OpenMP
/// threads and must produce bit-identical results.
enum class Exec { serial, parallel };

/// Number of OpenMP threads the parallel kernels will use.
int max_threads();

}  // namespace dprog
