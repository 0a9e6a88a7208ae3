#pragma once

namespace msgfem {

/// Execution policy for the data-parallel kernels. `serial` is the reference
/// path; `parallel` distributes rows or subdomains over OpenMP threads and is
/// required to produce bitwise-identical results.
enum class Exec { serial, parallel };

inline bool openmp_enabled() {
#ifdef MSGFEM_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

} // namespace msgfem
