// Training allocates and frees tensors of a few megabytes every iteration.
// With glibc's default thresholds each of them is a fresh mmap whose pages are
// faulted in and zeroed again, which costs more system time than the GEMMs.
// Raising the mmap and trim thresholds keeps those blocks on the heap.
#pragma once

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace ddir {

inline void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

}  // namespace ddir
