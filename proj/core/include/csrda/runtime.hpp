#pragma once

namespace csrda {

// Keeps large activation buffers on the heap instead of fresh mmap/munmap
// pairs per allocation. Call once at program start; no-op off glibc.
void tune_allocator() noexcept;

}  // namespace csrda
