#include "efg/alloc_probe.hpp"

#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <new>

namespace {

std::atomic<std::size_t> g_current{0};
std::atomic<std::size_t> g_peak{0};
std::atomic<std::size_t> g_largest{0};
std::atomic<std::size_t> g_count{0};

void raise(std::atomic<std::size_t>& slot, std::size_t value) {
  std::size_t prev = slot.load(std::memory_order_relaxed);
  while (prev < value && !slot.compare_exchange_weak(prev, value, std::memory_order_relaxed)) {
  }
}

// Each block carries a header holding the requested size, so accounting sees
// exactly what the caller asked for, independent of allocator rounding.
constexpr std::size_t kHeader = alignof(std::max_align_t);

std::size_t header_for(std::size_t align) { return align > kHeader ? align : kHeader; }

void* record(void* base, std::size_t requested, std::size_t header) {
  char* p = static_cast<char*>(base) + header;
  reinterpret_cast<std::size_t*>(p)[-1] = requested;
  const std::size_t now = g_current.fetch_add(requested, std::memory_order_relaxed) + requested;
  raise(g_peak, now);
  raise(g_largest, requested);
  g_count.fetch_add(1, std::memory_order_relaxed);
  return p;
}

void release(void* p, std::size_t header) {
  if (!p) return;
  g_current.fetch_sub(reinterpret_cast<std::size_t*>(p)[-1], std::memory_order_relaxed);
  std::free(static_cast<char*>(p) - header);
}

void release(void* p) { release(p, kHeader); }
void release(void* p, std::align_val_t al) { release(p, header_for(static_cast<std::size_t>(al))); }

void* allocate(std::size_t n) {
  void* base = std::malloc(n + kHeader);
  if (!base) throw std::bad_alloc();
  return record(base, n, kHeader);
}

void* allocate_aligned(std::size_t n, std::align_val_t al) {
  const auto a = static_cast<std::size_t>(al);
  const std::size_t h = header_for(a);
  void* base = std::aligned_alloc(a, (n + h + a - 1) / a * a);
  if (!base) throw std::bad_alloc();
  return record(base, n, h);
}

}  // namespace

namespace efg::alloc_probe {

Stats stats() {
  Stats s;
  s.current = g_current.load(std::memory_order_relaxed);
  s.peak = g_peak.load(std::memory_order_relaxed);
  s.largest = g_largest.load(std::memory_order_relaxed);
  s.count = g_count.load(std::memory_order_relaxed);
  return s;
}

void reset_peak() {
  g_peak.store(g_current.load(std::memory_order_relaxed), std::memory_order_relaxed);
  g_largest.store(0, std::memory_order_relaxed);
  g_count.store(0, std::memory_order_relaxed);
}

}  // namespace efg::alloc_probe

void* operator new(std::size_t n) { return allocate(n); }
void* operator new[](std::size_t n) { return allocate(n); }
void* operator new(std::size_t n, const std::nothrow_t&) noexcept {
  try {
    return allocate(n);
  } catch (...) {
    return nullptr;
  }
}
void* operator new[](std::size_t n, const std::nothrow_t&) noexcept {
  try {
    return allocate(n);
  } catch (...) {
    return nullptr;
  }
}
void* operator new(std::size_t n, std::align_val_t al) { return allocate_aligned(n, al); }
void* operator new[](std::size_t n, std::align_val_t al) { return allocate_aligned(n, al); }

void operator delete(void* p) noexcept { release(p); }
void operator delete[](void* p) noexcept { release(p); }
void operator delete(void* p, std::size_t) noexcept { release(p); }
void operator delete[](void* p, std::size_t) noexcept { release(p); }
void operator delete(void* p, std::align_val_t al) noexcept { release(p, al); }
void operator delete[](void* p, std::align_val_t al) noexcept { release(p, al); }
void operator delete(void* p, std::size_t, std::align_val_t al) noexcept { release(p, al); }
void operator delete[](void* p, std::size_t, std::align_val_t al) noexcept { release(p, al); }
