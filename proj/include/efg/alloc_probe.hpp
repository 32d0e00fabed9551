#pragma once

#include <cstddef>

// Heap accounting through replaced global operator new/delete. Only binaries
// that link the efg_alloc_probe library get these definitions.
namespace efg::alloc_probe {

struct Stats {
  std::size_t current = 0;   // live bytes
  std::size_t peak = 0;      // high-water mark of `current` since reset_peak()
  std::size_t largest = 0;   // largest single allocation since reset_peak()
  std::size_t count = 0;     // allocations since reset_peak()
};

Stats stats();

/// Starts a new measurement window: peak = current, largest = count = 0.
void reset_peak();

}  // namespace efg::alloc_probe
