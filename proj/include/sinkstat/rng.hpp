#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace sinkstat {

using Rng = std::mt19937_64;

/// Mixes a base seed with a stream index so that replicate j always gets the
/// same generator regardless of which thread runs it.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Runs body(i) for i in [0, count) on up to hardware_concurrency threads.
/// Each index is visited exactly once; body must only write to slot i.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace sinkstat
