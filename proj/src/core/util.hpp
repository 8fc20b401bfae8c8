#pragma once

#include <cstdint>
#include <functional>
#include <string>

namespace segmeta {

// Thread cap: min(hardware, SEGMETA_THREADS). Always at least 1.
int worker_count();

// Runs fn(0..n-1) across workers. Results must be written to disjoint,
// pre-sized slots; iteration order is unspecified.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// FNV-1a over the file bytes, hex-encoded; empty string when unreadable.
std::string file_hash(const std::string& path);

std::string hash_bytes(const void* data, std::size_t size);

}  // namespace segmeta
