#include "skillex/common.h"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <json.hpp>

namespace skillex {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kDuplicateId: return "duplicate id";
    case ErrorKind::kEmptyLabel: return "empty label";
    case ErrorKind::kMissingColumn: return "missing column";
    case ErrorKind::kUnknownSkill: return "unknown skill";
    case ErrorKind::kZeroContent: return "zero content";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kZeroNorm: return "zero norm";
    case ErrorKind::kBadMagic: return "bad magic";
    case ErrorKind::kTruncatedRecord: return "truncated record";
    case ErrorKind::kDuplicateKey: return "duplicate key";
    case ErrorKind::kNonFinite: return "non-finite value";
    case ErrorKind::kMissingVector: return "missing vector";
    case ErrorKind::kEmptyPool: return "empty pool";
    case ErrorKind::kNonFiniteLoss: return "non-finite loss";
    case ErrorKind::kEmptyModelSet: return "empty model set";
    case ErrorKind::kEmptyGold: return "empty gold";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind) {}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view key) {
  return splitmix64(splitmix64(seed) ^ fnv1a64(key));
}

std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "uniform_below(0)");
  // 2^64 mod n; draws below it would bias the low residues.
  const std::uint64_t threshold = (std::uint64_t{0} - n) % n;
  while (true) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t threads =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          next.store(n);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string json_string(std::string_view value) {
  return nlohmann::json(std::string(value)).dump();
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace skillex
