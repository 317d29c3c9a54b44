#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace skillex {

enum class ErrorKind {
  kParse,
  kIo,
  kInvalidArgument,
  kDuplicateId,
  kEmptyLabel,
  kMissingColumn,
  kUnknownSkill,
  kZeroContent,
  kDimensionMismatch,
  kZeroNorm,
  kBadMagic,
  kTruncatedRecord,
  kDuplicateKey,
  kNonFinite,
  kMissingVector,
  kEmptyPool,
  kNonFiniteLoss,
  kEmptyModelSet,
  kEmptyGold,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and tests)
// can branch on it without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

using SkillId = std::string;

std::uint64_t fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a global seed and a key, so that
/// per-skill randomness does not depend on scheduling order.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view key);

using Rng = std::mt19937_64;

/// Uniform integer in [0, n). Rejection-based so results are identical across
/// standard library implementations (std::uniform_int_distribution is not).
std::uint64_t uniform_below(Rng& rng, std::uint64_t n);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Work is claimed
/// through an atomic counter; fn must write only to slot-local state.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

/// JSON string literal (quoted and escaped) for hand-assembled JSON lines.
std::string json_string(std::string_view value);

/// printf("%.17g"): enough digits to round-trip any double.
std::string format_double(double value);

}  // namespace skillex
