#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "files.h"
#include "skillex/embeddings.h"

using namespace skillex;
using skillex::testing::read_file;
using skillex::testing::TempDir;
using skillex::testing::write_file;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::kParse;
}

}  // namespace

TEST_CASE("hash_encode is deterministic and unit length") {
  const Vector a = hash_encode("Manage musical staff", 256);
  CHECK(a.size() == 256);
  CHECK(a == hash_encode("Manage musical staff", 256));
  CHECK(l2_norm(a) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(a == hash_encode("  MANAGE musical staff.", 256));
}

TEST_CASE("hash_encode similarity follows shared character grams") {
  const Vector staff = hash_encode("manage musical staff", 256);
  CHECK(cosine(staff, hash_encode("manage musicians", 256)) >
        cosine(staff, hash_encode("PostgreSQL", 256)));
}

TEST_CASE("hash_encode errors") {
  CHECK(kind_of([] { hash_encode("abc", 4); }) == ErrorKind::kInvalidArgument);
  CHECK(kind_of([] { hash_encode(" ... ", 64); }) == ErrorKind::kZeroContent);
}

TEST_CASE("cosine") {
  const Vector x{1, 2, 3};
  CHECK(cosine(x, x) == doctest::Approx(1.0));
  CHECK(cosine(Vector{1, 0}, Vector{0, 1}) == doctest::Approx(0.0));
  CHECK(cosine(Vector{1, 0}, Vector{1, 1}) == doctest::Approx(0.70710678).epsilon(1e-6));
  CHECK(kind_of([] { cosine(Vector{1, 0}, Vector{1, 0, 0}); }) == ErrorKind::kDimensionMismatch);
  CHECK(kind_of([] { cosine(Vector{0, 0}, Vector{1, 0}); }) == ErrorKind::kZeroNorm);
}

TEST_CASE("store validation") {
  EmbeddingStore s(2);
  s.add("a", {1, 2});
  CHECK(kind_of([&] { s.add("a", {1, 2}); }) == ErrorKind::kDuplicateKey);
  CHECK(kind_of([&] { s.add("b", {1}); }) == ErrorKind::kDimensionMismatch);
  CHECK(kind_of([&] { s.add("c", {1, std::numeric_limits<float>::quiet_NaN()}); }) ==
        ErrorKind::kNonFinite);
  CHECK(kind_of([&] { s.add("", {1, 2}); }) == ErrorKind::kInvalidArgument);
  CHECK(kind_of([&] { s.at("zz"); }) == ErrorKind::kMissingVector);
  CHECK(s.find("zz") == nullptr);
}

TEST_CASE("store round trip and layout") {
  TempDir dir;
  EmbeddingStore s(4);
  s.add("key-b", {1, 2, 3, 4});
  s.add("key-a", {-1, 0.5f, 0, 1e-30f});
  s.add("key-c", {0, 0, 0, 0});
  write_store(s, dir.file("s.embs"));
  CHECK(std::filesystem::file_size(dir.file("s.embs")) == 20 + 3 * (2 + 5 + 16));
  CHECK(read_store(dir.file("s.embs")) == s);

  const std::string bytes = read_file(dir.file("s.embs"));
  CHECK(bytes.substr(0, 4) == "EMBS");
  // First record is the smallest key.
  CHECK(bytes.substr(22, 5) == "key-a");

  write_store(read_store(dir.file("s.embs")), dir.file("t.embs"));
  CHECK(read_file(dir.file("t.embs")) == bytes);
}

TEST_CASE("empty store is header only") {
  TempDir dir;
  write_store(EmbeddingStore(8), dir.file("e.embs"));
  CHECK(std::filesystem::file_size(dir.file("e.embs")) == kStoreHeaderBytes);
  const EmbeddingStore e = read_store(dir.file("e.embs"));
  CHECK(e.dim() == 8);
  CHECK(e.size() == 0);
}

TEST_CASE("corrupt stores") {
  TempDir dir;
  EmbeddingStore s(64);
  s.add("k", Vector(64, 0.5f));
  write_store(s, dir.file("ok.embs"));
  const std::string bytes = read_file(dir.file("ok.embs"));

  // Record holding 63 floats instead of 64.
  write_file(dir.file("short.embs"), bytes.substr(0, bytes.size() - 4));
  CHECK(kind_of([&] { read_store(dir.file("short.embs")); }) == ErrorKind::kTruncatedRecord);

  write_file(dir.file("magic.embs"), "EMBX" + bytes.substr(4));
  CHECK(kind_of([&] { read_store(dir.file("magic.embs")); }) == ErrorKind::kBadMagic);

  std::string nan = bytes;
  const float q = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + nan.size() - 4, &q, 4);
  write_file(dir.file("nan.embs"), nan);
  CHECK(kind_of([&] { read_store(dir.file("nan.embs")); }) == ErrorKind::kNonFinite);

  CHECK(kind_of([&] { read_store(dir.file("none.embs")); }) == ErrorKind::kIo);
}

TEST_CASE("encoders") {
  EmbeddingStore s(16);
  s.add("x", Vector(16, 1.0f));
  const StoreEncoder strict(s);
  CHECK(strict.encode("x", "ignored") == Vector(16, 1.0f));
  CHECK(kind_of([&] { strict.encode("y", "text"); }) == ErrorKind::kMissingVector);
  const StoreEncoder fallback(s, true);
  CHECK(fallback.encode("y", "some text") == hash_encode("some text", 16));
  CHECK(HashEncoder(16).encode("any", "some text") == hash_encode("some text", 16));
}
