#include "doctest.h"

#include <atomic>
#include <set>
#include <vector>

#include "skillex/common.h"

using namespace skillex;

TEST_CASE("fnv1a64 matches reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("mix_seed separates keys and seeds") {
  CHECK(mix_seed(0, "a") == mix_seed(0, "a"));
  CHECK(mix_seed(0, "a") != mix_seed(0, "b"));
  CHECK(mix_seed(0, "a") != mix_seed(1, "a"));
}

TEST_CASE("uniform_below stays in range and covers it") {
  Rng rng(42);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = uniform_below(rng, 7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  CHECK(uniform_below(rng, 1) == 0);
}

TEST_CASE("parallel_for visits every index once") {
  for (int workers : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(101);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL("called on empty range"); });
}

TEST_CASE("parallel_for propagates exceptions") {
  CHECK_THROWS_AS(parallel_for(10, 2,
                               [](std::size_t i) {
                                 if (i == 5) throw Error(ErrorKind::kParse, "boom");
                               }),
                  Error);
}

TEST_CASE("json_string escapes") {
  CHECK(json_string("a\"b\\c\n") == "\"a\\\"b\\\\c\\n\"");
  CHECK(json_string("") == "\"\"");
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("Error carries its kind") {
  const Error e(ErrorKind::kDuplicateId, "x");
  CHECK(e.kind() == ErrorKind::kDuplicateId);
  CHECK(std::string(to_string(ErrorKind::kDuplicateId)).size() > 0);
}
