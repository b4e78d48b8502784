#include <doctest.h>

#include "ocean/rng.hpp"
#include "ocean/tensor.hpp"

using namespace ocean;

TEST_CASE("tensor basics") {
  Tensor32 t({2, 3});
  CHECK(t.numel() == 6);
  CHECK(t.all_finite());
  t.at2(1, 2) = 5.0f;
  CHECK(t[5] == 5.0f);

  CHECK_THROWS(Tensor32({2}, std::vector<float>{1.f, 2.f, 3.f}));

  Tensor32 nan_t({2});
  nan_t[0] = std::nanf("");
  CHECK_FALSE(nan_t.all_finite());
}

TEST_CASE("rng determinism and keyed streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c(42), d(43);
  bool differs = false;
  for (int i = 0; i < 10; ++i) differs = differs || (c.next_u64() != d.next_u64());
  CHECK(differs);

  // child streams are independent of draw order on the parent
  Rng root(7);
  Rng child1 = root.child({1, 2});
  root.next_u64();
  Rng child2 = Rng(7).child({1, 2});
  CHECK(child1.next_u64() == child2.next_u64());
}

TEST_CASE("rng uniformity sanity") {
  Rng rng(123);
  const int n = 20000;
  int buckets[4] = {0, 0, 0, 0};
  for (int i = 0; i < n; ++i) buckets[rng.randint(4)]++;
  for (int k = 0; k < 4; ++k) CHECK(std::abs(buckets[k] - n / 4) < 300);

  double mean = 0, m2 = 0;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    mean += x;
    m2 += x * x;
  }
  mean /= n;
  m2 /= n;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(m2 - 1.0) < 0.05);
}
