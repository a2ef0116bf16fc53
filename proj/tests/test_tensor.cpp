#include <cstdint>
#include <sstream>

#include "doctest.h"
#include "mvbridge/rng.hpp"
#include "mvbridge/tensor.hpp"
#include "test_support.hpp"

using namespace mvbridge;

TEST_CASE("tensor shape/data consistency is enforced") {
  CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor({0, 3}), std::invalid_argument);
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.shape_str() == "[2,3]");
}

TEST_CASE("serialization: header line + little-endian payload round-trips bit-exactly") {
  Tensor t = testsupport::random_tensor({3, 5, 2}, 11);
  std::stringstream ss;
  write_tensor(ss, t);

  std::string header;
  std::getline(ss, header);
  CHECK(header == "{\"dtype\":\"f64\",\"shape\":[3,5,2]}");

  ss.seekg(0);
  const Tensor back = read_tensor(ss);
  CHECK(back.shape() == t.shape());
  CHECK(testsupport::bit_equal(back, t));
}

TEST_CASE("serialization rejects truncated payloads") {
  Tensor t = testsupport::random_tensor({4, 4}, 3);
  std::stringstream ss;
  write_tensor(ss, t);
  std::string blob = ss.str();
  blob.resize(blob.size() - 8);
  std::stringstream cut(blob);
  CHECK_THROWS_AS(read_tensor(cut), std::runtime_error);
}

TEST_CASE("rng streams are reproducible and seed-sensitive") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  bool differs = false;
  Rng a2(42);
  for (int i = 0; i < 10; ++i) differs = differs || (a2.next_u64() != c.next_u64());
  CHECK(differs);
}

TEST_CASE("rng uniform lies in [0,1) and normal has sane moments") {
  Rng rng(7);
  double sum = 0.0, sum2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sum2 / n - 1.0) < 0.05);
}

TEST_CASE("uniform init respects the fan-in bound") {
  Rng rng(5);
  const Tensor w = Tensor::uniform({64, 64}, 0.125, rng);
  for (std::int64_t i = 0; i < w.size(); ++i) {
    CHECK(w[i] <= 0.125);
    CHECK(w[i] >= -0.125);
  }
}
