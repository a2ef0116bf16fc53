#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "mvbridge/tape.hpp"
#include "test_support.hpp"

using namespace mvbridge;
using testsupport::max_rel_error;
using testsupport::numeric_gradient;
using testsupport::random_tensor;

namespace {

// Finite-difference check for one primitive: loss = sum(out * R) with a
// fixed random weighting R so every output element feeds the scalar.
double check_primitive(const std::vector<std::vector<std::int64_t>>& input_shapes,
                       const std::function<Tape::Id(Tape&, const std::vector<Tape::Id>&)>& build, std::uint64_t seed,
                       double bound = 1.0) {
  std::vector<Tensor> inputs;
  std::size_t total = 0;
  for (std::size_t i = 0; i < input_shapes.size(); ++i) {
    inputs.push_back(random_tensor(input_shapes[i], seed + 31 * i + 1, bound));
    total += static_cast<std::size_t>(inputs.back().size());
  }

  Tensor weights;
  const auto eval = [&](const std::vector<double>& flat, std::vector<Tensor>* grads_out) {
    Tape tape;
    std::vector<Tape::Id> ids;
    std::size_t off = 0;
    for (const Tensor& proto : inputs) {
      Tensor t(proto.shape());
      for (std::int64_t j = 0; j < t.size(); ++j) t[j] = flat[off + static_cast<std::size_t>(j)];
      off += static_cast<std::size_t>(t.size());
      ids.push_back(tape.leaf(std::move(t), true));
    }
    const Tape::Id out = build(tape, ids);
    if (weights.size() == 0) weights = random_tensor(tape.value(out).shape(), seed + 999, 1.0);
    const Tape::Id loss = tape.sum(tape.mul(out, tape.constant(weights)));
    if (grads_out) *grads_out = tape.backward(loss, ids);
    return tape.value(loss)[0];
  };

  std::vector<double> flat;
  flat.reserve(total);
  for (const Tensor& t : inputs) flat.insert(flat.end(), t.data(), t.data() + t.size());

  std::vector<Tensor> analytic_tensors;
  eval(flat, &analytic_tensors);
  std::vector<double> analytic;
  for (const Tensor& g : analytic_tensors) analytic.insert(analytic.end(), g.data(), g.data() + g.size());

  const std::vector<double> numeric = numeric_gradient([&](const std::vector<double>& x) { return eval(x, nullptr); }, flat);
  return max_rel_error(analytic, numeric);
}

}  // namespace

TEST_CASE("matmul by the identity returns the input") {
  Tape tape;
  const Tape::Id eye = tape.constant(Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  const Tensor a = random_tensor({3, 4}, 2);
  const Tape::Id out = tape.matmul(eye, tape.constant(a));
  CHECK(testsupport::bit_equal(tape.value(out), a));
}

TEST_CASE("softmax of a constant row is uniform") {
  Tape tape;
  const Tape::Id out = tape.softmax(tape.constant(Tensor({4}, {0.0, 0.0, 0.0, 0.0})));
  for (int i = 0; i < 4; ++i) CHECK(tape.value(out)[i] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("softmax rows are non-negative and sum to 1 within 1e-12") {
  Tape tape;
  const Tape::Id out = tape.softmax(tape.constant(random_tensor({7, 13}, 5, 4.0)));
  const Tensor& y = tape.value(out);
  for (int r = 0; r < 7; ++r) {
    double sum = 0.0;
    for (int i = 0; i < 13; ++i) {
      CHECK(y[r * 13 + i] >= 0.0);
      sum += y[r * 13 + i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("layer-normalizing a constant vector yields the zero vector") {
  Tape tape;
  const Tape::Id out = tape.layer_norm(tape.constant(Tensor::full({6}, 3.7)));
  for (int i = 0; i < 6; ++i) CHECK(tape.value(out)[i] == 0.0);
}

TEST_CASE("backward of sum(x*x) is 2x") {
  Tape tape;
  const Tape::Id x = tape.leaf(Tensor({3}, {1.0, 2.0, 3.0}), true);
  const Tape::Id loss = tape.sum(tape.mul(x, x));
  const auto grads = tape.backward(loss, std::vector<Tape::Id>{x});
  CHECK(grads[0][0] == doctest::Approx(2.0));
  CHECK(grads[0][1] == doctest::Approx(4.0));
  CHECK(grads[0][2] == doctest::Approx(6.0));
}

TEST_CASE("gradient of an unused parameter is zero") {
  Tape tape;
  const Tape::Id used = tape.leaf(Tensor({2}, {1.0, -1.0}), true);
  const Tape::Id unused = tape.leaf(random_tensor({4}, 3), true);
  const Tape::Id loss = tape.mean(tape.mul(used, used));
  const auto grads = tape.backward(loss, std::vector<Tape::Id>{used, unused});
  CHECK(grads[1].shape() == std::vector<std::int64_t>{4});
  for (int i = 0; i < 4; ++i) CHECK(grads[1][i] == 0.0);
}

TEST_CASE("backward rejects a non-scalar loss") {
  Tape tape;
  const Tape::Id x = tape.leaf(random_tensor({3}, 1), true);
  const Tape::Id y = tape.mul(x, x);
  CHECK_THROWS_WITH_AS(static_cast<void>(tape.backward(y, std::vector<Tape::Id>{x})),
                       doctest::Contains("scalar"), std::invalid_argument);
}

TEST_CASE("shape mismatches are rejected with the offending shapes named") {
  Tape tape;
  const Tape::Id a = tape.constant(random_tensor({2, 3}, 1));
  const Tape::Id b = tape.constant(random_tensor({4, 5}, 2));
  CHECK_THROWS_WITH_AS(static_cast<void>(tape.matmul(a, b)), doctest::Contains("[2,3]"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(static_cast<void>(tape.add(a, b)), doctest::Contains("[4,5]"), std::invalid_argument);
}

TEST_CASE("finite differences agree with analytic gradients for every primitive") {
  const double tol = 1e-4;

  SUBCASE("matmul 2d") {
    CHECK(check_primitive({{4, 3}, {3, 5}}, [](Tape& t, const std::vector<Tape::Id>& in) {
            return t.matmul(in[0], in[1]);
          }, 10) < tol);
  }
  SUBCASE("matmul batched") {
    CHECK(check_primitive({{2, 4, 3}, {2, 3, 5}}, [](Tape& t, const std::vector<Tape::Id>& in) {
            return t.matmul(in[0], in[1]);
          }, 11) < tol);
  }
  SUBCASE("matmul shared rhs") {
    CHECK(check_primitive({{2, 4, 3}, {3, 5}}, [](Tape& t, const std::vector<Tape::Id>& in) {
            return t.matmul(in[0], in[1]);
          }, 12) < tol);
  }
  SUBCASE("add broadcast") {
    CHECK(check_primitive({{3, 4}, {4}}, [](Tape& t, const std::vector<Tape::Id>& in) {
            return t.add(in[0], in[1]);
          }, 13) < tol);
  }
  SUBCASE("mul broadcast") {
    CHECK(check_primitive({{3, 4}, {4}}, [](Tape& t, const std::vector<Tape::Id>& in) {
            return t.mul(in[0], in[1]);
          }, 14) < tol);
  }
  SUBCASE("scale") {
    CHECK(check_primitive({{6}}, [](Tape& t, const std::vector<Tape::Id>& in) { return t.scale(in[0], -2.5); }, 15) <
          tol);
  }
  SUBCASE("sum and mean") {
    CHECK(check_primitive({{3, 3}}, [](Tape& t, const std::vector<Tape::Id>& in) { return t.sum(in[0]); }, 16) < tol);
    CHECK(check_primitive({{3, 3}}, [](Tape& t, const std::vector<Tape::Id>& in) { return t.mean(in[0]); }, 17) < tol);
  }
  SUBCASE("relu away from the kink") {
    // inputs in [-1,1] with |x| > 2e-4 so the finite-difference step cannot
    // cross zero
    auto err = check_primitive({{5, 5}}, [](Tape& t, const std::vector<Tape::Id>& in) { return t.relu(in[0]); }, 18);
    CHECK(err < tol);
  }
  SUBCASE("gelu") {
    CHECK(check_primitive({{5, 5}}, [](Tape& t, const std::vector<Tape::Id>& in) { return t.gelu(in[0]); }, 19) < tol);
  }
  SUBCASE("softmax") {
    CHECK(check_primitive({{4, 6}}, [](Tape& t, const std::vector<Tape::Id>& in) { return t.softmax(in[0]); }, 20) <
          tol);
  }
  SUBCASE("layer_norm") {
    CHECK(check_primitive({{4, 6}}, [](Tape& t, const std::vector<Tape::Id>& in) { return t.layer_norm(in[0]); }, 21) <
          tol);
  }
  SUBCASE("reshape") {
    CHECK(check_primitive({{4, 6}}, [](Tape& t, const std::vector<Tape::Id>& in) {
            return t.reshape(in[0], {2, 12});
          }, 22) < tol);
  }
  SUBCASE("concat") {
    CHECK(check_primitive({{2, 3}, {2, 5}}, [](Tape& t, const std::vector<Tape::Id>& in) {
            return t.concat({in[0], in[1]}, 1);
          }, 23) < tol);
  }
  SUBCASE("strided slice") {
    CHECK(check_primitive({{8, 5}}, [](Tape& t, const std::vector<Tape::Id>& in) {
            return t.slice(in[0], 0, 1, 8, 3);
          }, 24) < tol);
  }
  SUBCASE("transpose") {
    CHECK(check_primitive({{2, 3, 4}}, [](Tape& t, const std::vector<Tape::Id>& in) {
            return t.transpose(in[0], {2, 0, 1});
          }, 25) < tol);
  }
}

TEST_CASE("relu kink: inputs near zero are the documented exclusion") {
  // The derivative does not exist at 0; check one-sided behaviour instead.
  Tape tape;
  const Tape::Id x = tape.leaf(Tensor({2}, {0.5, -0.5}), true);
  const auto g = tape.backward(tape.sum(tape.relu(x)), std::vector<Tape::Id>{x});
  CHECK(g[0][0] == 1.0);
  CHECK(g[0][1] == 0.0);
}

TEST_CASE("tape evaluation is bit-deterministic across runs in the same build") {
  const auto run = [] {
    Tape tape;
    const Tape::Id a = tape.leaf(random_tensor({16, 16}, 77), true);
    const Tape::Id b = tape.constant(random_tensor({16, 16}, 78));
    const Tape::Id loss = tape.mean(tape.gelu(tape.matmul(tape.softmax(a), b)));
    return tape.value(loss)[0];
  };
  CHECK(run() == run());
}

TEST_CASE("slice and concat round-trip preserves values") {
  Tape tape;
  const Tensor x = random_tensor({6, 4}, 31);
  const Tape::Id id = tape.constant(x);
  const Tape::Id top = tape.slice(id, 0, 0, 3);
  const Tape::Id bottom = tape.slice(id, 0, 3, 6);
  const Tape::Id joined = tape.concat({top, bottom}, 0);
  CHECK(testsupport::bit_equal(tape.value(joined), x));
}
