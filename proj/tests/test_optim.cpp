#include <cmath>

#include "doctest.h"
#include "mvbridge/optim.hpp"
#include "test_support.hpp"

using namespace mvbridge;

TEST_CASE("adam: zero gradient leaves parameters unchanged and bumps the step count") {
  std::vector<Tensor> params{testsupport::random_tensor({3, 3}, 1)};
  const Tensor before = params[0];
  AdamState state = AdamState::init(params, {});
  adam_step(params, {Tensor::zeros({3, 3})}, state);
  CHECK(state.step == 1);
  CHECK(testsupport::bit_equal(params[0], before));
}

TEST_CASE("adam: first scalar update with defaults and lr 0.1 is -0.1") {
  // hand evaluation at t=1: m_hat = g, v_hat = g^2, update = lr * g/(|g|+eps)
  std::vector<Tensor> params{Tensor::scalar(0.0)};
  AdamConfig config;
  config.learning_rate = 0.1;
  AdamState state = AdamState::init(params, config);
  adam_step(params, {Tensor::scalar(1.0)}, state);
  CHECK(params[0][0] == doctest::Approx(-0.1).epsilon(1e-7));
}

TEST_CASE("adam: identical tensors with identical gradients get identical updates") {
  const Tensor init = testsupport::random_tensor({4}, 9);
  const Tensor grad = testsupport::random_tensor({4}, 10);
  std::vector<Tensor> params{init, init};
  AdamState state = AdamState::init(params, {});
  adam_step(params, {grad, grad}, state);
  CHECK(testsupport::bit_equal(params[0], params[1]));
}

TEST_CASE("adam rejects non-finite gradients naming the parameter") {
  std::vector<Tensor> params{Tensor::scalar(0.0), Tensor::scalar(0.0)};
  AdamState state = AdamState::init(params, {});
  CHECK_THROWS_WITH_AS(adam_step(params, {Tensor::scalar(0.0), Tensor::scalar(std::nan(""))}, state),
                       doctest::Contains("parameter 1"), std::invalid_argument);
}

TEST_CASE("adam rejects shape mismatches") {
  std::vector<Tensor> params{Tensor::zeros({2})};
  AdamState state = AdamState::init(params, {});
  CHECK_THROWS_AS(adam_step(params, {Tensor::zeros({3})}, state), std::invalid_argument);
}
