#include <cmath>

#include "doctest.h"
#include "mvbridge/bridge.hpp"
#include "mvbridge/losses.hpp"
#include "test_support.hpp"

using namespace mvbridge;
using testsupport::noise_image;

namespace {

Image const_image(int res, double value) {
  Image img(res, res);
  for (double& v : img.data) v = value;
  return img;
}

// FD over image pixels through a tape-built loss
double image_loss_fd_error(const std::function<Tape::Id(Tape&, Tape::Id, Tape::Id)>& build, int res,
                           std::uint64_t seed) {
  const Image pred0 = noise_image(res, res, seed);
  const Image target = noise_image(res, res, seed + 1);

  const auto eval = [&](const std::vector<double>& flat, std::vector<Tensor>* grad) {
    Tape tape;
    Image pred = pred0;
    pred.data.assign(flat.begin(), flat.end());
    const Tape::Id p = tape.leaf(image_to_tensor(pred), true);
    const Tape::Id t = tape.constant(image_to_tensor(target));
    const Tape::Id loss = build(tape, p, t);
    if (grad) *grad = tape.backward(loss, std::vector<Tape::Id>{p});
    return tape.value(loss)[0];
  };

  std::vector<double> flat(pred0.data.begin(), pred0.data.end());
  std::vector<Tensor> analytic_t;
  eval(flat, &analytic_t);
  const std::vector<double> analytic(analytic_t[0].data(), analytic_t[0].data() + analytic_t[0].size());
  const auto numeric =
      testsupport::numeric_gradient([&](const std::vector<double>& x) { return eval(x, nullptr); }, flat);
  return testsupport::max_rel_error(analytic, numeric);
}

}  // namespace

TEST_CASE("pixel L1: identical images give zero") {
  const Image img = noise_image(16, 16, 3);
  CHECK(pixel_l1({img}, {img}) == 0.0);
}

TEST_CASE("pixel L1: constant 0.25 vs 0.75 gives exactly 0.5") {
  // both constants quantize exactly? 0.25*255=63.75 -> not on the 8-bit grid;
  // use raw constants, the loss itself has no grid requirement
  CHECK(pixel_l1({const_image(8, 0.25)}, {const_image(8, 0.75)}) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("pixel L1 agrees with a naive loop oracle") {
  const Image a = noise_image(12, 12, 5);
  const Image b = noise_image(12, 12, 6);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) acc += std::abs(a.data[i] - b.data[i]);
  acc /= static_cast<double>(a.data.size());
  CHECK(std::abs(pixel_l1({a}, {b}) - acc) <= 1e-12);
}

TEST_CASE("pixel L1 rejects shape mismatches") {
  CHECK_THROWS_AS(pixel_l1({Image(8, 8)}, {Image(8, 12)}), std::invalid_argument);
}

TEST_CASE("perceptual loss: identical inputs give zero, swapped inputs give the same value") {
  const FeatureExtractor extractor(42);
  const Image a = noise_image(16, 16, 7);
  const Image b = noise_image(16, 16, 8);
  CHECK(perceptual_loss(extractor, {a}, {a}) == 0.0);
  CHECK(perceptual_loss(extractor, {a}, {b}) == doctest::Approx(perceptual_loss(extractor, {b}, {a})).epsilon(1e-15));
}

TEST_CASE("extractor weights are frozen by seed") {
  const Image a = noise_image(16, 16, 9);
  const Image b = noise_image(16, 16, 10);
  const double v1 = perceptual_loss(FeatureExtractor(5), {a}, {b});
  const double v2 = perceptual_loss(FeatureExtractor(5), {a}, {b});
  const double v3 = perceptual_loss(FeatureExtractor(6), {a}, {b});
  CHECK(v1 == v2);
  CHECK(v1 != v3);
}

TEST_CASE("perceptual gradient matches finite differences") {
  const FeatureExtractor extractor(11);
  const double err = image_loss_fd_error(
      [&](Tape& tape, Tape::Id p, Tape::Id t) { return perceptual_loss(tape, extractor, {p}, {t}); }, 16, 21);
  CHECK(err < 1e-4);
}

TEST_CASE("gram loss: identical inputs give zero") {
  const FeatureExtractor extractor(13);
  const Image a = noise_image(16, 16, 12);
  CHECK(gram_loss(extractor, {a}, {a}) == 0.0);
}

TEST_CASE("gram matrix is invariant to spatial permutation of the feature map") {
  const Tensor f = testsupport::random_tensor({10, 4}, 31);
  Tensor permuted({10, 4});
  const int perm[10] = {7, 3, 9, 0, 4, 8, 1, 6, 2, 5};
  for (int i = 0; i < 10; ++i)
    for (int c = 0; c < 4; ++c) permuted[i * 4 + c] = f[perm[i] * 4 + c];
  CHECK(testsupport::max_abs_diff(gram_matrix(f), gram_matrix(permuted)) < 1e-15);
}

TEST_CASE("gram matrix: hand-computed 2-pixel 2-channel case") {
  // features rows (1,2) and (3,4): G = f^T f / 2 = [[5,7],[7,10]]
  const Tensor f({2, 2}, {1.0, 2.0, 3.0, 4.0});
  const Tensor g = gram_matrix(f);
  CHECK(g.at({0, 0}) == doctest::Approx(5.0));
  CHECK(g.at({0, 1}) == doctest::Approx(7.0));
  CHECK(g.at({1, 0}) == doctest::Approx(7.0));
  CHECK(g.at({1, 1}) == doctest::Approx(10.0));
}

TEST_CASE("gram matrices are symmetric positive semi-definite") {
  const Tensor f = testsupport::random_tensor({30, 6}, 41);
  const Tensor g = gram_matrix(f);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) CHECK(g.at({i, j}) == g.at({j, i}));
  // PSD via quadratic form samples
  Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(6);
    for (double& x : v) x = rng.uniform(-1, 1);
    double q = 0.0;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) q += v[static_cast<std::size_t>(i)] * g.at({i, j}) * v[static_cast<std::size_t>(j)];
    CHECK(q >= -1e-12);
  }
}

TEST_CASE("gram gradient matches finite differences") {
  const FeatureExtractor extractor(17);
  const double err = image_loss_fd_error(
      [&](Tape& tape, Tape::Id p, Tape::Id t) { return gram_loss(tape, extractor, {p}, {t}); }, 16, 23);
  CHECK(err < 1e-4);
}

TEST_CASE("pixel L1 gradient matches finite differences") {
  const double err =
      image_loss_fd_error([&](Tape& tape, Tape::Id p, Tape::Id t) { return pixel_l1(tape, {p}, {t}); }, 12, 25);
  CHECK(err < 1e-4);
}

TEST_CASE("total loss combines components with the default weights") {
  CHECK(total_loss(0, 0, 0, 0) == 0.0);
  CHECK(total_loss(1, 1, 1, 1) == doctest::Approx(12.1).epsilon(1e-15));
  // linearity in each component, others fixed
  const double base = total_loss(0.5, 0.25, 0.125, 2.0);
  CHECK(total_loss(1.5, 0.25, 0.125, 2.0) - base == doctest::Approx(1.0));
  CHECK(total_loss(0.5, 1.25, 0.125, 2.0) - base == doctest::Approx(1.0));
  CHECK(total_loss(0.5, 0.25, 1.125, 2.0) - base == doctest::Approx(10.0));
  CHECK(total_loss(0.5, 0.25, 0.125, 3.0) - base == doctest::Approx(0.1));
}

TEST_CASE("total loss rejects negative components") {
  CHECK_THROWS_AS(total_loss(-1, 0, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(total_loss(0, 0, -0.5, 0), std::invalid_argument);
}
