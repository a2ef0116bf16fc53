#include "doctest.h"
#include "mvbridge/codec.hpp"
#include "test_support.hpp"

using namespace mvbridge;

TEST_CASE("constant image encodes to a constant latent") {
  Image img(8, 8);
  for (double& v : img.data) v = 0.625;
  const Tensor z = encode_image(img, 4);
  CHECK(z.shape() == std::vector<std::int64_t>{2, 2, 48});
  for (std::int64_t i = 0; i < z.size(); ++i) CHECK(z[i] == 0.625);
}

TEST_CASE("4x4 image with p=2 follows the documented index mapping") {
  Image img(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = y * 100 + x * 10 + c;  // unique marker per element

  const Tensor z = encode_image(img, 2);
  CHECK(z.shape() == std::vector<std::int64_t>{2, 2, 12});
  // brute-force enumeration of image(py*2+dy, px*2+dx, ch) == latent(py, px, (dy*2+dx)*3+ch)
  for (int py = 0; py < 2; ++py)
    for (int px = 0; px < 2; ++px)
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx)
          for (int ch = 0; ch < 3; ++ch)
            CHECK(z[(py * 2 + px) * 12 + (dy * 2 + dx) * 3 + ch] == img.at(py * 2 + dy, px * 2 + dx, ch));
}

TEST_CASE("decode is the exact inverse of encode over many random images") {
  for (int i = 0; i < 1000; ++i) {
    const Image img = testsupport::noise_image(8, 12, 500 + i);
    const Image back = decode_latent(encode_image(img, 4), 4);
    REQUIRE(testsupport::bit_equal(back, img));
  }
}

TEST_CASE("encode(decode(z)) is the identity on latents") {
  const Tensor z = testsupport::random_tensor({3, 4, 48}, 77);
  const Tensor back = encode_image(decode_latent(z, 4), 4);
  CHECK(testsupport::bit_equal(back, z));
}

TEST_CASE("zero latent decodes to a zero image") {
  const Image img = decode_latent(Tensor::zeros({2, 2, 12}), 2);
  for (double v : img.data) CHECK(v == 0.0);
}

TEST_CASE("codec rejects incompatible dimensions") {
  CHECK_THROWS_AS(encode_image(Image(10, 8), 4), std::invalid_argument);
  CHECK_THROWS_AS(decode_latent(Tensor::zeros({2, 2, 10}), 2), std::invalid_argument);
  CHECK_THROWS_AS(latent_shape(64, 64, 0), std::invalid_argument);
}

TEST_CASE("output shapes are a pure function of input shape and patch") {
  CHECK(latent_shape(64, 64, 4) == std::vector<std::int64_t>{16, 16, 48});
  CHECK(latent_shape(32, 16, 8) == std::vector<std::int64_t>{4, 2, 192});
}
