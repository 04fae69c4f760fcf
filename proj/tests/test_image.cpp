#include <cmath>
#include <sstream>

#include "doctest.h"
#include "diip/image.hpp"
#include "diip/image_io.hpp"
#include "diip/rng.hpp"
#include "oracles.hpp"

using namespace diip;

namespace {

Image pattern(int h, int w, int c, double phase = 0.0) {
  Image im(h, w, c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = 0; k < c; ++k)
        im.at(y, x, k) = 0.5 + 0.4 * std::sin(0.7 * x + 0.3 * y + phase + k) * std::cos(0.2 * x * y / 7);
  return im;
}

double max_abs_diff(const Image& a, const Image& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("convolution matches brute-force reflect-101 correlation") {
  Philox rng(11);
  for (int c : {1, 3}) {
    Image im = normal_image(9, 13, c, rng);
    for (int size : {1, 3, 5, 9}) {
      const Kernel2D k = gaussian_kernel(size, 1.3);
      CHECK(max_abs_diff(convolve2d(im, k), oracle::correlate(im, oracle::gaussian_weights(size, 1.3), size)) <= 1e-12);
    }
    // Asymmetric kernel catches flipped (convolution vs correlation) indexing.
    Kernel2D a;
    a.size = 3;
    a.weights = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(max_abs_diff(convolve2d(im, a), oracle::correlate(im, a.weights, 3)) <= 1e-12);
  }
}

TEST_CASE("reflect border on a tiny image") {
  Image im(3, 3, 1, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  Kernel2D k;
  k.size = 3;
  k.weights = {0, 0, 0, 1, 0, 0, 0, 0, 0};  // picks the left neighbour
  const Image out = convolve2d(im, k);
  CHECK(out.at(0, 0) == 2.0);  // reflect-101: x=-1 -> 1
  CHECK(out.at(2, 2) == 8.0);
  CHECK_THROWS_AS(convolve2d(Image(2, 3, 1), k), Error);
}

TEST_CASE("laplacian variance matches Welford oracle") {
  Philox rng(3);
  for (int c : {1, 3}) {
    const Image im = normal_image(12, 17, c, rng, 0.3);
    const double ref = oracle::lap_var(im);
    CHECK(std::abs(laplacian_variance(im) - ref) <= 1e-10 * std::max(1.0, ref));
  }
  CHECK(laplacian_variance(Image(8, 8, 1, 0.3)) == 0.0);
}

TEST_CASE("psnr matches oracle and caps on identity") {
  const Image a = pattern(16, 16, 1), b = pattern(16, 16, 1, 0.2);
  CHECK(std::abs(psnr(a, b) - oracle::psnr(a, b)) <= 1e-10);
  CHECK(psnr(a, a) == kPsnrCap);
  // Uniform offset of 0.1 gives exactly 20 dB.
  CHECK(std::abs(psnr(a, a + Image(16, 16, 1, 0.1)) - 20.0) <= 1e-10);
}

TEST_CASE("ssim matches two-pass oracle and scikit-image") {
  const Image a = pattern(16, 16, 1), b = pattern(16, 16, 1, 0.5);
  CHECK(std::abs(ssim(a, b) - oracle::ssim(a, b)) <= 1e-9);
  const Image ar = pattern(13, 15, 3), br = pattern(13, 15, 3, 0.9);
  CHECK(std::abs(ssim(ar, br) - oracle::ssim(ar, br)) <= 1e-9);
  CHECK(std::abs(ssim(a, a) - 1.0) <= 1e-12);

  // skimage structural_similarity(gaussian_weights=True, sigma=1.5,
  // use_sample_covariance=False, data_range=1) on the same arrays.
  Image p(16, 19, 1), q(16, 19, 1);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 19; ++x) {
      p.at(y, x) = 0.5 + 0.4 * std::sin(0.7 * x + 0.3 * y) * std::cos(0.2 * x * y / 7);
      q.at(y, x) = std::max(0.0, p.at(y, x) + 0.1 * std::cos(1.3 * x - 0.9 * y));
    }
  CHECK(std::abs(ssim(p, q) - 0.8734899602424638) <= 1e-9);
}

TEST_CASE("gaussian kernel is normalized and symmetric") {
  const Kernel2D k = gaussian_kernel(7, 2.0);
  CHECK(std::abs(k.sum() - 1.0) <= 1e-14);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) CHECK(k.at(i, j) == doctest::Approx(k.at(6 - j, 6 - i)).epsilon(1e-15));
  CHECK_THROWS_AS(gaussian_kernel(4, 1.0), Error);
}

TEST_CASE("dimg round trip is float32 exact") {
  Philox rng(5);
  const Image im = normal_image(5, 7, 3, rng);
  std::stringstream ss;
  write_dimg(ss, im);
  const Image back = read_dimg(ss);
  REQUIRE(back.same_shape(im));
  for (std::size_t i = 0; i < im.size(); ++i) CHECK(back[i] == static_cast<double>(static_cast<float>(im[i])));
  std::stringstream bad("DIIPIMG 2 1 1 1\n");
  CHECK_THROWS_AS(read_dimg(bad), Error);
}

TEST_CASE("philox is deterministic and stream separated") {
  Philox a(42, 1), b(42, 1), c(42, 2);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u32();
    CHECK(va == b.next_u32());
    differs |= va != c.next_u32();
  }
  CHECK(differs);
  // Philox4x32-10 known-answer vector (Random123): zero counter, zero key.
  const auto out = Philox::block({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);
}

TEST_CASE("normal draws have unit moments") {
  Philox rng(9);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    s += v;
    s2 += v * v;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}
