#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "radocc/layers.hpp"
#include "radocc/tensor.hpp"
#include "radocc/tensor_io.hpp"

using namespace radocc;

TEST_CASE("bilinear sampling matches the textbook formula with zero padding") {
  CounterRng rng(1, "bilinear");
  const Tensor m = oracle::random_tensor({3, 5, 7}, rng);
  std::vector<Point2> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({rng.uniform(-1.5, 7.5), rng.uniform(-1.5, 5.5)});
  const Tensor s = bilinear_sample(m, pts);
  REQUIRE(s.shape() == Shape{3, pts.size()});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < pts.size(); ++i)
      CHECK(s.at(c, i) == doctest::Approx(oracle::bilinear(m, c, pts[i].x, pts[i].y)).epsilon(1e-12));
}

TEST_CASE("trilinear sampling reproduces lattice values and the oracle") {
  CounterRng rng(2, "trilinear");
  const Tensor v = oracle::random_tensor({2, 4, 5, 3}, rng);
  std::vector<Point3> lattice{{1, 2, 0}, {4, 3, 2}, {0, 0, 1}};
  const Tensor at = trilinear_sample(v, lattice);
  CHECK(at.at(1, 0) == v.at(1, 2, 1, 0));
  CHECK(at.at(0, 1) == v.at(0, 3, 4, 2));
  CHECK(at.at(0, 2) == v.at(0, 0, 0, 1));

  std::vector<Point3> pts;
  for (int i = 0; i < 200; ++i)
    pts.push_back({rng.uniform(-1, 5), rng.uniform(-1, 4), rng.uniform(-1, 3)});
  const Tensor s = trilinear_sample(v, pts);
  for (std::size_t i = 0; i < pts.size(); ++i)
    CHECK(s.at(1, i) ==
          doctest::Approx(oracle::trilinear(v, 1, pts[i].x, pts[i].y, pts[i].z)).epsilon(1e-12));
}

TEST_CASE("convolutions agree with direct loops") {
  CounterRng rng(3, "conv");
  const Tensor x2 = oracle::random_tensor({3, 6, 5}, rng);
  const Tensor k2 = oracle::random_tensor({4, 3, 3, 3}, rng);
  const std::vector<double> b{0.1, -0.2, 0.3, 0.0};
  for (std::size_t stride : {1u, 2u}) {
    const Tensor got = conv2d(x2, k2, b, stride, 1);
    const Tensor want = oracle::conv2d(x2, k2, b, stride, 1);
    REQUIRE(got.shape() == want.shape());
    CHECK(max_abs_diff(got, want) < 1e-12);
  }
  const Tensor x3 = oracle::random_tensor({2, 4, 3, 5}, rng);
  const Tensor k3 = oracle::random_tensor({3, 2, 3, 3, 3}, rng);
  const Tensor got3 = conv3d(x3, k3, {}, 1, 1);
  CHECK(max_abs_diff(got3, oracle::conv3d(x3, k3, {}, 1, 1)) < 1e-12);

  const Tensor kt = oracle::random_tensor({2, 3, 2, 2, 2}, rng);
  const std::vector<double> bt{0.5, -0.5, 0.25};
  const Tensor up = conv_transpose3d(x3, kt, bt, 2);
  CHECK(up.shape() == Shape{3, 8, 6, 10});
  CHECK(max_abs_diff(up, oracle::conv_transpose3d(x3, kt, bt, 2)) < 1e-12);
}

TEST_CASE("resize is align-corners") {
  Tensor m({1, 2, 3}, std::vector<double>{0, 1, 2, 3, 4, 5});
  const Tensor r = resize_bilinear(m, 3, 5);
  CHECK(r.at(0, 0, 0) == 0.0);
  CHECK(r.at(0, 2, 4) == 5.0);
  CHECK(r.at(0, 1, 2) == doctest::Approx(2.5));
  CHECK(r.at(0, 0, 1) == doctest::Approx(0.5));
  const Tensor one = resize_bilinear(m, 1, 1);
  CHECK(one.at(0, 0, 0) == doctest::Approx(2.5));
}

TEST_CASE("softmax sums to one and survives large logits") {
  std::vector<double> v{1000.0, 999.0, -1000.0};
  softmax_inplace(v);
  CHECK(v[0] + v[1] + v[2] == doctest::Approx(1.0));
  CHECK(v[2] == 0.0);
  CHECK(std::isfinite(v[0]));
}

TEST_CASE("height helpers") {
  CounterRng rng(4, "height");
  const Tensor bev = oracle::random_tensor({2, 3, 4}, rng);
  const Tensor vol = unsqueeze_height(bev, 5);
  CHECK(vol.shape() == Shape{2, 3, 4, 5});
  CHECK(max_abs_diff(squeeze_height_mean(vol), bev) < 1e-15);
}

TEST_CASE("identity conv block passes input through") {
  CounterRng rng(5, "idconv");
  const Tensor x = oracle::random_tensor({3, 4, 4, 2}, rng);
  CHECK(max_abs_diff(ConvBlock::identity(3, 3, 3).forward(x), x) == 0.0);
}

TEST_CASE("text dump round trips exactly, binary at float precision") {
  CounterRng rng(6, "io");
  const Tensor t = oracle::random_tensor({2, 3, 4}, rng);
  std::stringstream text;
  write_tensor_text(text, t);
  CHECK(read_tensor_text(text) == t);

  std::stringstream bin;
  write_tensor_binary(bin, t);
  const Tensor back = read_tensor_binary(bin);
  REQUIRE(back.shape() == t.shape());
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(back[i] == static_cast<double>(static_cast<float>(t[i])));

  std::stringstream again;
  write_tensor_binary(again, back);
  CHECK(read_tensor_binary(again) == back);
}

TEST_CASE("binary reader rejects bad magic") {
  std::stringstream bad("XXXX0000");
  CHECK_THROWS(read_tensor_binary(bad));
}
