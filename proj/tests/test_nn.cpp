// Copyright 2026 The cryb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <vector>

#include "doctest.h"

#include "cryb/common/error.hpp"
#include "cryb/nn/layers.hpp"
#include "cryb/nn/optim.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace cryb;
using namespace cryb::nn;
using gradcheck::T64;
using gradcheck::Tape64;

namespace {

template <typename Fn>
Errc code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("tensor shape checks") {
  CHECK(code_of([] { Tensor<float> t({2, 0}); }) == Errc::BadShape);
  CHECK(code_of([] { Tensor<float> t({2, 3}, std::vector<float>(5)); }) == Errc::ShapeMismatch);
  Tensor<float> t({2, 3, 4});
  CHECK(t.numel() == 24);
}

TEST_CASE("conv2d examples") {
  Tape64 tape;
  Rng rng(1);
  T64 x = gradcheck::random_tensor({1, 1, 5, 5}, rng);
  T64 ident({1, 1, 3, 3});
  ident[4] = 1.0;
  T64 zero_b({1});
  const auto y = conv2d(tape, tape.input(x), tape.input(ident), tape.input(zero_b));
  CHECK(tape.value(y) == x);

  T64 constant({1, 1, 5, 5}, 2.5);
  T64 ones({1, 1, 3, 3}, 1.0);
  const auto box = conv2d(tape, tape.input(constant), tape.input(ones), tape.input(zero_b));
  CHECK(tape.value(box)[2 * 5 + 2] == doctest::Approx(9 * 2.5));
  CHECK(tape.value(box)[0] == doctest::Approx(4 * 2.5));  // corner sees 2x2

  // Random multi-channel case against the direct-loop oracle.
  T64 xi = gradcheck::random_tensor({2, 3, 5, 6}, rng);
  T64 w = gradcheck::random_tensor({4, 3, 3, 3}, rng);
  T64 b = gradcheck::random_tensor({4}, rng);
  const auto out = conv2d(tape, tape.input(xi), tape.input(w), tape.input(b));
  const auto ref = oracle::conv3x3(gradcheck::plain(xi), 2, 3, 5, 6, gradcheck::plain(w), gradcheck::plain(b), 4);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(tape.value(out)[i] == doctest::Approx(ref[i]).epsilon(1e-9));

  T64 bad_w({4, 2, 3, 3});
  CHECK(code_of([&] { conv2d(tape, tape.input(xi), tape.input(bad_w), tape.input(b)); }) == Errc::ShapeMismatch);
}

TEST_CASE("batchnorm examples") {
  Tape64 tape;
  RunningStats<double> stats(2);
  T64 x({3, 2, 2, 2});
  for (std::size_t i = 0; i < x.numel(); ++i) x[i] = (i / 4) % 2 == 0 ? 4.0 : -1.0;  // constant per channel
  T64 g({2}, 1.0), b({2}, 0.0);
  const auto y = batchnorm(tape, tape.input(x), tape.input(g), tape.input(b), stats, Mode::Train);
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(tape.value(y)[i] == doctest::Approx(0.0));
  // Running stats move 10% toward the batch statistics.
  CHECK(stats.mean[0] == doctest::Approx(0.4));
  CHECK(stats.mean[1] == doctest::Approx(-0.1));
  CHECK(stats.var[0] == doctest::Approx(0.9));

  Rng rng(2);
  T64 r = gradcheck::random_tensor({4, 2, 3, 3}, rng, 3.0);
  T64 g2({2}, 2.0), b2({2}, 3.0);
  RunningStats<double> s2(2);
  const auto z = batchnorm(tape, tape.input(r), tape.input(g2), tape.input(b2), s2, Mode::Train);
  for (int c = 0; c < 2; ++c) {
    double m = 0, v = 0;
    int n = 0;
    for (int bi = 0; bi < 4; ++bi)
      for (int k = 0; k < 9; ++k) m += tape.value(z)[static_cast<std::size_t>((bi * 2 + c) * 9 + k)], ++n;
    m /= n;
    for (int bi = 0; bi < 4; ++bi)
      for (int k = 0; k < 9; ++k) v += std::pow(tape.value(z)[static_cast<std::size_t>((bi * 2 + c) * 9 + k)] - m, 2);
    CHECK(m == doctest::Approx(3.0));
    CHECK(std::sqrt(v / n) == doctest::Approx(2.0).epsilon(1e-3));
  }

  // Eval mode on a hand-built 1x2x1x1 case.
  RunningStats<double> fixed(2);
  fixed.mean[0] = 1.0;
  fixed.mean[1] = -2.0;
  fixed.var[0] = 4.0;
  fixed.var[1] = 0.25;
  T64 e({1, 2, 1, 1}, std::vector<double>{3.0, -1.0});
  T64 ge({2}, std::vector<double>{2.0, 1.0}), be({2}, std::vector<double>{0.5, -0.5});
  const auto o = batchnorm(tape, tape.input(e), tape.input(ge), tape.input(be), fixed, Mode::Eval);
  CHECK(tape.value(o)[0] == doctest::Approx((3.0 - 1.0) / std::sqrt(4.0 + 1e-5) * 2.0 + 0.5));
  CHECK(tape.value(o)[1] == doctest::Approx((-1.0 + 2.0) / std::sqrt(0.25 + 1e-5) * 1.0 - 0.5));
  CHECK(fixed.mean[0] == 1.0);  // eval leaves statistics alone
}

TEST_CASE("relu, pools and linear") {
  Tape64 tape;
  T64 v({1, 2}, std::vector<double>{-1.0, 2.0});
  const auto r = relu(tape, tape.input(v));
  CHECK(tape.value(r)[0] == 0.0);
  CHECK(tape.value(r)[1] == 2.0);

  T64 c({1, 1, 4, 5}, 1.75);
  const auto gp = global_avg_pool(tape, tape.input(c));
  CHECK(tape.value(gp).shape() == std::vector<int>{1, 1});
  CHECK(tape.value(gp)[0] == doctest::Approx(1.75));

  T64 big({1, 1, 40, 101});
  const auto p = avg_pool(tape, tape.input(big), 4, 3);
  CHECK(tape.value(p).shape() == std::vector<int>{1, 1, 10, 33});

  T64 x({1, 2}, std::vector<double>{1.0, 2.0});
  T64 w({3, 2}, std::vector<double>{1, 0, 0, 1, 1, 1});
  T64 b({3}, std::vector<double>{0.5, 0, -1});
  const auto l = linear(tape, tape.input(x), tape.input(w), tape.input(b));
  CHECK(tape.value(l)[0] == doctest::Approx(1.5));
  CHECK(tape.value(l)[1] == doctest::Approx(2.0));
  CHECK(tape.value(l)[2] == doctest::Approx(2.0));
}

TEST_CASE("hinge loss examples") {
  auto loss = [](std::vector<double> s, int y) {
    Tape64 tape;
    const int k = static_cast<int>(s.size());
    const auto v = tape.input(T64({1, k}, std::move(s)));
    const int labels[] = {y};
    return tape.value(hinge_loss(tape, v, std::span<const int>(labels)))[0];
  };
  CHECK(loss({5, 0}, 0) == 0.0);
  CHECK(loss({0, 0}, 0) == 1.0);
  CHECK(loss({1, 2, 3}, 0) == doctest::Approx(oracle::hinge_row({1, 2, 3}, 0)));
  CHECK(loss({1, 2, 3}, 0) == 5.0);

  Tape64 tape;
  const auto v = tape.input(T64({2, 2}, std::vector<double>{5, 0, 0, 0}));
  const int labels[] = {0, 0};
  CHECK(tape.value(hinge_loss(tape, v, std::span<const int>(labels)))[0] == doctest::Approx(0.5));
  const int bad[] = {0, 2};
  CHECK(code_of([&] { hinge_loss(tape, v, std::span<const int>(bad)); }) == Errc::BadClassIndex);
  const auto one = tape.input(T64({1, 1}));
  const int zero[] = {0};
  CHECK(code_of([&] { hinge_loss(tape, one, std::span<const int>(zero)); }) == Errc::BadShape);
}

TEST_CASE("backward basics") {
  Tape64 tape;
  Rng rng(3);
  const auto x = tape.input(gradcheck::random_tensor({2, 3}, rng), true);
  const auto unused = tape.input(gradcheck::random_tensor({2}, rng), true);
  tape.backward(sum(tape, x));
  for (std::size_t i = 0; i < 6; ++i) CHECK(tape.grad(x)[i] == 1.0);
  CHECK(!tape.has_grad(unused));

  Parameter<double> p("p", T64({2}, 1.0));
  Tape64 t2;
  const auto used = t2.param(p);
  Parameter<double> q("q", T64({2}, 1.0));
  t2.param(q);
  t2.backward(sum(t2, used));
  CHECK(p.grad[0] == 1.0);
  CHECK(q.grad[0] == 0.0);

  Tape64 empty;
  CHECK(code_of([&] { empty.backward(Var{0}); }) == Errc::NoForwardRecorded);
  Tape64 off(false);
  const auto y = off.input(T64({1}, 2.0), true);
  CHECK(code_of([&] { off.backward(y); }) == Errc::NoForwardRecorded);
}

TEST_CASE("finite-difference gradient checks") {
  Rng rng(20260101);
  const int shapes[5][4] = {{2, 3, 5, 6}, {3, 2, 4, 4}, {1, 4, 6, 5}, {2, 1, 7, 3}, {4, 2, 3, 8}};
  using gradcheck::max_relative_error;
  for (const auto& s : shapes) {
    const int n = s[0], c = s[1], h = s[2], w = s[3];
    CAPTURE(n);
    CAPTURE(c);
    const int cout = c + 1;
    const auto x = gradcheck::random_tensor({n, c, h, w}, rng);
    CHECK(max_relative_error({x, gradcheck::random_tensor({cout, c, 3, 3}, rng), gradcheck::random_tensor({cout}, rng)},
                             [](Tape64& t, const std::vector<Var>& v) { return conv2d(t, v[0], v[1], v[2]); }, rng) < 1e-4);
    CHECK(max_relative_error({x, gradcheck::random_tensor({c}, rng), gradcheck::random_tensor({c}, rng)},
                             [c](Tape64& t, const std::vector<Var>& v) {
                               RunningStats<double> stats(c);
                               return batchnorm(t, v[0], v[1], v[2], stats, Mode::Train);
                             }, rng) < 1e-4);
    CHECK(max_relative_error({x}, [](Tape64& t, const std::vector<Var>& v) { return relu(t, v[0]); }, rng) < 1e-4);
    CHECK(max_relative_error({x}, [](Tape64& t, const std::vector<Var>& v) { return global_avg_pool(t, v[0]); }, rng) < 1e-4);
    const auto xp = gradcheck::random_tensor({n, c, 4 * h / 2 + 1, 3 * w / 2 + 2}, rng);
    CHECK(max_relative_error({xp}, [](Tape64& t, const std::vector<Var>& v) { return avg_pool(t, v[0], 4, 3); }, rng) < 1e-4);
    const int din = h, dout = w;
    CHECK(max_relative_error({gradcheck::random_tensor({n, din}, rng), gradcheck::random_tensor({dout, din}, rng),
                              gradcheck::random_tensor({dout}, rng)},
                             [](Tape64& t, const std::vector<Var>& v) { return linear(t, v[0], v[1], v[2]); }, rng) < 1e-4);
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) labels.push_back(static_cast<int>(rng.below(static_cast<std::size_t>(c + 1))));
    CHECK(max_relative_error({gradcheck::random_tensor({n, c + 1}, rng, 2.0)},
                             [labels](Tape64& t, const std::vector<Var>& v) {
                               return hinge_loss(t, v[0], std::span<const int>(labels));
                             }, rng) < 1e-4);
  }
}

TEST_CASE("sgd with momentum") {
  Parameter<double> p("p", T64({1}, 1.0));
  std::vector<Parameter<double>*> ps{&p};
  sgd_step<double>(ps, 0.1);
  CHECK(p.value[0] == 1.0);
  p.grad[0] = 2.0;
  sgd_step<double>(ps, 0.1);
  CHECK(p.value[0] == doctest::Approx(1.0 - 0.2));
  sgd_step<double>(ps, 0.1);
  CHECK(p.value[0] == doctest::Approx(1.0 - 0.1 * 2.9 * 2.0));
  zero_grad<double>(ps);
  CHECK(p.grad[0] == 0.0);
}

TEST_CASE("glorot uniform") {
  CHECK(glorot_bound({45, 45, 3, 3}) == doctest::Approx(std::sqrt(6.0 / 810.0)));
  CHECK(glorot_bound({45, 45, 3, 3}) == doctest::Approx(0.08607).epsilon(1e-4));
  CHECK(glorot_bound({2, 45}) == doctest::Approx(std::sqrt(6.0 / 47.0)));
  CHECK(code_of([] { glorot_bound({45}); }) == Errc::BadShape);
  Rng a(7), b(7);
  CHECK(glorot_uniform<float>({4, 3, 3, 3}, a) == glorot_uniform<float>({4, 3, 3, 3}, b));
}
