#include <doctest.h>

#include <cmath>

#include "fd_cases.hpp"
#include "ocean/nn.hpp"
#include "ocean/ops.hpp"
#include "testutil.hpp"

using namespace ocean;
using ocean::testutil::block;
using ocean::testutil::uniform_tensor;

TEST_CASE("affine: identity and zero-weight cases") {
  auto w_id = block<float>("w", {2, 2}, {1.f, 0.f, 0.f, 1.f});
  auto b0 = block<float>("b", {2}, {0.f, 0.f});
  Tape<float> t;
  Var x = t.constant(Tensor32({1, 2}, {1.f, 2.f}));
  Var y = affine(t, x, t.leaf(w_id), t.leaf(b0));
  CHECK(t.val(y)[0] == 1.f);
  CHECK(t.val(y)[1] == 2.f);

  auto w0 = block<float>("w0", {2, 2}, {0.f, 0.f, 0.f, 0.f});
  auto b34 = block<float>("b34", {2}, {3.f, 4.f});
  Var y2 = affine(t, x, t.leaf(w0), t.leaf(b34));
  CHECK(t.val(y2)[0] == 3.f);
  CHECK(t.val(y2)[1] == 4.f);
}

TEST_CASE("affine: random instance matches naive triple-loop oracle") {
  Rng rng(7);
  Tensor64 X = uniform_tensor<double>({2, 3}, rng);
  Tensor64 W = uniform_tensor<double>({3, 2}, rng);
  Tensor64 B = uniform_tensor<double>({2}, rng);
  Tape<double> t;
  auto wb = ParamBlock<double>("w", W);
  auto bb = ParamBlock<double>("b", B);
  Var y = affine(t, t.constant(X), t.leaf(wb), t.leaf(bb));

  for (int64_t i = 0; i < 2; ++i)
    for (int64_t j = 0; j < 2; ++j) {
      double acc = B[j];
      for (int64_t k = 0; k < 3; ++k) acc += X.at2(i, k) * W.at2(k, j);
      CHECK(t.val(y).at2(i, j) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("affine: shape mismatch names both shapes") {
  Tape<float> t;
  auto w = block<float>("w", {3, 2}, {0, 0, 0, 0, 0, 0});
  auto b = block<float>("b", {2}, {0, 0});
  Var x = t.constant(Tensor32({1, 2}, {1.f, 2.f}));
  try {
    affine(t, x, t.leaf(w), t.leaf(b));
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[1,2]") != std::string::npos);
    CHECK(msg.find("[3,2]") != std::string::npos);
  }
}

TEST_CASE("gru_cell: zero params halve the hidden state") {
  Rng rng(1);
  GruParams<float> gru("g", 2, 2, rng);
  for (auto* p : gru.params()) p->value.fill(0.f);
  Tape<float> t;
  Var e = t.constant(Tensor32({2}, {0.3f, -0.2f}));
  Var h = t.constant(Tensor32({2}, {1.f, 0.f}));
  Var h1 = gru_cell(t, e, h, gru);
  // z = sigmoid(0) = 0.5, htil = tanh(0) = 0 -> h' = 0.5*h
  CHECK(t.val(h1)[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(t.val(h1)[1] == doctest::Approx(0.0).epsilon(1e-6));

  Var e0 = t.constant(Tensor32({2}));
  Var h0 = t.constant(Tensor32({2}));
  Var h2 = gru_cell(t, e0, h0, gru);
  CHECK(t.val(h2)[0] == 0.f);
  CHECK(t.val(h2)[1] == 0.f);
}

TEST_CASE("gru_cell: random instance matches hand-unrolled scalar oracle") {
  Rng rng(21);
  const int64_t I = 3, H = 4;
  GruParams<double> gru("g", I, H, rng);
  Tensor64 e = uniform_tensor<double>({I}, rng);
  Tensor64 h = uniform_tensor<double>({H}, rng);

  Tape<double> t;
  Var out = gru_cell(t, t.constant(e), t.constant(h), gru);

  auto matvec = [&](const Tensor64& w, const Tensor64& x, int64_t rows, int64_t cols,
                    int64_t j) {
    double acc = 0;
    for (int64_t i = 0; i < rows; ++i) acc += x[i] * w.at2(i, j);
    (void)cols;
    return acc;
  };
  for (int64_t j = 0; j < H; ++j) {
    const double zj = 1.0 / (1.0 + std::exp(-(matvec(gru.wz.value, e, I, H, j) +
                                              matvec(gru.uz.value, h, H, H, j) +
                                              gru.bz.value[j])));
    const double rj = 1.0 / (1.0 + std::exp(-(matvec(gru.wr.value, e, I, H, j) +
                                              matvec(gru.ur.value, h, H, H, j) +
                                              gru.br.value[j])));
    Tensor64 rh({H});
    for (int64_t i = 0; i < H; ++i) {
      const double ri = 1.0 / (1.0 + std::exp(-(matvec(gru.wr.value, e, I, H, i) +
                                                matvec(gru.ur.value, h, H, H, i) +
                                                gru.br.value[i])));
      rh[i] = ri * h[i];
    }
    const double htil = std::tanh(matvec(gru.wh.value, e, I, H, j) +
                                  matvec(gru.uh.value, rh, H, H, j) + gru.bh.value[j]);
    const double expected = (1.0 - zj) * h[j] + zj * htil;
    (void)rj;
    CHECK(t.val(out)[j] == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("gru_cell: non-finite input is a hard error") {
  Rng rng(3);
  GruParams<float> gru("g", 2, 2, rng);
  Tape<float> t;
  Tensor32 bad({2});
  bad[0] = std::nanf("");
  Var e = t.constant(bad);
  Var h = t.constant(Tensor32({2}));
  CHECK_THROWS_AS(gru_cell(t, e, h, gru), std::domain_error);
}

TEST_CASE("softmax: symmetry, analytic values, shift invariance") {
  Tape<float> t;
  Var u = softmax(t, t.constant(Tensor32({3}, {0.f, 0.f, 0.f})));
  for (int i = 0; i < 3; ++i) CHECK(t.val(u)[i] == doctest::Approx(1.0 / 3).epsilon(1e-6));

  const float l1 = std::log(1.f), l2 = std::log(2.f), l3 = std::log(3.f);
  Var v = softmax(t, t.constant(Tensor32({3}, {l1, l2, l3})));
  CHECK(t.val(v)[0] == doctest::Approx(1.0 / 6).epsilon(1e-6));
  CHECK(t.val(v)[1] == doctest::Approx(2.0 / 6).epsilon(1e-6));
  CHECK(t.val(v)[2] == doctest::Approx(3.0 / 6).epsilon(1e-6));

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor32 x = uniform_tensor<float>({4}, rng, -3.0, 3.0);
    Tensor32 xc = x;
    const float c = static_cast<float>(rng.uniform(-10.0, 10.0));
    for (int64_t i = 0; i < 4; ++i) xc[i] += c;
    Var a = softmax(t, t.constant(x));
    Var b = softmax(t, t.constant(xc));
    float sum = 0.f;
    for (int64_t i = 0; i < 4; ++i) {
      CHECK(t.val(a)[i] >= 0.f);
      CHECK(t.val(a)[i] == doctest::Approx(t.val(b)[i]).epsilon(1e-5));
      sum += t.val(a)[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("softmax: stable under extreme logits") {
  Tape<float> t;
  Var v = softmax(t, t.constant(Tensor32({3}, {1000.f, -1000.f, 999.f})));
  CHECK(t.val(v).all_finite());
  CHECK(t.val(v)[0] > t.val(v)[2]);
}

TEST_CASE("cross_entropy: analytic cases") {
  Tape<float> t;
  {
    std::vector<int> y = {1};
    Var p = t.constant(Tensor32({1, 3}, {0.f, 1.f, 0.f}));
    CHECK(t.val(cross_entropy(t, p, y))[0] == doctest::Approx(0.0).epsilon(1e-6));
  }
  {
    std::vector<int> y = {2};
    const float u = 1.f / 3.f;
    Var p = t.constant(Tensor32({1, 3}, {u, u, u}));
    CHECK(t.val(cross_entropy(t, p, y))[0] ==
          doctest::Approx(std::log(3.0)).epsilon(1e-6));
  }
}

TEST_CASE("cross_entropy: batch matches per-row scalar oracle") {
  Rng rng(11);
  Tape<double> t;
  const int64_t B = 5, K = 4;
  Tensor64 logits = uniform_tensor<double>({B, K}, rng, -2.0, 2.0);
  std::vector<int> labels;
  for (int64_t i = 0; i < B; ++i) labels.push_back(rng.randint(int(K)));
  Var probs = softmax(t, t.constant(logits));
  Var loss = cross_entropy(t, probs, labels);

  double acc = 0;
  for (int64_t r = 0; r < B; ++r)
    acc -= std::log(std::max(t.val(probs).at2(r, labels[size_t(r)]), 1e-12));
  CHECK(t.val(loss)[0] == doctest::Approx(acc / B).epsilon(1e-12));
}

TEST_CASE("cross_entropy: label out of range is a hard error") {
  Tape<float> t;
  std::vector<int> y = {3};
  Var p = t.constant(Tensor32({1, 3}, {0.2f, 0.3f, 0.5f}));
  CHECK_THROWS_AS(cross_entropy(t, p, y), std::invalid_argument);
}

TEST_CASE("matmul random instance vs naive triple loop") {
  Rng rng(13);
  Tensor64 A = uniform_tensor<double>({2, 3}, rng);
  Tensor64 B = uniform_tensor<double>({3, 2}, rng);
  Tape<double> t;
  Var c = matmul(t, t.constant(A), t.constant(B));
  for (int64_t i = 0; i < 2; ++i)
    for (int64_t j = 0; j < 2; ++j) {
      double acc = 0;
      for (int64_t k = 0; k < 3; ++k) acc += A.at2(i, k) * B.at2(k, j);
      CHECK(t.val(c).at2(i, j) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("every differentiable op passes central finite differences (64-bit)") {
  for (auto& c : ocean::testutil::op_fd_cases()) {
    INFO(c.name);
    auto report = c.run();
    INFO(report.summary());
    CHECK(report.passed());
  }
}
