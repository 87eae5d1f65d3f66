#include <cmath>

#include "doctest.h"
#include "promnet/convlstm.hpp"

using namespace promnet;

namespace {

ConvLstmCell<double> zero_cell(std::int64_t cin, std::int64_t cout, int k, int stride) {
  Rng rng(1);
  ConvLstmCell<double> cell({cin, cout, k, stride}, rng);
  for (int g = 0; g < 4; ++g) {
    cell.wx[g].zero();
    cell.wh[g].zero();
    cell.b[g].zero();
  }
  return cell;
}

}  // namespace

TEST_CASE("zero_state has the cell's output geometry") {
  Rng rng(2);
  ConvLstmCell<float> cell({3, 5, 5, 1}, rng);
  auto s = cell.zero_state(1, 8, 8);
  CHECK(s.h.shape == std::vector<std::int64_t>{1, 5, 8, 8});
  CHECK(s.c.shape == s.h.shape);
  for (std::int64_t i = 0; i < s.h.numel(); ++i) {
    CHECK(s.h[i] == 0.0f);
    CHECK(s.c[i] == 0.0f);
  }

  ConvLstmCell<float> strided({3, 4, 5, 2}, rng);
  auto s2 = strided.zero_state(1, 16, 16);
  CHECK(s2.h.shape == std::vector<std::int64_t>{1, 4, 8, 8});
}

TEST_CASE("zero cell with zero input stays at zero") {
  auto cell = zero_cell(2, 3, 3, 1);
  auto state = cell.zero_state(1, 6, 6);
  TensorD x({1, 2, 6, 6});
  auto next = cell.step(x, state, nullptr);
  // gates sit at sigmoid(0)=0.5 and tanh(0)=0, so c'=0 and h'=0
  for (std::int64_t i = 0; i < next.h.numel(); ++i) {
    CHECK(next.h[i] == doctest::Approx(0.0));
    CHECK(next.c[i] == doctest::Approx(0.0));
  }
}

TEST_CASE("a saturated forget gate preserves the cell state") {
  auto cell = zero_cell(2, 3, 3, 1);
  cell.b[ConvLstmCell<double>::kGateF].fill(20.0);  // f ~= 1
  ConvLstmState<double> state = cell.zero_state(1, 4, 4);
  Rng rng(3);
  fill_uniform(state.c, rng, -0.8, 0.8);
  TensorD x({1, 2, 4, 4});  // zero input, all other weights zero
  auto next = cell.step(x, state, nullptr);
  for (std::int64_t i = 0; i < next.c.numel(); ++i) {
    CHECK(next.c[i] == doctest::Approx(state.c[i]).epsilon(1e-6));
    CHECK(next.h[i] == doctest::Approx(0.5 * std::tanh(state.c[i])).epsilon(1e-6));
  }
}

TEST_CASE("gate ranges bound the hidden map") {
  Rng rng(5);
  ConvLstmCell<double> cell({2, 4, 5, 1}, rng);
  auto state = cell.zero_state(2, 8, 8);
  for (int t = 0; t < 4; ++t) {
    TensorD x({2, 2, 8, 8});
    fill_uniform(x, rng, -2.0, 2.0);
    ConvLstmStepCtx<double> ctx;
    state = cell.step(x, state, &ctx);
    for (std::int64_t i = 0; i < ctx.i.numel(); ++i) {
      CHECK(ctx.i[i] > 0.0);
      CHECK(ctx.i[i] < 1.0);
      CHECK(ctx.f[i] > 0.0);
      CHECK(ctx.f[i] < 1.0);
      CHECK(ctx.o[i] > 0.0);
      CHECK(ctx.o[i] < 1.0);
      CHECK(std::fabs(ctx.g[i]) < 1.0);
      CHECK(std::fabs(state.h[i]) < 1.0);
    }
  }
}

TEST_CASE("sequence of one step equals a single step") {
  Rng rng(7);
  ConvLstmCell<double> cell({1, 2, 3, 1}, rng);
  TensorD x({1, 1, 4, 4});
  fill_uniform(x, rng, -1.0, 1.0);
  auto init = cell.zero_state(1, 4, 4);
  auto via_seq = cell.sequence({x}, init, false);
  auto via_step = cell.step(x, init, nullptr);
  CHECK(via_seq.hs.size() == 1);
  CHECK(via_seq.hs[0].data == via_step.h.data);
  CHECK(via_seq.final_state.c.data == via_step.c.data);
}

TEST_CASE("zero cell maps any sequence to zero hidden maps") {
  auto cell = zero_cell(1, 2, 3, 1);
  Rng rng(9);
  std::vector<TensorD> xs;
  for (int t = 0; t < 3; ++t) {
    TensorD x({1, 1, 4, 4});
    fill_uniform(x, rng, -1.0, 1.0);
    xs.push_back(x);
  }
  auto res = cell.sequence(xs, cell.zero_state(1, 4, 4), false);
  for (const auto& h : res.hs)
    for (std::int64_t i = 0; i < h.numel(); ++i) CHECK(h[i] == doctest::Approx(0.0));
}

TEST_CASE("state threading: one T=4 run equals two T=2 runs, bit-identical") {
  Rng rng(11);
  ConvLstmCell<double> cell({2, 3, 5, 1}, rng);
  std::vector<TensorD> xs;
  for (int t = 0; t < 4; ++t) {
    TensorD x({1, 2, 6, 6});
    fill_uniform(x, rng, -1.0, 1.0);
    xs.push_back(x);
  }
  auto init = cell.zero_state(1, 6, 6);
  auto full = cell.sequence(xs, init, false);

  auto first = cell.sequence({xs[0], xs[1]}, init, false);
  auto second = cell.sequence({xs[2], xs[3]}, first.final_state, false);
  CHECK(full.hs[1].data == first.hs[1].data);
  CHECK(full.hs[3].data == second.hs[1].data);
  CHECK(full.final_state.h.data == second.final_state.h.data);
  CHECK(full.final_state.c.data == second.final_state.c.data);
}

TEST_CASE("geometry mismatches are rejected") {
  Rng rng(13);
  ConvLstmCell<double> cell({2, 3, 3, 1}, rng);
  TensorD x({1, 2, 4, 4});
  auto wrong = cell.zero_state(1, 6, 6);
  CHECK_THROWS_AS(cell.step(x, wrong, nullptr), std::invalid_argument);
  TensorD bad_channels({1, 5, 4, 4});
  CHECK_THROWS_AS(cell.step(bad_channels, cell.zero_state(1, 4, 4), nullptr),
                  std::invalid_argument);
}

TEST_CASE("peephole variant is recorded but rejected") {
  Rng rng(15);
  ConvLstmSpec spec{2, 3, 3, 1, true};
  CHECK_THROWS_AS(ConvLstmCell<double>(spec, rng), std::invalid_argument);
}

TEST_CASE("default-initialized cell: zero input from zero state stays zero") {
  // candidate bias is zero at init, so g = tanh(0) = 0 regardless of kernels
  Rng rng(17);
  ConvLstmCell<double> cell({2, 3, 5, 1}, rng);
  TensorD x({1, 2, 8, 8});
  auto next = cell.step(x, cell.zero_state(1, 8, 8), nullptr);
  for (std::int64_t i = 0; i < next.h.numel(); ++i) {
    CHECK(next.h[i] == doctest::Approx(0.0));
    CHECK(next.c[i] == doctest::Approx(0.0));
  }
}
