#include <gtest/gtest.h>

#include <set>
#include <utility>

#include "dsrcnn/gradcheck.hpp"
#include "dsrcnn/ops.hpp"
#include "dsrcnn/rcl.hpp"

using namespace dsrcnn;

namespace {

Tensor random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(s);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

RclParams constant_rcl(std::size_t k, std::size_t steps, double ff, double rec) {
  RclParams p;
  p.feed_forward.kernel = Tensor(Shape{1, 1, k, k}, ff);
  p.feed_forward.bias = Tensor(Shape{1, 1, 1, 1});
  p.feed_forward.padding = {k / 2, k / 2};
  p.recurrent.kernel = Tensor(Shape{1, 1, k, k}, rec);
  p.recurrent.padding = {k / 2, k / 2};
  p.steps = steps;
  return p;
}

std::set<std::pair<std::size_t, std::size_t>> support(const Tensor& y) {
  std::set<std::pair<std::size_t, std::size_t>> s;
  for (std::size_t r = 0; r < y.shape().h; ++r)
    for (std::size_t c = 0; c < y.shape().w; ++c)
      if (y.at(0, 0, r, c) != 0.0) s.insert({r, c});
  return s;
}

Tensor impulse(std::size_t side) {
  Tensor u(Shape{1, 1, side, side});
  u.at(0, 0, side / 2, side / 2) = 1.0;
  return u;
}

}  // namespace

TEST(Rcl, ZeroStepsIsReluOfConv) {
  Rng rng(1);
  RclParams p = make_rcl(3, 4, 3, 0, rng);
  for (double& b : p.feed_forward.bias->data()) b = rng.uniform(-0.2, 0.2);
  const Tensor u = random_tensor(Shape{1, 3, 9, 11}, rng);
  EXPECT_EQ(rcl_forward(u, p).values(), relu(conv2d(u, p.feed_forward)).values());
}

TEST(Rcl, ScalarRecurrence) {
  RclParams p = constant_rcl(1, 2, 1.0, 0.5);
  const Tensor u(Shape{1, 1, 1, 1}, {1.0});
  for (auto [steps, expected] : {std::pair<std::size_t, double>{0, 1.0}, {1, 1.5}, {2, 1.75}}) {
    p.steps = steps;
    EXPECT_EQ(rcl_forward(u, p)[0], expected) << "T = " << steps;
  }
}

TEST(Rcl, ImpulseFootprintGrowsByKernelMinusOne) {
  for (std::size_t k : {1u, 3u}) {
    for (std::size_t steps = 0; steps <= 2; ++steps) {
      const auto s = support(rcl_forward(impulse(15), constant_rcl(k, steps, 1.0, 1.0)));
      const std::size_t side = k + steps * (k - 1);
      EXPECT_EQ(s.size(), side * side) << "k=" << k << " T=" << steps;
      const std::size_t lo = 7 - side / 2;
      for (std::size_t r = lo; r < lo + side; ++r)
        for (std::size_t c = lo; c < lo + side; ++c) EXPECT_TRUE(s.count({r, c}));
    }
  }
}

TEST(Rcl, FootprintIsMonotone) {
  std::set<std::pair<std::size_t, std::size_t>> previous;
  for (std::size_t steps = 0; steps <= 3; ++steps) {
    const auto s = support(rcl_forward(impulse(15), constant_rcl(3, steps, 1.0, 1.0)));
    for (const auto& site : previous) EXPECT_TRUE(s.count(site));
    previous = s;
  }
}

TEST(Rcl, UnfoldDepth) {
  Rng rng(2);
  for (std::size_t steps : {0u, 1u, 2u}) {
    const RclParams p = make_rcl(2, 3, 3, steps, rng);
    Graph g;
    const Var u = g.input(random_tensor(Shape{1, 2, 5, 5}, rng));
    const Var y = rcl_unfold(g, u, register_parameters(g, p, "l"), p);
    EXPECT_EQ(g.conv_depth(y), steps + 1);
    std::size_t convs = 0;
    for (std::size_t i = 0; i < g.size(); ++i) convs += g.kind(Var{i}) == OpKind::kConv2d;
    EXPECT_EQ(convs, steps + 1) << "feed-forward conv is computed once";
  }
}

TEST(Rcl, UnfoldMatchesEager) {
  Rng rng(3);
  const RclParams p = make_rcl(2, 3, 3, 2, rng);
  const Tensor u = random_tensor(Shape{1, 2, 6, 7}, rng);
  Graph g;
  const Var y = rcl_unfold(g, g.input(u), register_parameters(g, p, "l"), p);
  EXPECT_EQ(g.value(y).values(), rcl_forward(u, p).values());
}

TEST(Rcl, SharedWeightGradients) {
  Rng rng(4);
  RclParams p = make_rcl(2, 3, 3, 2, rng);
  for (double& b : p.feed_forward.bias->data()) b = rng.uniform(-0.1, 0.1);
  const Tensor u = random_tensor(Shape{1, 2, 6, 6}, rng);
  const GradCheckReport r = check_graph_gradients(
      {p.feed_forward.kernel, *p.feed_forward.bias, p.recurrent.kernel},
      [&](Graph& g, std::span<const Var> v) {
        return sum(g, sigmoid(g, rcl_unfold(g, g.input(u), RclVars{v[0], v[1], v[2]}, p)));
      },
      1e-5, 1e-4, "rcl");
  EXPECT_TRUE(r.ok()) << r.worst;
  EXPECT_EQ(r.checked, 54u + 3u + 81u);
}

TEST(Rcl, RejectsBadGeometry) {
  Rng rng(5);
  RclParams p = make_rcl(2, 3, 3, 2, rng);
  p.recurrent.kernel = Tensor(Shape{3, 2, 3, 3});
  EXPECT_THROW(validate(p), ShapeError);
  RclParams q = make_rcl(2, 3, 3, 2, rng);
  q.recurrent.bias = Tensor(Shape{1, 3, 1, 1});
  EXPECT_THROW(validate(q), ShapeError);
  const RclParams good = make_rcl(2, 3, 3, 1, rng);
  EXPECT_THROW(rcl_forward(Tensor(Shape{1, 4, 5, 5}), good), ShapeError);
}
