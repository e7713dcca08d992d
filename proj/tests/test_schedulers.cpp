#include <doctest.h>

#include <cmath>
#include <random>

#include "dcl/errors.hpp"
#include "dcl/schedulers.hpp"

using namespace dcl;

namespace {

// mpmath, 30 significant digits.
constexpr double kPow099_100 = 0.366032341273229504930616;
constexpr double kCosPi6 = 0.866025403784438646763723;
constexpr double kHalfCos02PiPlusHalf = 0.904508497187473712051147;

SchedulerFn random_scheduler(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kind(0, 4);
  std::uniform_int_distribution<int> epochs(1, 500);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int L = epochs(rng);
  switch (kind(rng)) {
    case 0: return SchedulerFn::convex(L);
    case 1: return SchedulerFn::linear(L);
    case 2: return SchedulerFn::concave(L, 0.5 + 0.4999 * unit(rng));
    case 3: return SchedulerFn::composite(L);
    default: return SchedulerFn::constant(L, unit(rng));
  }
}

}  // namespace

TEST_CASE("eval_scheduler: closed-form examples") {
  CHECK(eval_scheduler(SchedulerFn::convex(300), 0) == 1.0);
  CHECK(eval_scheduler(SchedulerFn::convex(300), 100) == doctest::Approx(kCosPi6).epsilon(1e-15));
  CHECK(eval_scheduler(SchedulerFn::linear(300), 150) == 0.5);
  CHECK(eval_scheduler(SchedulerFn::composite(300), 300) == 0.0);
  CHECK(eval_scheduler(SchedulerFn::concave(300, 0.99), 100) ==
        doctest::Approx(kPow099_100).epsilon(1e-14));
  CHECK(eval_scheduler(SchedulerFn::constant(300, 0.25), 17) == 0.25);
}

TEST_CASE("eval_scheduler: endpoints") {
  for (int L : {1, 2, 7, 60, 300}) {
    CHECK(eval_scheduler(SchedulerFn::convex(L), L) == 0.0);
    CHECK(eval_scheduler(SchedulerFn::linear(L), L) == 0.0);
    CHECK(eval_scheduler(SchedulerFn::composite(L), 0) == 1.0);
    CHECK(eval_scheduler(SchedulerFn::linear(L), 0) == 1.0);
    CHECK(eval_scheduler(SchedulerFn::concave(L, 0.9), 0) == 1.0);
    // Concave does not reach zero.
    CHECK(eval_scheduler(SchedulerFn::concave(L, 0.9), L) > 0.0);
  }
}

TEST_CASE("eval_scheduler: monotone and inside [0,1] for random configs") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = random_scheduler(rng);
    double prev = eval_scheduler(s, 0);
    CHECK(prev <= 1.0);
    for (int l = 1; l <= s.total_epochs; ++l) {
      const double v = eval_scheduler(s, l);
      REQUIRE(v <= prev);
      REQUIRE(v >= 0.0);
      prev = v;
    }
  }
}

TEST_CASE("eval_scheduler: errors") {
  CHECK_THROWS_AS(eval_scheduler(SchedulerFn::convex(10), 11), OutOfRangeError);
  CHECK_THROWS_AS(eval_scheduler(SchedulerFn::convex(10), -1), OutOfRangeError);
  CHECK_THROWS_AS(eval_scheduler(SchedulerFn::concave(10, 1.0), 1), ConfigError);
  CHECK_THROWS_AS(eval_scheduler(SchedulerFn::concave(10, 0.0), 1), ConfigError);
  CHECK_THROWS_AS(SchedulerFn::constant(10, 1.5).validate(), ConfigError);
  CHECK_THROWS_AS(SchedulerFn::linear(0).validate(), ConfigError);
}

TEST_CASE("eval_loss_weight: examples") {
  const LossScheduler ls{SchedulerFn::composite(300), 0.3, 0.01};
  CHECK(eval_loss_weight(ls, 0) == doctest::Approx(1.01).epsilon(1e-15));
  CHECK(eval_loss_weight(ls, 200) == 0.01);
  CHECK(eval_loss_weight(ls, 60) == doctest::Approx(kHalfCos02PiPlusHalf + 0.01).epsilon(1e-14));
  CHECK(eval_loss_weight(ls, 89) > 0.01);
  CHECK(eval_loss_weight(ls, 90) == 0.01);
}

TEST_CASE("eval_loss_weight: piecewise definition holds exactly") {
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    LossScheduler ls{random_scheduler(rng), unit(rng), 0.1 * unit(rng)};
    const int L = ls.base.total_epochs;
    double prev = eval_loss_weight(ls, 0) + 1.0;
    for (int l = 0; l <= L; ++l) {
      const double v = eval_loss_weight(ls, l);
      if (l >= ls.self_learn_point * L) {
        REQUIRE(v == ls.self_learn_ratio);
      } else {
        REQUIRE(v == eval_scheduler(ls.base, l) + ls.self_learn_ratio);
      }
      REQUIRE(v <= prev);
      prev = v;
    }
  }
}

TEST_CASE("eval_loss_weight: fixed weight and validation") {
  const auto fixed = LossScheduler::fixed(50, 0.7);
  for (int l = 0; l <= 50; ++l) CHECK(eval_loss_weight(fixed, l) == 0.7);
  CHECK(eval_loss_weight(LossScheduler::fixed(5, 0.0), 3) == 0.0);
  CHECK_THROWS_AS(eval_loss_weight(LossScheduler{SchedulerFn::composite(10), 1.5, 0.01}, 0), ConfigError);
  CHECK_THROWS_AS(eval_loss_weight(LossScheduler{SchedulerFn::composite(10), 0.3, -0.1}, 0), ConfigError);
  CHECK_THROWS_AS(eval_loss_weight(LossScheduler{SchedulerFn::composite(10), 0.3, 0.01}, 11),
                  OutOfRangeError);
}

TEST_CASE("parse_scheduler and format_scheduler round trip") {
  CHECK(parse_scheduler("convex", 60).kind == SchedulerKind::Convex);
  CHECK(parse_scheduler("linear", 60).total_epochs == 60);
  const auto c = parse_scheduler("concave:0.95", 60);
  CHECK(c.kind == SchedulerKind::Concave);
  CHECK(c.lambda == 0.95);
  CHECK(parse_scheduler("constant:0", 60).constant_value == 0.0);
  for (const char* text : {"convex", "linear", "composite", "concave:0.99", "constant:1", "constant:0.3"}) {
    const auto s = parse_scheduler(text, 10);
    const auto back = parse_scheduler(format_scheduler(s), 10);
    CHECK(back.kind == s.kind);
    CHECK(back.lambda == s.lambda);
    CHECK(back.constant_value == s.constant_value);
  }
  CHECK_THROWS_AS(parse_scheduler("cubic", 10), ConfigError);
  CHECK_THROWS_AS(parse_scheduler("constant", 10), ConfigError);
  CHECK_THROWS_AS(parse_scheduler("convex:2", 10), ConfigError);
  CHECK_THROWS_AS(parse_scheduler("concave:abc", 10), ConfigError);
}
