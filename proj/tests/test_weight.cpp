#include <catch2/catch_amalgamated.hpp>

#include "flab/weight.hpp"

using namespace flab;

TEST_CASE("quadratic weight basics", "[weight]") {
    WeightFunction w = quadratic_weight(1);
    CHECK(w.dim == 1);
    CHECK(w.eval(vec1(0.0)) == 1.0);
    CHECK(w.eval(vec1(2.0)) == 5.0);
    CHECK(w.inf_rho == 1.0);
    CHECK(w.coercive);
    CHECK_FALSE(w.log_eval);  // plain weights go through eval directly
    CHECK(w.log_rho(vec1(2.0)) == Catch::Approx(std::log(5.0)).epsilon(1e-15));

    Box b = w.box_for(10.0);
    CHECK(b.lo[0] == Catch::Approx(-3.0).margin(1e-15));
    CHECK(b.hi[0] == Catch::Approx(3.0).margin(1e-15));
    CHECK(b.contains(vec1(2.9)));
    CHECK_FALSE(b.contains(vec1(3.1)));
    // the box really covers the sublevel set boundary
    CHECK(w.eval(b.hi) == Catch::Approx(10.0).margin(1e-12));
}

TEST_CASE("quadratic weight in two dimensions", "[weight]") {
    WeightFunction w = quadratic_weight(2);
    CHECK(w.eval(vec2(1.0, 2.0)) == 6.0);
    Box b = w.box_for(5.0);
    CHECK(b.hi[0] == Catch::Approx(2.0));
    CHECK(b.hi[1] == Catch::Approx(2.0));
}

TEST_CASE("exponential-quadratic weight exposes a log view", "[weight]") {
    WeightFunction w = exp_quadratic_weight(1);
    REQUIRE(w.log_eval);
    CHECK(w.log_eval(vec1(3.0)) == 9.0);
    CHECK(w.log_rho(vec1(30.0)) == 900.0);  // eval would overflow at x = 27
    CHECK(std::isinf(w.eval(vec1(30.0))));
    Box b = w.box_for(std::exp(4.0));
    CHECK(b.hi[0] == Catch::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("constant weight is not coercive", "[weight]") {
    WeightFunction w = constant_weight(1, 2.0);
    CHECK(w.eval(vec1(123.0)) == 2.0);
    CHECK(w.inf_rho == 2.0);
    CHECK_FALSE(w.coercive);
    CHECK_THROWS_AS(constant_weight(1, 0.0), InvalidParameter);
    CHECK_THROWS_AS(constant_weight(1, -1.0), InvalidParameter);
}

TEST_CASE("product weight multiplies factors and stacks boxes", "[weight]") {
    WeightFunction w = product_weight({quadratic_weight(1), quadratic_weight(1)});
    CHECK(w.dim == 2);
    CHECK(w.eval(vec2(1.0, 2.0)) == 2.0 * 5.0);
    CHECK(w.coercive);
    CHECK_FALSE(w.non_coercive_product_warning);
    Box b = w.box_for(10.0);
    CHECK(b.lo.size() == 2);
    CHECK(b.hi[0] == Catch::Approx(3.0));
    CHECK(b.hi[1] == Catch::Approx(3.0));
}

TEST_CASE("product with a factor below 1 only warns", "[weight]") {
    // rho_1 >= 1 coercive, rho_2 = 1/2: the product is a valid weight but its
    // sublevel sets are no longer bounded, so coercivity must be dropped
    WeightFunction w = product_weight({quadratic_weight(1), constant_weight(1, 0.5)});
    CHECK(w.non_coercive_product_warning);
    CHECK_FALSE(w.coercive);
    CHECK(w.inf_rho == 0.5);
    CHECK(w.eval(vec2(2.0, 7.0)) == 2.5);
}

TEST_CASE("product weight propagates log evaluation", "[weight]") {
    WeightFunction w = product_weight({exp_quadratic_weight(1), exp_quadratic_weight(1)});
    REQUIRE(w.log_eval);
    CHECK(w.log_eval(vec2(3.0, 4.0)) == 25.0);
    // mixing in a factor without log_eval drops the log view
    WeightFunction m = product_weight({exp_quadratic_weight(1), quadratic_weight(1)});
    CHECK_FALSE(m.log_eval);
    CHECK(m.eval(vec2(1.0, 2.0)) == Catch::Approx(std::exp(1.0) * 5.0).epsilon(1e-14));
}

TEST_CASE("empty product is rejected", "[weight]") {
    CHECK_THROWS_AS(product_weight({}), InvalidParameter);
}
