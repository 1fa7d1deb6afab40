#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ssk3/intmat.hpp"
#include "ssk3/zmod.hpp"

using namespace ssk3;

TEST_CASE("smith normal form on the spec examples") {
    auto m = IntMat::from_rows({{2, 0}, {0, 3}});
    auto s = smith_normal_form(m);
    REQUIRE(s.diag.size() == 2);
    CHECK(s.diag[0] == 1);
    CHECK(s.diag[1] == 6);

    auto id = smith_normal_form(IntMat::identity(3));
    for (auto& d : id.diag) CHECK(d == 1);

    auto a2 = smith_normal_form(IntMat::from_rows({{-2, 1}, {1, -2}}));
    CHECK(a2.diag[0] == 1);
    CHECK(a2.diag[1] == 3);
}

TEST_CASE("smith transforms multiply back") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> dist(-6, 6);
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t r = 1 + rng() % 4, c = 1 + rng() % 4;
        IntMat m(r, c);
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) m(i, j) = dist(rng);
        auto s = smith_normal_form(m);
        IntMat prod = s.left * m * s.right;
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
                CHECK(prod(i, j) == (i == j && i < s.diag.size() ? s.diag[i] : Int(0)));
        // divisor chain
        for (std::size_t i = 0; i + 1 < s.diag.size(); ++i)
            if (s.diag[i] != 0 && s.diag[i + 1] != 0) CHECK(s.diag[i + 1] % s.diag[i] == 0);
        // unimodular transforms
        Int dl = det(s.left), dr = det(s.right);
        CHECK((dl == 1 || dl == -1));
        CHECK((dr == 1 || dr == -1));
        if (r == c) {
            Int d = det(m), prodd = 1;
            for (auto& x : s.diag) prodd *= x;
            CHECK((d == prodd || d == -prodd));
        }
    }
}

TEST_CASE("hermite normal form") {
    auto h = hermite_normal_form(IntMat::from_rows({{2, 0}, {0, 2}, {1, 1}}));
    REQUIRE(h.rows() == 2);
    CHECK(h(0, 0) == 1);
    CHECK(h(0, 1) == 1);
    CHECK(h(1, 0) == 0);
    CHECK(h(1, 1) == 2);

    auto id = hermite_normal_form(IntMat::identity(4));
    CHECK(id == IntMat::identity(4));

    auto z = hermite_normal_form(IntMat::from_rows({{0, 0}}));
    CHECK(z.rows() == 0);

    // idempotence on random inputs
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> dist(-9, 9);
    for (int trial = 0; trial < 30; ++trial) {
        IntMat m(3, 4);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 4; ++j) m(i, j) = dist(rng);
        auto h1 = hermite_normal_form(m);
        CHECK(hermite_normal_form(h1) == h1);
    }
}

TEST_CASE("determinants") {
    CHECK(det(IntMat::from_rows({{-2}})) == -2);
    CHECK(det(IntMat::from_rows({{-2, 1}, {1, -2}})) == 3);
    CHECK_THROWS_AS(det(IntMat(2, 3)), std::invalid_argument);
}

TEST_CASE("rational inverse") {
    auto inv = inverse_rational(IntMat::from_rows({{-2}}));
    CHECK(inv(0, 0) == Rational(-1, 2));

    auto a2 = inverse_rational(IntMat::from_rows({{-2, 1}, {1, -2}}));
    CHECK(a2(0, 0) == Rational(-2, 3));
    CHECK(a2(0, 1) == Rational(-1, 3));
    CHECK(a2(1, 0) == Rational(-1, 3));
    CHECK(a2(1, 1) == Rational(-2, 3));

    CHECK(inverse_rational(IntMat::identity(3)) == RatMat(IntMat::identity(3)));
    CHECK_THROWS_AS(inverse_rational(IntMat(2, 2)), SingularMatrix);

    std::mt19937 rng(13);
    std::uniform_int_distribution<int> dist(-5, 5);
    for (int trial = 0; trial < 25; ++trial) {
        IntMat m(3, 3);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) m(i, j) = dist(rng);
        if (det(m) == 0) continue;
        RatMat prod = inverse_rational(m) * RatMat(m);
        CHECK(prod == RatMat(IntMat::identity(3)));
    }
}

TEST_CASE("solve_mod") {
    // x * 2 == 0 mod 4
    auto sol = solve_mod(IntMat::from_rows({{2}}), {Int(0)}, Int(4));
    REQUIRE(sol.has_value());
    CHECK(((*sol)[0] == 0 || (*sol)[0] == 2));

    // no solution: 2x == 1 mod 4
    CHECK_FALSE(solve_mod(IntMat::from_rows({{2}}), {Int(1)}, Int(4)).has_value());

    // empty generator set, target zero
    auto triv = solve_mod(IntMat(1, 0), {Int(0)}, Int(8));
    CHECK(triv.has_value());
}

TEST_CASE("howell form canonicality over Z/8") {
    // same subgroup from different generators gets the same howell matrix
    ZqMat a = {{2, 4}, {4, 0}};
    ZqMat b = {{6, 4}, {4, 0}, {2, 4}};
    CHECK(zq::howell(a, 8, 2) == zq::howell(b, 8, 2));

    // span order: (4,0) = 2*(2,4), so the span is cyclic of order 4
    auto h = zq::howell(a, 8, 2);
    CHECK(zq::span_order(h, 8) == 4);

    // membership
    CHECK(zq::member(h, {2, 4}, 8, 2));
    CHECK(zq::member(h, {6, 4}, 8, 2));
    CHECK_FALSE(zq::member(h, {1, 0}, 8, 2));
}

TEST_CASE("howell kernel over Z/9") {
    // kernel of x -> x * [[3],[3]] mod 9
    ZqMat B = {{3}, {3}};
    auto k = zq::kernel(B, 2, 9, 3);
    // kernel = {(a,b): 3a+3b == 0 mod 9} = {(a,b): a+b == 0 mod 3}, order 27
    CHECK(zq::span_order(k, 9) == 27);
    for (zint a = 0; a < 9; ++a)
        for (zint b = 0; b < 9; ++b) {
            bool in = (3 * a + 3 * b) % 9 == 0;
            CHECK(zq::member(k, {a, b}, 9, 3) == in);
        }
}
