#include <catch2/catch_amalgamated.hpp>

#include "ssk3/ade.hpp"
#include "ssk3/glue.hpp"
#include "ssk3/shortvec.hpp"

using namespace ssk3;

TEST_CASE("ADE string grammar round trip") {
    auto r = AdeType::parse("E8+2D4+3A1");
    CHECK(r.rank() == 8 + 8 + 3);
    CHECK(r.str() == "E8+2D4+3A1");
    CHECK(AdeType::parse("21A1").str() == "21A1");
    CHECK(AdeType::parse("A18+A3").rank() == 21);
    CHECK(AdeType::parse("D5 + A15").str() == "D5+A15");
    CHECK_THROWS_AS(AdeType::parse("D3"), std::invalid_argument);
    CHECK_THROWS_AS(AdeType::parse("E9"), std::invalid_argument);
    CHECK_THROWS_AS(AdeType::parse("B2"), std::invalid_argument);
}

TEST_CASE("gram matrices of indecomposables") {
    auto a1 = gram_of_indecomposable({'A', 1}).gram;
    CHECK(a1 == IntMat::from_rows({{-2}}));
    auto a2 = gram_of_indecomposable({'A', 2}).gram;
    CHECK(a2 == IntMat::from_rows({{-2, 1}, {1, -2}}));
    auto e8 = gram_of_indecomposable({'E', 8}).gram;
    CHECK(det(e8) == 1);
    CHECK(e8.is_symmetric());
    auto d4 = gram_of_indecomposable({'D', 4}).gram;
    CHECK(det(d4) == 4);
    CHECK_THROWS_AS(gram_of_indecomposable({'D', 3}), std::invalid_argument);

    // |disc Q(X)| matches the |G_X| column for every symbol used anywhere
    for (int l = 1; l <= 21; ++l) {
        Int d = det(gram_of_indecomposable({'A', l}).gram);
        CHECK((d < 0 ? -d : d) == l + 1);
    }
    for (int m = 4; m <= 21; ++m) {
        Int d = det(gram_of_indecomposable({'D', m}).gram);
        CHECK((d < 0 ? -d : d) == 4);
    }
    CHECK(det(gram_of_indecomposable({'E', 6}).gram) == 3);
    Int d7 = det(gram_of_indecomposable({'E', 7}).gram);
    CHECK((d7 < 0 ? -d7 : d7) == 2);
}

TEST_CASE("gram of a type with polarization") {
    auto g = gram_of(AdeType::parse("A1"), 2).gram;
    CHECK(g == IntMat::from_rows({{-2, 0}, {0, 2}}));

    auto g2 = gram_of(AdeType::parse("21A1"), 2).gram;
    REQUIRE(g2.rows() == 22);
    for (int i = 0; i < 21; ++i) CHECK(g2(i, i) == -2);
    CHECK(g2(21, 21) == 2);

    auto g3 = gram_of(AdeType::parse("A18+A3"), 76).gram;
    REQUIRE(g3.rows() == 22);
    Int d = det(g3);
    CHECK((d < 0 ? -d : d) == Int(19) * 4 * 76);

    CHECK_THROWS_AS(gram_of(AdeType::parse("A1"), 3), std::invalid_argument);
}

TEST_CASE("short vector enumeration") {
    auto a1 = enumerate_short_vectors(gram_of_indecomposable({'A', 1}).gram, Rational(-2));
    CHECK(a1.size() == 3);  // 0, +a, -a

    auto a2 = enumerate_short_vectors(gram_of_indecomposable({'A', 2}).gram, Rational(-2));
    CHECK(a2.size() == 7);  // 0 and 6 roots

    auto d4 = enumerate_short_vectors(gram_of_indecomposable({'D', 4}).gram, Rational(-2));
    CHECK(d4.size() == 25);  // 0 and 24 roots

    CHECK_THROWS_AS(enumerate_short_vectors(gram_of(AdeType::parse("A1"), 2).gram, Rational(-2)),
                    std::invalid_argument);
}

TEST_CASE("root counts") {
    CHECK(root_count(Symbol{'A', 1}) == 2);
    CHECK(root_count(Symbol{'E', 8}) == 240);
    CHECK(root_count(AdeType::parse("21A1")) == 42);
    CHECK(root_count(Symbol{'A', 21}) == 21 * 22);
    CHECK(root_count(Symbol{'D', 8}) == 2 * 8 * 7);
    CHECK(root_count(Symbol{'E', 7}) == 126);
    CHECK(root_count(Symbol{'E', 6}) == 72);
}

TEST_CASE("coset vector tables") {
    const auto& a1 = coset_vector_table({'A', 1});
    REQUIRE(a1.divisors == std::vector<long>{2});
    // coset 0: norms {0 (x1), -2 (x2)}; coset 1: {-1/2 (x2)}
    REQUIRE(a1.cosets.size() == 2);
    bool zero_ok = false, half_ok = false;
    for (const auto& e : a1.cosets[0]) {
        if (e.norm == Rat(0)) CHECK(e.count == 1);
        if (e.norm == Rat(-2)) { CHECK(e.count == 2); zero_ok = true; }
    }
    for (const auto& e : a1.cosets[1])
        if (e.norm == Rat(-1, 2)) { CHECK(e.count == 2); half_ok = true; }
    CHECK(zero_ok);
    CHECK(half_ok);

    const auto& e8 = coset_vector_table({'E', 8});
    CHECK(e8.disc_order == 1);
    REQUIRE(e8.cosets.size() == 1);
    for (const auto& e : e8.cosets[0])
        if (e.norm == Rat(-2)) CHECK(e.count == 240);

    const auto& a2 = coset_vector_table({'A', 2});
    REQUIRE(a2.cosets.size() == 3);
    for (std::size_t k = 1; k < 3; ++k) {
        REQUIRE(a2.cosets[k].size() == 1);
        CHECK(a2.cosets[k][0].norm == Rat(-2, 3));
        CHECK(a2.cosets[k][0].count == 3);
    }
}

TEST_CASE("rho of glue") {
    // R = A1, S0 = {0}: just the two roots
    {
        GlueGroup g(AdeType::parse("A1"), 0);
        CHECK(g.rho({Fqm::Elem{0}}) == 2);
    }
    // R = 2A1, S0 = {0, (1,1)}: the (1,1) coset has norm -1 vectors only,
    // so only the four plain roots count
    {
        CHECK(rho_of_glue(AdeType::parse("2A1"), {{0, 0}, {1, 1}}) == 4);
        CHECK(rho_of_glue(AdeType::parse("2A1"), {{0, 0}}) == root_count(AdeType::parse("2A1")));
    }
    // R = 4A1 glued diagonally: 2*4 + 16 = 24 roots (this is Q(D4))
    {
        CHECK(rho_of_glue(AdeType::parse("4A1"), {{0, 0, 0, 0}, {1, 1, 1, 1}}) == 24);
    }
    // closure violation rejected
    CHECK_THROWS_AS(rho_of_glue(AdeType::parse("2A1"), {{1, 0}, {0, 1}}), std::invalid_argument);
}

TEST_CASE("rho agrees with direct enumeration on small overlattices") {
    // Q(4A1) with the diagonal glue is Q(D4): check against the oracle
    GlueGroup g(AdeType::parse("4A1"), 0);
    FqmSubgroup s = FqmSubgroup::span(g.fqm(), {Fqm::Elem{1, 1, 1, 1}});
    Overlattice lam = overlattice(g.fqm().gram(), g.fqm(), s);
    Int d = det(lam.gram);
    CHECK((d < 0 ? -d : d) == 4);
    CHECK(root_count_of_gram(lam.gram) == 24);
}
