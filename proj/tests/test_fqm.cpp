#include <catch2/catch_amalgamated.hpp>

#include "ssk3/ade.hpp"
#include "ssk3/fqm.hpp"
#include "ssk3/glue.hpp"

using namespace ssk3;

TEST_CASE("discriminant forms of the basic lattices") {
    // I(n): cyclic of order n with q = 1/n
    for (long n : {2L, 4L, 6L, 76L}) {
        Fqm g = Fqm::from_gram(IntMat::from_rows({{n}}));
        CHECK(g.order() == n);
        Fqm::Elem e(g.gen_count(), 0);
        // q on a generator of the full cyclic group: find an element of order n
        // via the divisor chain (single chain slot of size n)
        auto chain = g.divisor_chain();
        REQUIRE(chain.back() == n);
    }
    {
        Fqm g = Fqm::from_gram(IntMat::from_rows({{2}}));
        CHECK(g.q_value({1}) == Rat(1, 2));
    }
    {
        Fqm g = Fqm::from_gram(gram_of_indecomposable({'A', 1}).gram);
        CHECK(g.order() == 2);
        CHECK(g.q_value({1}) == Rat(3, 2));  // -1/2 in [0,2)
    }
    {
        Fqm g = Fqm::from_gram(gram_of_indecomposable({'E', 8}).gram);
        CHECK(g.order() == 1);
        CHECK(g.gen_count() == 0);
    }
}

TEST_CASE("direct sums") {
    Fqm a = Fqm::from_gram(gram_of_indecomposable({'A', 1}).gram);
    Fqm i2 = Fqm::from_gram(IntMat::from_rows({{2}}));
    Fqm s = Fqm::direct_sum(a, i2);
    CHECK(s.order() == 4);
    CHECK(s.gen_count() == 2);
    // q values 3/2 and 1/2 in some order
    Rat q0 = s.q_value({1, 0}), q1 = s.q_value({0, 1});
    CHECK(((q0 == Rat(3, 2) && q1 == Rat(1, 2)) || (q0 == Rat(1, 2) && q1 == Rat(3, 2))));
    CHECK(s.b_value({1, 0}, {0, 1}) == Rat(0));

    Fqm triv = Fqm::from_gram(gram_of_indecomposable({'E', 8}).gram);
    Fqm t = Fqm::direct_sum(triv, a);
    CHECK(t.order() == 2);
}

TEST_CASE("glued form of 21A1 + I(2)") {
    GlueGroup glue(AdeType::parse("21A1"), 2);
    const Fqm& g = glue.fqm();
    CHECK(g.order() == 1L << 22);
    CHECK(g.gen_count() == 22);
    // all-ones element is isotropic: q = (-21 + 1)/2 = -10 = 0 mod 2
    Fqm::Elem ones(22, 1);
    CHECK(g.q_value(ones) == Rat(0));
    // b(g,g) = q(g) mod Z on this 2-elementary group
    for (std::size_t i = 0; i < 22; ++i) {
        Fqm::Elem e(22, 0);
        e[i] = 1;
        CHECK(g.b_value(e, e) == bmod1(g.q_value(e)));
    }
}

TEST_CASE("prime parts") {
    // 3-part of G_{A5} (cyclic 6): q = 2/3 on the order-3 element
    Fqm a5 = Fqm::from_gram(gram_of_indecomposable({'A', 5}).gram);
    CHECK(a5.order() == 6);
    Fqm p3 = a5.prime_part(3);
    CHECK(p3.order() == 3);
    // the part keeps generator layout: find its generator and check q
    REQUIRE(p3.parts().size() == 1);
    REQUIRE(p3.parts()[0].orders == std::vector<long>{3});
    CHECK(p3.parts()[0].qval[0] == Rat(2, 3));

    // 3-part of I(6): q(2 eps) = 4/6 = 2/3
    Fqm i6 = Fqm::from_gram(IntMat::from_rows({{6}}));
    Fqm i63 = i6.prime_part(3);
    REQUIRE(i63.parts().size() == 1);
    CHECK(i63.parts()[0].orders == std::vector<long>{3});
    CHECK(i63.parts()[0].qval[0] == Rat(2, 3));

    // trivial part for a prime not dividing the order
    CHECK(a5.prime_part(7).order() == 1);

    // parts reassemble: orders and q values match componentwise
    long prod = 1;
    for (long p : {2L, 3L}) prod *= a5.prime_part(p).order();
    CHECK(prod == a5.order());
}

TEST_CASE("orthogonal complements and the involution") {
    GlueGroup glue(AdeType::parse("2A1"), 2);
    const Fqm& g = glue.fqm();
    FqmSubgroup zero = FqmSubgroup::span(g, {});
    FqmSubgroup all = zero.orthogonal_complement(g);
    CHECK(all.order(g) == 8);

    FqmSubgroup s = FqmSubgroup::span(g, {Fqm::Elem{1, 1, 0}});
    FqmSubgroup sp = s.orthogonal_complement(g);
    CHECK(s.order(g) * sp.order(g) == 8);
    CHECK(sp.orthogonal_complement(g) == s);
}

TEST_CASE("overlattice construction and the index law") {
    // S = 0 gives the lattice back
    GlueGroup glue(AdeType::parse("A1"), 2);
    const Fqm& g = glue.fqm();
    FqmSubgroup zero = FqmSubgroup::span(g, {});
    Overlattice lam = overlattice(g.gram(), g, zero);
    CHECK(lam.gram == g.gram());

    // diagonal glue in G_{A1} + G_2 gives the even unimodular rank-2 lattice
    FqmSubgroup diag = FqmSubgroup::span(g, {Fqm::Elem{1, 1}});
    CHECK(diag.is_isotropic(g));
    Overlattice u = overlattice(g.gram(), g, diag);
    CHECK(det(u.gram) == -1);
    CHECK(is_p_elementary(u.gram, 2));
    CHECK(is_type_I(u.gram));

    // a non-isotropic subgroup is rejected
    FqmSubgroup bad = FqmSubgroup::span(g, {Fqm::Elem{1, 0}});
    CHECK_FALSE(bad.is_isotropic(g));
    CHECK_THROWS_AS(overlattice(g.gram(), g, bad), std::invalid_argument);
}

TEST_CASE("type I tests") {
    auto a1 = gram_of_indecomposable({'A', 1}).gram;
    CHECK(is_p_elementary(a1, 2));
    CHECK_FALSE(is_type_I(a1));
    auto e8 = gram_of_indecomposable({'E', 8}).gram;
    CHECK(is_p_elementary(e8, 2));
    CHECK(is_p_elementary(e8, 3));
    CHECK(is_type_I(e8));
    CHECK_THROWS_AS(is_type_I(gram_of_indecomposable({'A', 2}).gram), std::invalid_argument);
}

TEST_CASE("quotient structure") {
    // L = Z^2, M = 2Z + 3Z: quotient Z/6
    auto qs = quotient_structure(IntMat::from_rows({{2, 0}, {0, 3}}), 2);
    REQUIRE(qs.torsion.size() == 1);
    CHECK(qs.torsion[0] == 6);
    CHECK(qs.free_rank == 0);

    auto triv = quotient_structure(IntMat::identity(3), 3);
    CHECK(triv.torsion.empty());
    CHECK(triv.free_rank == 0);

    auto defect = quotient_structure(IntMat::from_rows({{2, 0}}), 2);
    CHECK(defect.free_rank == 1);
    REQUIRE(defect.torsion.size() == 1);
    CHECK(defect.torsion[0] == 2);
}

// Nikulin laws, exhaustively over all isotropic subgroups of small forms
TEST_CASE("nikulin index and quotient laws on small corpora") {
    std::vector<std::pair<const char*, long>> corpus = {
        {"A1", 2}, {"2A1", 2}, {"A2", 6}, {"A3", 4}, {"A1+A2", 2}, {"3A1", 2}, {"D4", 2},
    };
    for (auto [rstr, n] : corpus) {
        GlueGroup glue(AdeType::parse(rstr), n);
        const Fqm& g = glue.fqm();
        long order = g.order();
        REQUIRE(order <= 64);
        // enumerate all subgroups as spans of element subsets (order <= 64)
        FqmSubgroup full = FqmSubgroup::span(g, {}).orthogonal_complement(g);
        std::vector<Fqm::Elem> elems;
        {
            // all elements of G
            FqmSubgroup zero = FqmSubgroup::span(g, {});
            (void)zero;
            std::vector<long> radices;
            for (const auto& part : g.parts())
                for (long o : part.orders) radices.push_back(o);
            Fqm::Elem e(radices.size(), 0);
            while (true) {
                elems.push_back(e);
                std::size_t i = 0;
                while (i < radices.size() && ++e[i] == radices[i]) e[i++] = 0;
                if (i == radices.size()) break;
            }
        }
        std::set<std::vector<ZqMat>> seen;
        std::vector<FqmSubgroup> subs;
        // spans of up to two elements cover all subgroups of these small groups
        for (std::size_t i = 0; i < elems.size(); ++i)
            for (std::size_t j = i; j < elems.size(); ++j) {
                FqmSubgroup s = FqmSubgroup::span(g, {elems[i], elems[j]});
                if (seen.insert(s.blocks()).second) subs.push_back(s);
            }
        Int disc_q = det(g.gram());
        for (const auto& s : subs) {
            if (!s.is_isotropic(g)) continue;
            Overlattice lam = overlattice(g.gram(), g, s);
            long os = s.order(g);
            // index law: disc(Lambda_S) * |S|^2 = disc(Q)
            CHECK(det(lam.gram) * os * os == disc_q);
            // discriminant group of the overlattice is S-perp/S
            Fqm gl = Fqm::from_gram(lam.gram);
            FqmSubgroup sp = s.orthogonal_complement(g);
            CHECK(gl.order() == sp.order(g) / os);
            // invariant factors match
            auto chain = gl.divisor_chain();
            // quotient invariant factors via elements: compare orders only
            long quot = sp.order(g) / os;
            long prod = 1;
            for (long d : chain) prod *= d;
            CHECK(prod == quot);
        }
    }
}
