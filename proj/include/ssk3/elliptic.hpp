#pragma once

// Extremal genus-one fibrations: for a rank-20 type R, enumerate the
// isotropic subgroups of the discriminant form of Q(R + A_1) (+) I(2) under
// the symmetry induced by Aut(Q(R)) alone (the added A_1 and the I(2)
// factor stay fixed), keep those passing the four overlattice conditions
// whose glue contains the class of f = (h - z)/2, and read off the
// Mordell-Weil group as U-perp / (root span) inside the overlattice.
//
// h = e (the I(2) generator), z = -a (the added A_1 root); f = (e + a)/2.
// U = <f, z> is unimodular of rank 2, its orthogonal complement has rank 20
// with root span exactly the embedded Q(R), so MW is the quotient of the
// two coordinate lattices.

#include <optional>
#include <set>

#include "ssk3/rdp.hpp"

namespace ssk3 {

struct EllipticRow {
    AdeType R;  // rank 20
    long p = 2;
    int sigma = 1;
    std::vector<long> mw;  // invariant factors, ascending; empty = trivial
    bool quasi = false;

    std::string mw_str() const {
        if (mw.empty()) return "0";
        std::string s = "[";
        for (std::size_t i = 0; i < mw.size(); ++i)
            s += (i ? "," : "") + std::to_string(mw[i]);
        return s + "]";
    }
    friend bool operator<(const EllipticRow& a, const EllipticRow& b) {
        if (a.p != b.p) return a.p > b.p;
        if (!(a.R == b.R)) return a.R < b.R;
        if (a.sigma != b.sigma) return a.sigma < b.sigma;
        return a.mw < b.mw;
    }
    friend bool operator==(const EllipticRow& a, const EllipticRow& b) {
        return a.p == b.p && a.R == b.R && a.sigma == b.sigma && a.mw == b.mw &&
               a.quasi == b.quasi;
    }
};

// quasi-ellipticity: extremal (rank 20 by construction) with Q(R) p-elementary
inline bool quasi_elliptic_test(const AdeType& r, long p) {
    if (p != 2 && p != 3) throw std::invalid_argument("quasi-elliptic only in characteristic 2 or 3");
    if (r.rank() != 20) throw std::invalid_argument("extremal fiber types have rank 20");
    return is_p_elementary(gram_of(r).gram, p);
}

// Kodaira fiber type of one component.  Elliptic fibers: A_1 and A_2 are
// ambiguous (I_2 or III, I_3 or IV); quasi-elliptic fibers are one-to-one
// and only defined for the components that occur in that characteristic.
inline std::vector<std::string> kodaira_annotate(const Symbol& s, long p, bool quasi) {
    auto roman = [](int n) { return std::string("I") + std::to_string(n); };
    if (!quasi) {
        if (s == Symbol{'A', 1}) return {"I2", "III"};
        if (s == Symbol{'A', 2}) return {"I3", "IV"};
        if (s.kind == 'A') return {roman(s.index + 1)};
        if (s.kind == 'D') return {"I*" + std::to_string(s.index - 4)};
        if (s.index == 6) return {"IV*"};
        if (s.index == 7) return {"III*"};
        return {"II*"};
    }
    if (p == 2) {
        if (s == Symbol{'A', 1}) return {"III"};
        if (s.kind == 'D' && s.index % 2 == 0) return {"I*" + std::to_string(s.index - 4)};
        if (s == Symbol{'E', 7}) return {"III*"};
        if (s == Symbol{'E', 8}) return {"II*"};
    } else if (p == 3) {
        if (s == Symbol{'A', 2}) return {"IV"};
        if (s == Symbol{'E', 6}) return {"IV*"};
        if (s == Symbol{'E', 8}) return {"II*"};
    }
    throw std::invalid_argument("component " + s.str() + " has no quasi-elliptic fiber in characteristic " +
                                std::to_string(p));
}

// 2(sigma + r) against the quasi-elliptic fiber counts
inline bool torsion_rank_check(const EllipticRow& row) {
    if (!row.quasi) throw std::invalid_argument("torsion rank check applies to quasi-elliptic rows");
    long r = (long)row.mw.size();
    for (long d : row.mw)
        if (d != row.p) return false;  // MW must be p-elementary
    long rhs = 0;
    for (auto& [s, c] : row.R.parts()) {
        if (row.p == 2) {
            if (s == Symbol{'A', 1}) rhs += c;            // nu(III)
            else if (s.kind == 'D') rhs += 2 * c;         // 2 sum nu(I*_2m)
            else if (s == Symbol{'E', 7}) rhs += c;       // nu(III*)
        } else {
            if (s == Symbol{'A', 2}) rhs += c;            // nu(IV)
            else if (s == Symbol{'E', 6}) rhs += c;       // nu(IV*)
        }
    }
    return 2 * (row.sigma + r) == rhs;
}

namespace detail {

// X * A = R solved exactly over Q; A has full row rank
inline RatMat solve_right(const RatMat& a, const RatMat& r) {
    std::size_t m = a.rows(), n = a.cols(), k = r.rows();
    assert(r.cols() == n);
    // eliminate on A^T | R^T
    RatMat w(n, m + k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) w(i, j) = a(j, i);
        for (std::size_t j = 0; j < k; ++j) w(i, m + j) = r(j, i);
    }
    std::size_t row = 0;
    std::vector<std::size_t> pivot_of(m, SIZE_MAX);
    for (std::size_t col = 0; col < m && row < n; ++col) {
        std::size_t piv = row;
        while (piv < n && w(piv, col) == 0) ++piv;
        if (piv == n) continue;
        if (piv != row)
            for (std::size_t j = 0; j < m + k; ++j) std::swap(w(row, j), w(piv, j));
        Rational d = w(row, col);
        for (std::size_t j = 0; j < m + k; ++j) w(row, j) /= d;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == row || w(i, col) == 0) continue;
            Rational f = w(i, col);
            for (std::size_t j = col; j < m + k; ++j) w(i, j) -= f * w(row, j);
        }
        pivot_of[col] = row;
        ++row;
    }
    RatMat x(k, m);
    for (std::size_t col = 0; col < m; ++col) {
        assert(pivot_of[col] != SIZE_MAX);
        for (std::size_t j = 0; j < k; ++j) x(j, col) = w(pivot_of[col], m + j);
    }
    // consistency: rows below the rank must have zero right-hand side
    for (std::size_t i = row; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) assert(w(i, m + j) == 0);
    return x;
}

}  // namespace detail

// Mordell-Weil group of the fibration attached to one passing subgroup:
// invariant factors of U-perp / Q(R) inside the overlattice.
inline std::vector<long> mordell_weil(const GlueGroup& glue, const FqmSubgroup& s,
                                      std::size_t zcomp) {
    const Fqm& g = glue.fqm();
    std::size_t rank = g.rank();  // 22
    Overlattice lam = overlattice(g.gram(), g, s);
    std::size_t zoff = glue.block_offset(zcomp);

    // f = (e + a)/2 and z = -a in lattice coordinates
    RatMat fz(2, rank);
    fz(0, zoff) = Rational(1, 2);
    fz(0, rank - 1) = Rational(1, 2);
    fz(1, zoff) = -1;

    // pairing columns: B * M * {f,z}^T; clear denominators, integer kernel
    RatMat bm = lam.basis * RatMat(g.gram());
    RatMat cols = bm * fz.transpose();  // 22 x 2
    Int den = cols.common_denominator();
    IntMat ic(rank, 2);
    for (std::size_t i = 0; i < rank; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            Rational e = cols(i, j) * Rational(den);
            ic(i, j) = e.get_num();
        }
    IntMat ker = integer_kernel(ic);  // rows: coords in the overlattice basis
    if (ker.rows() != rank - 2) throw std::runtime_error("U-perp has unexpected rank");

    RatMat uperp(rank - 2, rank);  // basis rows in lattice coordinates
    {
        RatMat kk(rank - 2, rank);
        for (std::size_t i = 0; i + 2 < rank; ++i)
            for (std::size_t j = 0; j < rank; ++j) kk(i, j) = Rational(ker(i, j));
        uperp = kk * lam.basis;
    }

    // the simple roots of the R blocks, as rows in lattice coordinates
    RatMat roots(rank - 2, rank);
    {
        std::size_t k = 0;
        for (std::size_t c = 0; c < glue.component_count(); ++c) {
            if (c == zcomp) continue;
            std::size_t off = glue.block_offset(c);
            for (int i = 0; i < glue.components()[c].rank(); ++i, ++k) roots(k, off + i) = 1;
        }
        assert(k == rank - 2);
    }
    RatMat coords = detail::solve_right(uperp, roots);
    if (!coords.is_integral()) throw std::runtime_error("root span is not inside U-perp");
    auto qs = quotient_structure(coords.to_int(), rank - 2);
    if (qs.free_rank != 0) throw std::runtime_error("Mordell-Weil group is not finite");
    std::vector<long> mw;
    for (auto& d : qs.torsion) mw.push_back(mpz_get_si(d.get_mpz_t()));

    // determinant bookkeeping: disc(Q(R)) = disc(U-perp) * |MW|^2
    {
        RatMat gr = uperp * RatMat(g.gram()) * uperp.transpose();
        Int du = det(gr.to_int());
        AdeType r20 = glue.type().minus({'A', 1});
        Int dr = det(gram_of(r20).gram);
        Int idx = 1;
        for (long d : mw) idx *= d;
        if (du * idx * idx != dr) throw std::runtime_error("Mordell-Weil index bookkeeping failed");
    }
    return mw;
}

struct EllipticOutcome {
    bool decided = true;
    std::vector<EllipticRow> rows;
    std::uint64_t nodes = 0;
    double seconds = 0;
};

// all rows <R, sigma, MW> for one rank-20 type in one characteristic
inline EllipticOutcome elliptic_classify(const AdeType& r20, long p,
                                         SearchLimits limits = {}) {
    if (r20.rank() != 20) throw std::invalid_argument("elliptic classification needs rank 20");
    AdeType r21 = r20.plus({'A', 1});

    CandidateOptions opt;
    opt.limits = limits;
    opt.elliptic_symmetry = true;

    CandidateRunner probe(r21, 2, p, opt);  // to locate components
    const GlueGroup& glue0 = probe.glue();
    std::size_t zcomp = glue0.component_count() - 1;  // A_1 sorts last
    assert(glue0.components()[zcomp] == (Symbol{'A', 1}));

    // f = class of (h - z)/2: the z generator plus the I(2) generator
    Fqm::Elem f(glue0.fqm().gen_count(), 0);
    for (std::size_t flat = 0; flat < glue0.fqm().gen_count(); ++flat) {
        if (glue0.component_of_gen(flat) == zcomp) f[flat] = 1;
        if (glue0.component_of_gen(flat) == glue0.in_component()) f[flat] = 1;
    }
    opt.fixed_component = zcomp;
    opt.forced = {f};

    CandidateRunner runner(r21, 2, p, opt);
    const GlueGroup& glue = runner.glue();
    bool quasi = (p == 2 || p == 3) && quasi_elliptic_test(r20, p);

    EllipticOutcome out;
    std::set<EllipticRow> rows;
    std::set<std::vector<ZqMat>> seen;  // skip duplicate leaf reports
    auto res = runner.run([&](int sigma, const std::vector<Fqm::Elem>& gens) {
        FqmSubgroup s = FqmSubgroup::span(glue.fqm(), gens);
        if (!s.contains(glue.fqm(), f)) return true;  // h-z not divisible
        if (!seen.insert(s.blocks()).second) return true;
        EllipticRow row;
        row.R = r20;
        row.p = p;
        row.sigma = sigma;
        row.mw = mordell_weil(glue, s, zcomp);
        row.quasi = quasi;
        rows.insert(std::move(row));
        return true;
    });
    out.decided = res.decided;
    out.nodes = res.nodes;
    out.seconds = res.seconds;
    out.rows.assign(rows.begin(), rows.end());
    return out;
}

}  // namespace ssk3
