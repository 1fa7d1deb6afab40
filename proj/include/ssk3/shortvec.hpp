#pragma once

// Complete short-vector enumeration for negative definite lattices, by
// recursive coordinate bounding on the exact rational Cholesky decomposition
// of -gram.  No floating point: interval tests are exact, so the vector list
// is complete by construction.
//
// On top of it, the per-coset tables of dual vectors used by the root-count
// machinery: for each indecomposable symbol X and each class g of the
// discriminant group G_X, the multiset of norms >= -2 of dual vectors in the
// coset g (with the explicit vectors kept for the oracle tests).

#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "ssk3/ade.hpp"
#include "ssk3/intmat.hpp"
#include "ssk3/rational.hpp"

namespace ssk3 {

// All lattice vectors v (integer coordinate rows) with bound <= v^2 <= 0,
// including the zero vector.  Exactly one of v, -v is returned for v != 0
// when half_only is set.
inline std::vector<std::vector<long>> enumerate_short_vectors(const IntMat& gram,
                                                              const Rational& bound,
                                                              bool half_only = false) {
    if (!gram.is_symmetric()) throw std::invalid_argument("gram must be symmetric");
    if (bound > 0) throw std::invalid_argument("bound must be <= 0");
    std::size_t n = gram.rows();

    // rational Cholesky of -gram: -gram = L^T D L with L unit upper triangular
    // (Fincke-Pohst layout: Q(x) = sum_i d_i (x_i + sum_{j>i} l_{ij} x_j)^2).
    RatMat a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = Rational(-gram(i, j));
    RatMat l(n, n);
    std::vector<Rational> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = a(i, i);
        if (d[i] <= 0) throw std::invalid_argument("lattice is not negative definite");
        for (std::size_t j = i + 1; j < n; ++j) l(i, j) = a(i, j) / d[i];
        for (std::size_t k = i + 1; k < n; ++k)
            for (std::size_t j = k; j < n; ++j) {
                a(k, j) -= a(i, k) / d[i] * a(i, j);
                if (j != k) a(j, k) = a(k, j);
            }
    }

    Rational cap = -bound;  // enumerate Q(x) <= cap in the positive form
    std::vector<std::vector<long>> out;
    std::vector<long> x(n, 0);

    auto rec = [&](auto&& self, std::size_t lvl, const Rational& rem) -> void {
        std::size_t i = lvl - 1;
        Rational c;  // c = sum_{j>i} l(i,j) x_j
        for (std::size_t j = i + 1; j < n; ++j)
            if (x[j] != 0) c += l(i, j) * x[j];
        // integer t = x_i ranges over d_i (t + c)^2 <= rem;
        // start at t0 = floor(-c + 1/2) and expand both ways
        long t0;
        {
            Rational h = -c + Rational(1, 2);
            mpz_class fl;
            mpz_fdiv_q(fl.get_mpz_t(), h.get_num_mpz_t(), h.get_den_mpz_t());
            t0 = (long)mpz_get_si(fl.get_mpz_t());
        }
        auto weight = [&](long t) {
            Rational s = c + t;
            return Rational(d[i] * s * s);
        };
        auto emit = [&](long t, const Rational& w) {
            x[i] = t;
            if (i == 0) {
                if (half_only) {
                    // keep the first nonzero coordinate positive
                    bool keep = true;
                    for (std::size_t j = 0; j < n; ++j)
                        if (x[j] != 0) { keep = x[j] > 0; break; }
                    if (keep) out.push_back(x);
                } else {
                    out.push_back(x);
                }
            } else {
                self(self, i, Rational(rem - w));
            }
        };
        for (long t = t0;; ++t) {
            Rational w = weight(t);
            if (w > rem) break;
            emit(t, w);
        }
        for (long t = t0 - 1;; --t) {
            Rational w = weight(t);
            if (w > rem) break;
            emit(t, w);
        }
        x[i] = 0;
    };
    if (n == 0) return {{}};
    rec(rec, n, cap);
    return out;
}

inline long root_count_of_gram(const IntMat& gram) {
    auto v = enumerate_short_vectors(gram, Rational(-2));
    long c = 0;
    for (const auto& w : v) {
        // count vectors of norm exactly -2
        Rational s = 0;
        for (std::size_t i = 0; i < gram.rows(); ++i)
            for (std::size_t j = 0; j < gram.cols(); ++j)
                if (w[i] && w[j]) s += Rational(gram(i, j)) * w[i] * w[j];
        if (s == -2) ++c;
    }
    return c;
}

// Dual vectors of norm >= -2 of one indecomposable root lattice, bucketed by
// discriminant class.  Class coordinates are the SNF generator residues of
// discriminant_form(Q(X)); for the cyclic groups here that is one residue.
struct CosetEntry {
    Rat norm;    // in [-2, 0]
    long count;  // number of dual vectors with this norm in the coset
    std::vector<std::vector<Rat>> vectors;  // lattice-rational coordinates
};

struct CosetVectorTable {
    Symbol symbol;
    long disc_order = 1;                    // |G_X|
    std::vector<long> divisors;             // SNF divisor chain of G_X (>1)
    IntMat proj;                            // dual-basis coords -> class residues
    // coset key = mixed-radix index over divisors
    std::vector<std::vector<CosetEntry>> cosets;  // indexed by coset key
    long roots = 0;                         // |Roots(Q(X))| = coset 0 count at -2

    std::size_t key(const std::vector<long>& residues) const {
        std::size_t k = 0;
        for (std::size_t i = 0; i < divisors.size(); ++i) {
            long r = residues[i] % divisors[i];
            if (r < 0) r += divisors[i];
            k = k * (std::size_t)divisors[i] + (std::size_t)r;
        }
        return k;
    }
};

namespace detail {
CosetVectorTable build_coset_table(const Symbol& s);
}

// process-wide memoized tables; read-only after construction
inline const CosetVectorTable& coset_vector_table(const Symbol& s) {
    static std::map<std::pair<char, int>, CosetVectorTable> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({s.kind, s.index});
    if (it == cache.end())
        it = cache.emplace(std::make_pair(s.kind, s.index), detail::build_coset_table(s)).first;
    return it->second;
}

inline long root_count(const Symbol& s) { return coset_vector_table(s).roots; }

inline long root_count(const AdeType& r) {
    long c = 0;
    for (auto& [s, m] : r.parts()) c += root_count(s) * m;
    return c;
}

namespace detail {

inline CosetVectorTable build_coset_table(const Symbol& s) {
    CosetVectorTable t;
    t.symbol = s;
    IntMat gram = gram_of_indecomposable(s).gram;
    std::size_t n = gram.rows();
    Int dt = det(gram);
    Int absdet = dt < 0 ? Int(-dt) : dt;
    t.disc_order = (long)mpz_get_si(absdet.get_mpz_t());

    auto snf = smith_normal_form(gram);
    std::vector<std::size_t> nontrivial;
    for (std::size_t i = 0; i < snf.diag.size(); ++i)
        if (snf.diag[i] != 1) {
            t.divisors.push_back((long)mpz_get_si(snf.diag[i].get_mpz_t()));
            nontrivial.push_back(i);
        }
    // class of a dual vector with dual-basis coordinates w is (U w) mod d
    t.proj = IntMat(nontrivial.size(), n);
    for (std::size_t i = 0; i < nontrivial.size(); ++i)
        for (std::size_t j = 0; j < n; ++j) t.proj(i, j) = snf.left(nontrivial[i], j);

    std::size_t ncosets = 1;
    for (long d : t.divisors) ncosets *= (std::size_t)d;
    t.cosets.resize(ncosets);

    // dual lattice rescaled to integer Gram: P = -|det| * gram^{-1} is
    // positive definite integral; w P w <= 2|det| <=> dual norm >= -2
    RatMat ginv = inverse_rational(gram);
    IntMat p(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Rational e = -Rational(absdet) * ginv(i, j);
            assert(e.get_den() == 1);
            p(i, j) = e.get_num();
        }
    IntMat pneg(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) pneg(i, j) = -p(i, j);
    auto vecs = enumerate_short_vectors(pneg, Rational(-2 * absdet));

    std::vector<std::vector<long>> projmod(t.divisors.size(), std::vector<long>(n));
    for (std::size_t i = 0; i < t.divisors.size(); ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Int m = t.proj(i, j) % t.divisors[i];
            projmod[i][j] = (long)mpz_get_si(m.get_mpz_t());
            if (projmod[i][j] < 0) projmod[i][j] += t.divisors[i];
        }

    std::map<std::size_t, std::map<Rat, CosetEntry>> buckets;
    std::vector<long> residues(t.divisors.size());
    for (const auto& w : vecs) {
        // norm = w gram^{-1} w^T
        Rational nm = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (w[i] && w[j]) nm += ginv(i, j) * w[i] * w[j];
        Rat norm((long)mpz_get_si(nm.get_num_mpz_t()), (long)mpz_get_si(nm.get_den_mpz_t()));
        for (std::size_t i = 0; i < t.divisors.size(); ++i) {
            long acc = 0;
            for (std::size_t j = 0; j < n; ++j)
                acc += projmod[i][j] * w[j];
            residues[i] = ((acc % t.divisors[i]) + t.divisors[i]) % t.divisors[i];
        }
        std::size_t k = t.key(residues);
        auto& entry = buckets[k][norm];
        entry.norm = norm;
        entry.count += 1;
        if (norm == Rat(-2) || norm == Rat(0)) {
            // lattice-rational coordinates of the dual vector: gram^{-1} w
            std::vector<Rat> coords(n);
            for (std::size_t i = 0; i < n; ++i) {
                Rational c = 0;
                for (std::size_t j = 0; j < n; ++j)
                    if (w[j]) c += ginv(i, j) * w[j];
                coords[i] = Rat((long)mpz_get_si(c.get_num_mpz_t()),
                                (long)mpz_get_si(c.get_den_mpz_t()));
            }
            entry.vectors.push_back(std::move(coords));
        }
    }
    for (auto& [k, m] : buckets)
        for (auto& [nm, e] : m) t.cosets[k].push_back(std::move(e));
    for (const auto& e : t.cosets[0])
        if (e.norm == Rat(-2)) t.roots = e.count;
    return t;
}

}  // namespace detail

}  // namespace ssk3
