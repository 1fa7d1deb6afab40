#pragma once

// Finite quadratic modules (discriminant forms) and their subgroups.
//
// A module is stored per prime: for each prime l dividing |G| a list of
// cyclic generators of order l^e with exact q-values in Q/2Z (reduced to
// [0,2)), b-values in Q/Z (reduced to [0,1)) and rational lifts into the
// dual of the source lattice.  Subgroups are stored per prime as Howell
// matrices in scaled coordinates (zmod.hpp), which makes them canonical:
// equal subgroups have equal matrices.

#include <algorithm>
#include <cassert>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ssk3/intmat.hpp"
#include "ssk3/rational.hpp"
#include "ssk3/zmod.hpp"

namespace ssk3 {

inline Rat to_rat(const Rational& x) {
    assert(mpz_fits_slong_p(x.get_num_mpz_t()) && mpz_fits_slong_p(x.get_den_mpz_t()));
    return Rat(mpz_get_si(x.get_num_mpz_t()), mpz_get_si(x.get_den_mpz_t()));
}

struct PrimePart {
    long p = 2;
    std::vector<long> orders;                 // p^{e_i} per generator
    std::vector<Rat> qval;                    // q(g_i) in [0,2)
    std::vector<std::vector<Rat>> bval;       // b(g_i,g_j) in [0,1)
    std::vector<std::vector<Rational>> lift;  // rational rows in lattice coords

    unsigned emax() const {
        long m = 1;
        unsigned e = 0;
        for (long o : orders)
            while (m < o) { m *= p; ++e; }
        return e;
    }
    zint qmod() const { return pow_u64((zint)p, emax()); }
    zint scale(std::size_t i) const { return qmod() / (zint)orders[i]; }
    std::size_t size() const { return orders.size(); }
    long order() const {
        long o = 1;
        for (long x : orders) o *= x;
        return o;
    }
};

class Fqm {
public:
    using Elem = std::vector<long>;  // residues per generator, all parts concatenated

    Fqm() = default;

    // the discriminant form (G, q) of a nondegenerate even lattice
    static Fqm from_gram(const IntMat& gram) {
        if (gram.rows() != gram.cols() || !gram.is_symmetric())
            throw std::invalid_argument("discriminant form needs a symmetric square Gram matrix");
        Int d = det(gram);
        if (d == 0) throw std::invalid_argument("degenerate lattice");
        std::size_t r = gram.rows();
        auto snf = smith_normal_form(gram);

        Fqm g;
        g.rank_ = r;
        g.gram_ = gram;
        // lift of SNF generator i is column i of V / d_i
        struct Gen { long order; std::vector<Rational> lift; };
        std::vector<Gen> gens;
        for (std::size_t i = 0; i < snf.diag.size(); ++i) {
            Int di = snf.diag[i];
            if (di < 0) di = -di;
            if (di == 1) continue;
            assert(mpz_fits_slong_p(di.get_mpz_t()));
            Gen gen;
            gen.order = mpz_get_si(di.get_mpz_t());
            gen.lift.resize(r);
            for (std::size_t k = 0; k < r; ++k)
                gen.lift[k] = Rational(snf.right(k, i)) / Rational(di);
            gens.push_back(std::move(gen));
        }
        // split each generator into its prime-power components
        std::map<long, std::vector<std::pair<long, std::vector<Rational>>>> by_prime;
        for (auto& gen : gens) {
            long rest = gen.order;
            for (long p = 2; rest > 1;) {
                while (p * p <= rest && rest % p != 0) ++p;
                long q = p <= rest && rest % p == 0 ? p : rest;
                long pe = 1;
                while (rest % q == 0) { rest /= q; pe *= q; }
                long c = gen.order / pe;
                std::vector<Rational> lift(r);
                for (std::size_t k = 0; k < r; ++k) lift[k] = Rational(c) * gen.lift[k];
                by_prime[q].push_back({pe, std::move(lift)});
                p = q + 1;
            }
        }
        for (auto& [p, list] : by_prime) {
            // largest order first
            std::stable_sort(list.begin(), list.end(),
                             [](const auto& a, const auto& b) { return a.first > b.first; });
            PrimePart part;
            part.p = p;
            for (auto& [pe, lift] : list) {
                part.orders.push_back(pe);
                part.lift.push_back(std::move(lift));
            }
            g.parts_.push_back(std::move(part));
        }
        g.fill_qb_from_lifts();
        return g;
    }

    static Fqm direct_sum(const Fqm& a, const Fqm& b) {
        Fqm g;
        g.rank_ = a.rank_ + b.rank_;
        g.gram_ = IntMat(g.rank_, g.rank_);
        for (std::size_t i = 0; i < a.rank_; ++i)
            for (std::size_t j = 0; j < a.rank_; ++j) g.gram_(i, j) = a.gram_(i, j);
        for (std::size_t i = 0; i < b.rank_; ++i)
            for (std::size_t j = 0; j < b.rank_; ++j)
                g.gram_(a.rank_ + i, a.rank_ + j) = b.gram_(i, j);
        std::map<long, PrimePart> merged;
        auto absorb = [&](const Fqm& src, std::size_t offset) {
            for (const auto& part : src.parts_) {
                PrimePart& dst = merged.try_emplace(part.p, PrimePart{part.p}).first->second;
                for (std::size_t i = 0; i < part.size(); ++i) {
                    dst.orders.push_back(part.orders[i]);
                    std::vector<Rational> lift(g.rank_);
                    for (std::size_t k = 0; k < src.rank_; ++k)
                        lift[offset + k] = part.lift[i][k];
                    dst.lift.push_back(std::move(lift));
                }
            }
        };
        absorb(a, 0);
        absorb(b, a.rank_);
        for (auto& [p, part] : merged) {
            // keep orders descending within a part
            std::vector<std::size_t> idx(part.orders.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
                return part.orders[x] > part.orders[y];
            });
            PrimePart sorted;
            sorted.p = p;
            for (std::size_t i : idx) {
                sorted.orders.push_back(part.orders[i]);
                sorted.lift.push_back(std::move(part.lift[i]));
            }
            g.parts_.push_back(std::move(sorted));
        }
        g.fill_qb_from_lifts();
        return g;
    }

    // assemble from explicitly laid-out prime parts (lifts given; q and b
    // are recomputed from them so the layout can be chosen by the caller)
    static Fqm assemble(IntMat gram, std::vector<PrimePart> parts) {
        Fqm g;
        g.rank_ = gram.rows();
        g.gram_ = std::move(gram);
        g.parts_ = std::move(parts);
        std::stable_sort(g.parts_.begin(), g.parts_.end(),
                         [](const PrimePart& a, const PrimePart& b) { return a.p < b.p; });
        g.fill_qb_from_lifts();
        return g;
    }

    const std::vector<PrimePart>& parts() const { return parts_; }
    const IntMat& gram() const { return gram_; }
    std::size_t rank() const { return rank_; }

    std::size_t gen_count() const {
        std::size_t n = 0;
        for (auto& p : parts_) n += p.size();
        return n;
    }
    std::size_t part_offset(std::size_t part) const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < part; ++i) n += parts_[i].size();
        return n;
    }
    std::optional<std::size_t> part_index(long p) const {
        for (std::size_t i = 0; i < parts_.size(); ++i)
            if (parts_[i].p == p) return i;
        return std::nullopt;
    }

    long order() const {
        long o = 1;
        for (auto& p : parts_) o *= p.order();
        return o;
    }

    // elementary divisor chain d_1 | d_2 | ... (ascending, each > 1)
    std::vector<long> divisor_chain() const {
        std::size_t slots = 0;
        for (auto& p : parts_) slots = std::max(slots, p.size());
        std::vector<long> chain(slots, 1);
        for (auto& p : parts_)
            for (std::size_t i = 0; i < p.size(); ++i)
                chain[slots - 1 - i] *= p.orders[i];  // largest into the last slot
        return chain;
    }

    Rat q_value(const Elem& x) const {
        assert(x.size() == gen_count());
        Rat acc(0);
        std::size_t off = 0;
        for (const auto& part : parts_) {
            for (std::size_t i = 0; i < part.size(); ++i) {
                long xi = x[off + i] % part.orders[i];
                if (xi == 0) continue;
                acc += Rat(xi * xi) * part.qval[i];
                for (std::size_t j = i + 1; j < part.size(); ++j) {
                    long xj = x[off + j] % part.orders[j];
                    if (xj == 0) continue;
                    acc += Rat(2 * xi * xj) * part.bval[i][j];
                }
            }
            off += part.size();
        }
        return qmod2(acc);
    }

    Rat b_value(const Elem& x, const Elem& y) const {
        Rat acc(0);
        std::size_t off = 0;
        for (const auto& part : parts_) {
            for (std::size_t i = 0; i < part.size(); ++i) {
                long xi = x[off + i] % part.orders[i];
                if (xi == 0) continue;
                for (std::size_t j = 0; j < part.size(); ++j) {
                    long yj = y[off + j] % part.orders[j];
                    if (yj == 0) continue;
                    acc += Rat(xi * yj) * part.bval[i][j];
                }
            }
            off += part.size();
        }
        return bmod1(acc);
    }

    // rational lift of an element into the dual of the source lattice
    std::vector<Rational> lift(const Elem& x) const {
        std::vector<Rational> v(rank_);
        std::size_t off = 0;
        for (const auto& part : parts_) {
            for (std::size_t i = 0; i < part.size(); ++i) {
                long xi = x[off + i] % part.orders[i];
                if (xi < 0) xi += part.orders[i];
                if (xi == 0) continue;
                for (std::size_t k = 0; k < rank_; ++k)
                    v[k] += Rational(xi) * part.lift[i][k];
            }
            off += part.size();
        }
        return v;
    }

    // maximal subgroup of order a power of l, with its index map into this
    // module: the returned part keeps the same generators, so an element of
    // the part embeds by placing its residues at part_offset.
    Fqm prime_part(long l) const {
        Fqm g;
        g.rank_ = rank_;
        g.gram_ = gram_;
        for (const auto& part : parts_)
            if (part.p == l) g.parts_.push_back(part);
        return g;
    }

    bool is_elementary(long p) const {
        for (auto& part : parts_) {
            if (part.p != p && !part.orders.empty()) return false;
            for (long o : part.orders)
                if (o != p) return false;
        }
        return true;
    }

private:
    void fill_qb_from_lifts() {
        for (auto& part : parts_) {
            std::size_t n = part.size();
            part.qval.assign(n, Rat(0));
            part.bval.assign(n, std::vector<Rat>(n, Rat(0)));
            for (std::size_t i = 0; i < n; ++i) {
                part.qval[i] = to_rat(pairing(part.lift[i], part.lift[i])).mod(2);
                for (std::size_t j = 0; j < n; ++j)
                    part.bval[i][j] = to_rat(pairing(part.lift[i], part.lift[j])).mod(1);
            }
        }
    }
    Rational pairing(const std::vector<Rational>& a, const std::vector<Rational>& b) const {
        Rational s = 0;
        for (std::size_t i = 0; i < rank_; ++i) {
            if (a[i] == 0) continue;
            Rational row = 0;
            for (std::size_t j = 0; j < rank_; ++j)
                if (b[j] != 0) row += Rational(gram_(i, j)) * b[j];
            s += a[i] * row;
        }
        return s;
    }

    std::vector<PrimePart> parts_;
    IntMat gram_;
    std::size_t rank_ = 0;
};

// Subgroup of an Fqm: one Howell matrix per prime part, in scaled
// coordinates.  Equality of subgroups is equality of the matrices.
class FqmSubgroup {
public:
    FqmSubgroup() = default;
    explicit FqmSubgroup(const Fqm& g) : blocks_(g.parts().size()) {}

    static FqmSubgroup span(const Fqm& g, const std::vector<Fqm::Elem>& gens) {
        FqmSubgroup s(g);
        for (std::size_t pi = 0; pi < g.parts().size(); ++pi) {
            const PrimePart& part = g.parts()[pi];
            std::size_t off = g.part_offset(pi);
            zint q = part.qmod();
            ZqMat rows;
            for (const auto& e : gens) {
                ZqRow r(part.size());
                bool nz = false;
                for (std::size_t i = 0; i < part.size(); ++i) {
                    long xi = e[off + i] % part.orders[i];
                    if (xi < 0) xi += part.orders[i];
                    r[i] = (zint)xi * part.scale(i) % q;
                    nz |= r[i] != 0;
                }
                if (nz) rows.push_back(std::move(r));
            }
            s.blocks_[pi] = zq::howell(std::move(rows), q, (zint)part.p);
        }
        return s;
    }

    const std::vector<ZqMat>& blocks() const { return blocks_; }
    ZqMat& block(std::size_t i) { return blocks_[i]; }
    const ZqMat& block(std::size_t i) const { return blocks_[i]; }

    bool operator==(const FqmSubgroup&) const = default;

    long order(const Fqm& g) const {
        long o = 1;
        for (std::size_t pi = 0; pi < blocks_.size(); ++pi)
            o *= (long)zq::span_order(blocks_[pi], g.parts()[pi].qmod());
        return o;
    }

    bool contains(const Fqm& g, const Fqm::Elem& e) const {
        for (std::size_t pi = 0; pi < blocks_.size(); ++pi) {
            const PrimePart& part = g.parts()[pi];
            std::size_t off = g.part_offset(pi);
            zint q = part.qmod();
            ZqRow r(part.size());
            for (std::size_t i = 0; i < part.size(); ++i) {
                long xi = e[off + i] % part.orders[i];
                if (xi < 0) xi += part.orders[i];
                r[i] = (zint)xi * part.scale(i) % q;
            }
            if (!zq::member(blocks_[pi], std::move(r), q, (zint)part.p)) return false;
        }
        return true;
    }

    // all elements (unscaled residue coordinates); order must stay small
    std::vector<Fqm::Elem> elements(const Fqm& g) const {
        std::vector<Fqm::Elem> out{Fqm::Elem(g.gen_count(), 0)};
        for (std::size_t pi = 0; pi < blocks_.size(); ++pi) {
            const PrimePart& part = g.parts()[pi];
            std::size_t off = g.part_offset(pi);
            zint q = part.qmod();
            std::vector<Fqm::Elem> next;
            // multiples of each Howell row, triangular enumeration
            std::vector<std::pair<ZqRow, zint>> rows;  // (row, q/pivot)
            for (const auto& r : blocks_[pi]) {
                std::size_t c = 0;
                while (c < r.size() && r[c] == 0) ++c;
                if (c < r.size()) rows.push_back({r, q / r[c]});
            }
            std::vector<zint> coef(rows.size(), 0);
            while (true) {
                // element from current coefficients
                ZqRow acc(part.size(), 0);
                for (std::size_t k = 0; k < rows.size(); ++k)
                    if (coef[k])
                        for (std::size_t j = 0; j < part.size(); ++j)
                            acc[j] = (acc[j] + coef[k] * rows[k].first[j]) % q;
                for (const auto& base : out) {
                    Fqm::Elem e = base;
                    for (std::size_t j = 0; j < part.size(); ++j)
                        e[off + j] = (long)(acc[j] / part.scale(j));
                    next.push_back(std::move(e));
                }
                std::size_t k = 0;
                while (k < rows.size() && ++coef[k] == rows[k].second) coef[k++] = 0;
                if (k == rows.size()) break;
            }
            if (rows.empty()) continue;  // `next` already == out via the zero pass
            out = std::move(next);
        }
        return out;
    }

    bool is_isotropic(const Fqm& g) const {
        auto gens = generator_elems(g);
        for (std::size_t i = 0; i < gens.size(); ++i) {
            if (g.q_value(gens[i]) != Rat(0)) return false;
            for (std::size_t j = i; j < gens.size(); ++j)
                if (g.b_value(gens[i], gens[j]) != Rat(0)) return false;
        }
        return true;
    }

    // generator elements in unscaled residue coordinates
    std::vector<Fqm::Elem> generator_elems(const Fqm& g) const {
        std::vector<Fqm::Elem> out;
        for (std::size_t pi = 0; pi < blocks_.size(); ++pi) {
            const PrimePart& part = g.parts()[pi];
            std::size_t off = g.part_offset(pi);
            for (const auto& r : blocks_[pi]) {
                Fqm::Elem e(g.gen_count(), 0);
                for (std::size_t j = 0; j < part.size(); ++j)
                    e[off + j] = (long)(r[j] / part.scale(j));
                out.push_back(std::move(e));
            }
        }
        return out;
    }

    // orthogonal complement with respect to b
    FqmSubgroup orthogonal_complement(const Fqm& g) const {
        FqmSubgroup s(g);
        for (std::size_t pi = 0; pi < blocks_.size(); ++pi) {
            const PrimePart& part = g.parts()[pi];
            zint q = part.qmod();
            std::size_t n = part.size();
            // beta_ij = q * b(g_i, g_j) as integers mod q
            std::vector<std::vector<zint>> beta(n, std::vector<zint>(n));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const Rat& b = part.bval[i][j];
                    assert((long)q % b.den == 0);
                    beta[i][j] = (zint)((__int128)b.num * ((long)q / b.den) % (long)q);
                }
            // conditions: for each subgroup generator s (unscaled coords u),
            // sum_i x_i * (sum_j beta_ij u_j) == 0 (mod q)
            ZqMat cond(n);
            std::size_t ngens = blocks_[pi].size();
            for (std::size_t i = 0; i < n; ++i) cond[i].resize(ngens);
            for (std::size_t gidx = 0; gidx < ngens; ++gidx) {
                const ZqRow& row = blocks_[pi][gidx];
                for (std::size_t i = 0; i < n; ++i) {
                    zint acc = 0;
                    for (std::size_t j = 0; j < n; ++j) {
                        zint uj = row[j] / part.scale(j);
                        if (uj) acc = (acc + beta[i][j] % q * uj) % q;
                    }
                    cond[i][gidx] = acc;
                }
            }
            ZqMat ker = zq::kernel(cond, n, q, (zint)part.p);  // unscaled coords
            // rescale the kernel rows into subgroup coordinates
            ZqMat scaled;
            for (auto& r : ker) {
                ZqRow s2(n);
                for (std::size_t j = 0; j < n; ++j) s2[j] = r[j] * part.scale(j) % q;
                scaled.push_back(std::move(s2));
            }
            s.blocks_[pi] = zq::howell(std::move(scaled), q, (zint)part.p);
        }
        return s;
    }

private:
    std::vector<ZqMat> blocks_;
};

struct Overlattice {
    RatMat basis;  // rows span the overlattice in source-lattice coordinates
    IntMat gram;   // Gram matrix of the overlattice (integral, even)
};

// The even overlattice corresponding to an isotropic subgroup (Nikulin).
// Throws if S is not isotropic (the Gram would not be integral and even).
inline Overlattice overlattice(const IntMat& gram, const Fqm& g, const FqmSubgroup& s) {
    std::size_t r = gram.rows();
    auto gens = s.generator_elems(g);
    RatMat stack(r + gens.size(), r);
    for (std::size_t i = 0; i < r; ++i) stack(i, i) = 1;
    for (std::size_t k = 0; k < gens.size(); ++k) {
        auto lift = g.lift(gens[k]);
        for (std::size_t j = 0; j < r; ++j) stack(r + k, j) = lift[j];
    }
    Int den = stack.common_denominator();
    IntMat scaled(r + gens.size(), r);
    for (std::size_t i = 0; i < r + gens.size(); ++i)
        for (std::size_t j = 0; j < r; ++j) {
            Rational e = stack(i, j) * Rational(den);
            scaled(i, j) = e.get_num();
        }
    IntMat h = hermite_normal_form(scaled);
    if (h.rows() != r) throw std::runtime_error("overlattice: basis is not full rank");
    RatMat basis(r, r);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) basis(i, j) = Rational(h(i, j)) / Rational(den);
    RatMat gr = basis * RatMat(gram) * basis.transpose();
    if (!gr.is_integral()) throw std::invalid_argument("overlattice: subgroup is not isotropic");
    IntMat gi = gr.to_int();
    for (std::size_t i = 0; i < r; ++i)
        if (gi(i, i) % 2 != 0)
            throw std::invalid_argument("overlattice: subgroup is not isotropic (odd norm)");
    return {std::move(basis), std::move(gi)};
}

// p-elementary test: all coefficients of p * M^{-1} are integers
inline bool is_p_elementary(const IntMat& gram, long p) {
    RatMat inv = inverse_rational(gram);
    for (std::size_t i = 0; i < inv.rows(); ++i)
        for (std::size_t j = 0; j < inv.cols(); ++j) {
            Rational e = inv(i, j) * p;
            if (e.get_den() != 1) return false;
        }
    return true;
}

// type I test for a 2-elementary lattice: diagonal of M^{-1} is integral
inline bool is_type_I(const IntMat& gram) {
    if (!is_p_elementary(gram, 2))
        throw std::invalid_argument("type I test requires a 2-elementary lattice");
    RatMat inv = inverse_rational(gram);
    for (std::size_t i = 0; i < inv.rows(); ++i)
        if (inv(i, i).get_den() != 1) return false;
    return true;
}

struct QuotientStructure {
    std::vector<Int> torsion;  // elementary divisors > 1
    std::size_t free_rank = 0;
};

// structure of L / span(M): M given by rows of integer coordinates in a
// basis of L (rank defect allowed)
inline QuotientStructure quotient_structure(const IntMat& coords, std::size_t rank_L) {
    auto snf = smith_normal_form(coords);
    QuotientStructure qs;
    std::size_t rank_M = 0;
    for (auto& d : snf.diag)
        if (d != 0) {
            ++rank_M;
            Int a = d < 0 ? Int(-d) : d;
            if (a != 1) qs.torsion.push_back(a);
        }
    std::sort(qs.torsion.begin(), qs.torsion.end());
    qs.free_rank = rank_L - rank_M;
    return qs;
}

}  // namespace ssk3
