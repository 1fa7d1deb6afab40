#pragma once

// Component-structured discriminant form of Q(R,n).
//
// The classifier needs more than the bare module (G_{R,n}, q): for the root
// conditions every element has to be read as a tuple of per-component
// discriminant classes, and the symmetry generators act component-wise.
// GlueGroup assembles the Fqm of Q(R) (+) I(n) with one block of generators
// per component (component-major layout within each prime part) and keeps,
// for every generator, the component it came from and its class in that
// component's coset table coordinates.
//
// Root counting: a class contributes dual vectors of norm exactly -2 when
// the per-component coset norm menus admit a selection summing to -2.
// Nonzero cosets of a negative definite component only offer norms <= -1/2,
// so root-carrying classes touch at most four components and a tiny DFS
// decides each class.

#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <vector>

#include "ssk3/ade.hpp"
#include "ssk3/fqm.hpp"
#include "ssk3/shortvec.hpp"

namespace ssk3 {

namespace detail {

struct ComponentForm {
    Symbol sym;
    Fqm fqm;  // discriminant form of Q(sym) in local coordinates
    // class residues (coset table coordinates) per flat fqm generator
    std::vector<std::vector<long>> gen_class;
};

inline const ComponentForm& component_form(const Symbol& s) {
    static std::map<std::pair<char, int>, ComponentForm> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({s.kind, s.index});
    if (it != cache.end()) return it->second;

    ComponentForm cf;
    cf.sym = s;
    IntMat gram = gram_of_indecomposable(s).gram;
    cf.fqm = Fqm::from_gram(gram);
    const CosetVectorTable& table = coset_vector_table(s);
    std::size_t n = gram.rows();
    for (std::size_t pi = 0; pi < cf.fqm.parts().size(); ++pi) {
        const PrimePart& part = cf.fqm.parts()[pi];
        for (std::size_t i = 0; i < part.size(); ++i) {
            // class residues of the generator: U * (gram * lift) mod divisors
            std::vector<long> cls(table.divisors.size());
            for (std::size_t r = 0; r < table.divisors.size(); ++r) {
                Rational acc = 0;
                for (std::size_t a = 0; a < n; ++a) {
                    Rational w = 0;
                    for (std::size_t bcol = 0; bcol < n; ++bcol)
                        w += Rational(gram(a, bcol)) * part.lift[i][bcol];
                    acc += Rational(table.proj(r, a)) * w;
                }
                assert(acc.get_den() == 1);
                Int m = acc.get_num() % table.divisors[r];
                long v = (long)mpz_get_si(m.get_mpz_t());
                if (v < 0) v += table.divisors[r];
                cls[r] = v;
            }
            cf.gen_class.push_back(std::move(cls));
        }
    }
    return cache.emplace(std::make_pair(s.kind, s.index), std::move(cf)).first->second;
}

}  // namespace detail

class GlueGroup {
public:
    // n == 0 builds the discriminant form of Q(R) alone
    GlueGroup(const AdeType& r, long n) : R_(r), n_(n) {
        comps_ = r.components();
        std::size_t rank = (std::size_t)r.rank() + (n ? 1 : 0);
        IntMat gram = n ? gram_of(r, n).gram : gram_of(r).gram;

        // one lattice block per component, I(n) last
        block_off_.resize(comps_.size() + 1, 0);
        std::size_t off = 0;
        for (std::size_t c = 0; c < comps_.size(); ++c) {
            block_off_[c] = off;
            off += (std::size_t)comps_[c].rank();
        }
        block_off_[comps_.size()] = off;

        std::map<long, PrimePart> merged;
        auto add_gen = [&](long p, long order, std::vector<Rational> lift,
                           std::size_t comp, std::vector<long> cls) {
            PrimePart& part = merged.try_emplace(p, PrimePart{p}).first->second;
            part.orders.push_back(order);
            part.lift.push_back(std::move(lift));
            tagged_[p].push_back({comp, std::move(cls)});
        };
        for (std::size_t c = 0; c < comps_.size(); ++c) {
            const auto& cf = detail::component_form(comps_[c]);
            std::size_t flat = 0;
            for (const auto& part : cf.fqm.parts()) {
                for (std::size_t i = 0; i < part.size(); ++i, ++flat) {
                    std::vector<Rational> lift(rank);
                    for (std::size_t k = 0; k < cf.fqm.rank(); ++k)
                        lift[block_off_[c] + k] = part.lift[i][k];
                    add_gen(part.p, part.orders[i], std::move(lift), c, cf.gen_class[flat]);
                }
            }
        }
        if (n) {
            // G_n cyclic of order n generated by e_n/n; per-prime pieces
            long rest = n;
            for (long p = 2; rest > 1;) {
                while (p * p <= rest && rest % p != 0) ++p;
                long q = (rest % p == 0) ? p : rest;
                long pe = 1;
                while (rest % q == 0) { rest /= q; pe *= q; }
                std::vector<Rational> lift(rank);
                lift[rank - 1] = Rational(n / pe) / Rational(n);
                add_gen(q, pe, std::move(lift), comps_.size(), {n / pe % n});
                p = q + 1;
            }
        }
        std::vector<PrimePart> parts;
        for (auto& [p, part] : merged) parts.push_back(std::move(part));
        fqm_ = Fqm::assemble(std::move(gram), std::move(parts));

        // flat generator tags follow the assembled part order
        for (const auto& part : fqm_.parts())
            for (auto& tag : tagged_[part.p]) {
                gen_comp_.push_back(tag.comp);
                gen_class_.push_back(tag.cls);
            }

        // component class divisors
        comp_divisors_.resize(comps_.size() + 1);
        for (std::size_t c = 0; c < comps_.size(); ++c)
            comp_divisors_[c] = coset_vector_table(comps_[c]).divisors;
        if (n) comp_divisors_[comps_.size()] = {n};
    }

    const AdeType& type() const { return R_; }
    long polarization() const { return n_; }
    const Fqm& fqm() const { return fqm_; }
    const std::vector<Symbol>& components() const { return comps_; }
    std::size_t component_count() const { return comps_.size(); }
    bool has_in_factor() const { return n_ != 0; }
    std::size_t in_component() const { return comps_.size(); }
    std::size_t component_of_gen(std::size_t flat) const { return gen_comp_[flat]; }
    const std::vector<long>& class_of_gen(std::size_t flat) const { return gen_class_[flat]; }
    std::size_t block_offset(std::size_t comp) const { return block_off_[comp]; }
    const std::vector<long>& comp_divisors(std::size_t comp) const { return comp_divisors_[comp]; }

    // per-component coset keys of an element (I(n) component last when present)
    std::vector<std::size_t> class_of(const Fqm::Elem& x) const {
        std::vector<std::vector<long>> residues(comp_divisors_.size());
        for (std::size_t c = 0; c < comp_divisors_.size(); ++c)
            residues[c].assign(comp_divisors_[c].size(), 0);
        std::size_t flat = 0;
        for (const auto& part : fqm_.parts())
            for (std::size_t i = 0; i < part.size(); ++i, ++flat) {
                long xi = x[flat] % part.orders[i];
                if (xi < 0) xi += part.orders[i];
                if (xi == 0) continue;
                std::size_t c = gen_comp_[flat];
                for (std::size_t r = 0; r < comp_divisors_[c].size(); ++r) {
                    long d = comp_divisors_[c][r];
                    residues[c][r] = (residues[c][r] + (long)((__int128)xi * gen_class_[flat][r] % d)) % d;
                }
            }
        std::vector<std::size_t> keys(comp_divisors_.size(), 0);
        for (std::size_t c = 0; c < comps_.size(); ++c)
            keys[c] = coset_vector_table(comps_[c]).key(residues[c]);
        if (n_) keys[comps_.size()] = (std::size_t)residues[comps_.size()][0];
        return keys;
    }

    // number of dual vectors of norm exactly -2 in a class; the class must
    // have trivial I(n) part (callers count classes inside G_R x {0})
    long class_root_count(const std::vector<std::size_t>& keys) const {
        if (n_ && keys[comps_.size()] != 0)
            throw std::invalid_argument("root count needs trivial I(n) part");
        std::vector<std::pair<std::size_t, const std::vector<CosetEntry>*>> support;
        long zero_roots = 0;
        for (std::size_t c = 0; c < comps_.size(); ++c) {
            const auto& table = coset_vector_table(comps_[c]);
            if (keys[c] == 0) {
                zero_roots += table.roots;
                continue;
            }
            support.push_back({c, &table.cosets[keys[c]]});
        }
        if (support.empty()) return zero_roots;  // the zero class
        // DFS over support components: norms < 0 summing to exactly -2
        long total = 0;
        auto rec = [&](auto&& self, std::size_t i, Rat rem, long ways) -> void {
            if (i == support.size()) {
                if (rem == Rat(0)) total += ways;
                return;
            }
            for (const auto& e : *support[i].second) {
                if (e.norm >= Rat(0)) continue;
                if (e.norm < rem) continue;  // overshoots -2
                self(self, i + 1, Rat(rem - e.norm), ways * e.count);
            }
        };
        rec(rec, 0, Rat(-2), 1);
        return total;
    }

    bool class_has_root(const std::vector<std::size_t>& keys) const {
        return class_root_count(keys) > 0;
    }

    // |Roots| of the sublattice of Q(R)^dual spanned by the classes in s0:
    // the number of norm -2 dual vectors whose class lies in s0
    long rho(const std::vector<Fqm::Elem>& s0_elements) const {
        long total = 0;
        std::set<std::vector<std::size_t>> seen;
        for (const auto& e : s0_elements) {
            auto keys = class_of(e);
            if (n_ && keys[comps_.size()] != 0)
                throw std::invalid_argument("rho: element outside G_R x {0}");
            if (!seen.insert(keys).second) continue;
            total += class_root_count(keys);
        }
        return total;
    }

    long rho_plain() const { return root_count(R_); }

private:
    struct Tag {
        std::size_t comp;
        std::vector<long> cls;
    };

    AdeType R_;
    long n_;
    std::vector<Symbol> comps_;
    std::vector<std::size_t> block_off_;
    Fqm fqm_;
    std::map<long, std::vector<Tag>> tagged_;
    std::vector<std::size_t> gen_comp_;
    std::vector<std::vector<long>> gen_class_;
    std::vector<std::vector<long>> comp_divisors_;
};

// |Roots| of the overlattice glue: the spec-level entry point, S0 given as
// a subgroup of G_R by its elements (must be closed under addition).
inline long rho_of_glue(const AdeType& r, const std::vector<Fqm::Elem>& s0) {
    GlueGroup g(r, 0);
    // closure check on the given set
    std::set<Fqm::Elem> set(s0.begin(), s0.end());
    Fqm::Elem zero(g.fqm().gen_count(), 0);
    set.insert(zero);
    for (const auto& a : set)
        for (const auto& b : set) {
            Fqm::Elem sum(a.size());
            std::size_t flat = 0;
            for (const auto& part : g.fqm().parts())
                for (std::size_t i = 0; i < part.size(); ++i, ++flat)
                    sum[flat] = (a[flat] + b[flat]) % part.orders[i];
            if (!set.count(sum))
                throw std::invalid_argument("rho_of_glue: set not closed under addition");
        }
    return g.rho({set.begin(), set.end()});
}

}  // namespace ssk3
