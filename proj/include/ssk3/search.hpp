#pragma once

// Orbit-reduced enumeration of isotropic subgroups of one prime part of a
// glued discriminant form.
//
// The search grows subgroups one generator at a time (depth-first).  The
// constraints it prunes on are monotone: an element of S lying in G_n, or a
// class of S with dual vectors of norm -2 beyond the plain roots, stays bad
// in every supergroup, so the subtree can be cut.  Deduplication works at
// two levels: exact (the same subgroup reached through different chains is
// expanded once per node, via the set of elements already spanned) and up
// to symmetry (a canonical key of the subgroup under permutations of
// identical components and the allowed per-component moves).
//
// Elements of the part are packed into 64-bit words.  For p = 2 each
// generator occupies its bit width plus one guard bit, so addition is one
// masked 64-bit add; for odd p a mixed-radix layout with per-column decode
// loops is used (odd parts are small).  When every generator has order 2
// the bilinear filter collapses to popcount parity, which is the fast path
// carrying the big A_1-heavy searches.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <unordered_set>
#include <vector>

#include "ssk3/bitcanon.hpp"
#include "ssk3/glue.hpp"
#include "ssk3/zmod.hpp"

namespace ssk3 {

using u64 = std::uint64_t;

// ---------------------------------------------------------------------------
// Packed arithmetic for one prime part

class PartContext {
public:
    PartContext() = default;
    // torsion_mode restricts the context to the p-torsion subgroup (all
    // generators replaced by their order-p multiples); valid to use when no
    // isotropic element of larger order exists in the part
    PartContext(const GlueGroup& glue, std::size_t part_index, bool torsion_mode = false)
        : glue_(&glue), pi_(part_index), torsion_(torsion_mode) {
        const PrimePart& part = glue.fqm().parts()[pi_];
        p_ = part.p;
        orders_.assign(part.orders.begin(), part.orders.end());
        scale_.assign(orders_.size(), 1);
        if (torsion_) {
            for (std::size_t j = 0; j < orders_.size(); ++j) {
                scale_[j] = orders_[j] / p_;
                orders_[j] = p_;
            }
        }
        ncols_ = orders_.size();
        flat0_ = glue.fqm().part_offset(pi_);

        shift_.resize(ncols_);
        width_.resize(ncols_);
        unsigned pos = 0;
        for (std::size_t j = 0; j < ncols_; ++j) {
            unsigned w = 0;
            long o = 1;
            while (o < orders_[j]) { o *= p_; ++w; }
            width_[j] = w;
            shift_[j] = pos;
            unsigned lane = (p_ == 2) ? w + 1 : bits_for(orders_[j]);
            pos += lane;
        }
        assert(pos <= 62);
        for (std::size_t j = 0; j < ncols_; ++j) {
            lanemask_.push_back(((u64(1) << bits_for(orders_[j] - 1)) - 1) << shift_[j]);
            if (p_ == 2) {
                valuemask_ |= ((u64(1) << width_[j]) - 1) << shift_[j];
                low1_ |= u64(1) << shift_[j];
            }
        }

        // D * q and D * b as integers, D = p^emax (q taken mod 2, b mod 1)
        D_ = 1;
        for (std::size_t j = 0; j < ncols_; ++j) D_ = std::max(D_, orders_[j]);
        qnum_.resize(ncols_);
        bnum_.assign(ncols_ * ncols_, 0);
        for (std::size_t i = 0; i < ncols_; ++i) {
            Rat q = qmod2(part.qval[i] * Rat(scale_[i] * scale_[i]));
            qnum_[i] = (long)(q.num * (D_ / q.den) % (2 * D_));
            if (qnum_[i] < 0) qnum_[i] += 2 * D_;
            for (std::size_t j = 0; j < ncols_; ++j) {
                Rat b = bmod1(part.bval[i][j] * Rat(scale_[i] * scale_[j]));
                long v = (long)(b.num * (D_ / b.den) % D_);
                bnum_[i * ncols_ + j] = v < 0 ? v + D_ : v;
            }
        }
        pure_bits_ = (p_ == 2);
        for (std::size_t j = 0; j < ncols_; ++j)
            if (orders_[j] != 2) pure_bits_ = false;
        if (pure_bits_) {
            qm1_ = qm2_ = qm3_ = 0;
            brow_.assign(ncols_, 0);
            for (std::size_t i = 0; i < ncols_; ++i) {
                long v = qnum_[i] & 3;  // 2q(g_i) mod 4
                if (v == 1) qm1_ |= u64(1) << shift_[i];
                if (v == 2) qm2_ |= u64(1) << shift_[i];
                if (v == 3) qm3_ |= u64(1) << shift_[i];
                for (std::size_t j = 0; j < ncols_; ++j)
                    if (j != i && (bnum_[i * ncols_ + j] & 1))
                        brow_[i] |= u64(1) << shift_[j];
            }
        }

        col_comp_.resize(ncols_);
        col_class_.resize(ncols_);
        for (std::size_t j = 0; j < ncols_; ++j) {
            col_comp_[j] = glue.component_of_gen(flat0_ + j);
            col_class_[j] = glue.class_of_gen(flat0_ + j);
            if (scale_[j] > 1) {
                const auto& divisors = glue.comp_divisors(col_comp_[j]);
                for (std::size_t r = 0; r < col_class_[j].size(); ++r)
                    col_class_[j][r] = (long)((__int128)col_class_[j][r] * scale_[j] % divisors[r]);
            }
        }
        gn_mask_ = 0;
        for (std::size_t j = 0; j < ncols_; ++j)
            if (glue.has_in_factor() && col_comp_[j] == glue.in_component())
                gn_mask_ |= lanemask_[j];
    }

    static unsigned bits_for(long v) {
        unsigned b = 0;
        while ((1L << b) <= v) ++b;
        return b;
    }

    const GlueGroup& glue() const { return *glue_; }
    std::size_t part_index() const { return pi_; }
    long p() const { return p_; }
    long D() const { return D_; }
    std::size_t ncols() const { return ncols_; }
    long order(std::size_t j) const { return orders_[j]; }
    bool pure_bits() const { return pure_bits_; }
    bool torsion_reduced() const { return torsion_; }
    u64 gn_mask() const { return gn_mask_; }
    u64 value_mask() const { return valuemask_; }
    std::size_t col_component(std::size_t j) const { return col_comp_[j]; }

    long group_order() const {
        long o = 1;
        for (long x : orders_) o *= x;
        return o;
    }
    long valuation() const {  // v with |G| = p^v
        long v = 0, o = group_order();
        while (o % p_ == 0) { o /= p_; ++v; }
        return v;
    }

    unsigned col_shift(std::size_t j) const { return shift_[j]; }
    long get(u64 e, std::size_t j) const {
        return (long)((e & lanemask_[j]) >> shift_[j]);
    }
    u64 with(u64 e, std::size_t j, long v) const {
        return (e & ~lanemask_[j]) | ((u64)v << shift_[j]);
    }

    u64 add(u64 a, u64 b) const {
        if (p_ == 2) return ((a & valuemask_) + (b & valuemask_)) & valuemask_;
        u64 r = 0;
        for (std::size_t j = 0; j < ncols_; ++j) {
            long v = get(a, j) + get(b, j);
            if (v >= orders_[j]) v -= orders_[j];
            r |= (u64)v << shift_[j];
        }
        return r;
    }
    u64 neg(u64 a) const {
        if (p_ == 2) return ((~a & valuemask_) + low1_) & valuemask_;
        u64 r = 0;
        for (std::size_t j = 0; j < ncols_; ++j) {
            long v = get(a, j);
            if (v) v = orders_[j] - v;
            r |= (u64)v << shift_[j];
        }
        return r;
    }
    long element_order(u64 a) const {
        long o = 1;
        for (std::size_t j = 0; j < ncols_; ++j) {
            long v = get(a, j);
            if (!v) continue;
            long d = orders_[j];
            long g = std::gcd(v, d);
            o = std::lcm(o, d / g);
        }
        return o;
    }

    // D * q(x) mod 2D
    long q_num(u64 x) const {
        if (pure_bits_) {
            long acc = std::popcount(x & qm1_) + 2 * std::popcount(x & qm2_) +
                       3 * std::popcount(x & qm3_);
            u64 y = x;
            while (y) {
                unsigned i = (unsigned)std::countr_zero(y);
                y &= y - 1;
                acc += 2 * std::popcount(brow_[i / 2] & y);
            }
            return acc & 3;
        }
        long acc = 0;
        for (std::size_t i = 0; i < ncols_; ++i) {
            long xi = get(x, i);
            if (!xi) continue;
            acc = (acc + xi * xi % (2 * D_) * qnum_[i]) % (2 * D_);
            for (std::size_t j = i + 1; j < ncols_; ++j) {
                long xj = get(x, j);
                if (!xj) continue;
                acc = (acc + 2 * xi * xj % (2 * D_) * bnum_[i * ncols_ + j]) % (2 * D_);
            }
        }
        return acc;
    }
    bool q_zero(u64 x) const { return q_num(x) == 0; }

    std::vector<long> b_weights(u64 x) const {
        std::vector<long> t(ncols_, 0);
        for (std::size_t j = 0; j < ncols_; ++j) {
            long acc = 0;
            for (std::size_t i = 0; i < ncols_; ++i) {
                long xi = get(x, i);
                if (xi) acc = (acc + xi * bnum_[i * ncols_ + j]) % D_;
            }
            t[j] = acc;
        }
        return t;
    }
    long b_dot(const std::vector<long>& t, u64 y) const {
        long acc = 0;
        for (std::size_t j = 0; j < ncols_; ++j) {
            long yj = get(y, j);
            if (yj) acc = (acc + yj * t[j]) % D_;
        }
        return acc;
    }
    u64 b_mask(u64 x) const {
        assert(pure_bits_);
        u64 m = 0;
        for (std::size_t j = 0; j < ncols_; ++j) {
            long acc = 0;
            for (std::size_t i = 0; i < ncols_; ++i)
                if (get(x, i)) acc ^= bnum_[i * ncols_ + j];
            if (acc & 1) m |= u64(1) << shift_[j];
        }
        return m;
    }

    Fqm::Elem to_elem(u64 x) const {
        Fqm::Elem e(glue_->fqm().gen_count(), 0);
        for (std::size_t j = 0; j < ncols_; ++j) e[flat0_ + j] = get(x, j) * scale_[j];
        return e;
    }
    u64 from_elem(const Fqm::Elem& e) const {
        u64 x = 0;
        for (std::size_t j = 0; j < ncols_; ++j) {
            long full = orders_[j] * scale_[j];
            long v = e[flat0_ + j] % full;
            if (v < 0) v += full;
            assert(v % scale_[j] == 0);
            x |= (u64)(v / scale_[j]) << shift_[j];
        }
        return x;
    }

    // residue contribution of a part element to every component class
    std::vector<std::vector<long>> class_contrib(u64 x) const {
        std::size_t nc = glue_->component_count() + (glue_->has_in_factor() ? 1 : 0);
        std::vector<std::vector<long>> res(nc);
        for (std::size_t c = 0; c < nc; ++c) res[c].assign(glue_->comp_divisors(c).size(), 0);
        for (std::size_t j = 0; j < ncols_; ++j) {
            long xj = get(x, j);
            if (!xj) continue;
            std::size_t c = col_comp_[j];
            const auto& divisors = glue_->comp_divisors(c);
            for (std::size_t r = 0; r < divisors.size(); ++r)
                res[c][r] = (res[c][r] + xj * col_class_[j][r]) % divisors[r];
        }
        return res;
    }

private:
    const GlueGroup* glue_ = nullptr;
    std::size_t pi_ = 0;
    bool torsion_ = false;
    std::vector<long> scale_;
    long p_ = 2;
    long D_ = 1;
    std::size_t ncols_ = 0;
    std::size_t flat0_ = 0;
    std::vector<long> orders_;
    std::vector<unsigned> shift_, width_;
    std::vector<u64> lanemask_;
    u64 valuemask_ = 0, low1_ = 0, gn_mask_ = 0;
    std::vector<long> qnum_, bnum_;
    bool pure_bits_ = false;
    std::vector<std::size_t> col_comp_;
    std::vector<std::vector<long>> col_class_;
    u64 qm1_ = 0, qm2_ = 0, qm3_ = 0;
    std::vector<u64> brow_;
};

// ---------------------------------------------------------------------------
// Canonical key of a subgroup under block symmetry

struct SymBlock {
    std::size_t comp;
    std::vector<std::size_t> cols;
    bool negatable = false;
    bool swappable = false;  // D_even spinor swap (two columns)
    long cls = -1;           // interchange class; -1 = fixed
};

struct OrbitKey {
    u64 a = 0, b = 0;
    bool operator==(const OrbitKey&) const = default;
};
struct OrbitKeyHash {
    std::size_t operator()(const OrbitKey& k) const { return (std::size_t)(k.a ^ (k.b * 0x9e3779b97f4a7c15ull)); }
};

// Ordered-partition backtracking: blocks are assigned to canonical slots
// class by class; at each step the candidates with the best split signature
// survive, branches refining the partition identically are merged, and the
// final relabeled element list is hashed into a 128-bit key.  If the tie
// budget is exceeded, the key of the unrelabeled subgroup is returned
// (flagged), which keeps the search correct and merely costs duplicates.
class Canonizer {
public:
    Canonizer(const PartContext& ctx, std::vector<SymBlock> blocks, std::size_t branch_budget = 512)
        : ctx_(&ctx), blocks_(std::move(blocks)), budget_(branch_budget) {
        nblocks_ = blocks_.size();
        for (std::size_t b = 0; b < nblocks_; ++b) {
            long radix = 1;
            for (std::size_t col : blocks_[b].cols) radix *= ctx_->order(col);
            radix_.push_back(radix);
            arrs_.push_back(arrangements(blocks_[b]));
        }
        std::vector<std::size_t> fixed;
        std::map<long, std::vector<std::size_t>> by_cls;
        for (std::size_t b = 0; b < nblocks_; ++b) {
            if (blocks_[b].cls < 0) fixed.push_back(b);
            else by_cls[blocks_[b].cls].push_back(b);
        }
        for (std::size_t b : fixed) plan_.push_back({false, {b}});
        for (auto& [cls, list] : by_cls)
            for (std::size_t i = 0; i < list.size(); ++i) plan_.push_back({true, list});
    }

    mutable std::uint64_t cap_hits = 0;

    OrbitKey key(const std::vector<u64>& elements) const {
        std::size_t n = elements.size();
        val_.assign(nblocks_ * n, 0);
        for (std::size_t b = 0; b < nblocks_; ++b)
            for (std::size_t i = 0; i < n; ++i)
                val_[b * n + i] = (std::uint16_t)raw_value(elements[i], b);

        std::vector<Branch> live(1);
        live[0].order.resize(n);
        for (std::size_t i = 0; i < n; ++i) live[0].order[i] = (std::uint16_t)i;
        live[0].gid.assign(n, 0);
        live[0].used.assign(nblocks_, 0);
        live[0].outvals.assign(n, 0);

        std::vector<int> best, sig;
        struct Kept {
            std::size_t branch, block, arr;
            u64 split_hash;
        };
        std::vector<Kept> keep;
        std::size_t work = 0;
        for (const auto& [classed, cand_blocks] : plan_) {
            best.clear();
            keep.clear();
            for (std::size_t bi = 0; bi < live.size(); ++bi) {
                const Branch& br = live[bi];
                for (std::size_t b : cand_blocks) {
                    if (classed && br.used[b]) continue;
                    for (std::size_t a = 0; a < arrs_[b].size(); ++a) {
                        u64 sh = signature(br, b, a, n, sig);
                        if (++work > 200000) {
                            ++cap_hits;
                            return fallback(elements);
                        }
                        int cmp = best.empty() ? -1 : (sig < best ? -1 : sig == best ? 0 : 1);
                        if (cmp < 0) {
                            best = sig;
                            keep.clear();
                        }
                        if (cmp <= 0) {
                            // candidates inducing the same split on the same
                            // branch lead to identical refinements: keep one
                            bool dup = false;
                            for (const auto& k : keep)
                                if (k.branch == bi && k.split_hash == sh) { dup = true; break; }
                            if (!dup) keep.push_back({bi, b, a, sh});
                        }
                    }
                }
            }
            if (keep.empty()) return fallback(elements);
            std::vector<Branch> next;
            std::unordered_set<u64> seen_states;
            for (auto& k : keep) {
                Branch nb = live[k.branch];
                refine(nb, k.block, k.arr, n);
                nb.used[k.block] = 1;
                u64 h = state_hash(nb);
                if (!seen_states.insert(h).second) continue;
                next.push_back(std::move(nb));
                if (next.size() > budget_) {
                    ++cap_hits;
                    return fallback(elements);
                }
            }
            live = std::move(next);
#ifdef SSK3_CANON_DEBUG
            fprintf(stderr, "  slot branches=%zu keep=%zu work=%zu\n", live.size(), keep.size(), work);
#endif
        }
        const Branch& br = live.front();
        std::vector<std::uint32_t> out(br.outvals);
        std::sort(out.begin(), out.end());
        OrbitKey k{0x736b3375ull, 0x6f726269ull};
        for (std::uint32_t v : out) mix(k, v + 1);
        return k;
    }

private:
    struct Branch {
        std::vector<std::uint16_t> order;    // element indices, groups contiguous
        std::vector<std::uint16_t> gid;      // group id per position
        std::vector<std::uint8_t> used;      // block assigned?
        std::vector<std::uint32_t> outvals;  // canonical value prefix per position
    };

    struct Arrangement {
        std::vector<std::uint16_t> remap;  // value -> arranged value
    };

    static void mix(OrbitKey& k, u64 v) {
        k.a ^= v + 0x9e3779b97f4a7c15ull + (k.a << 6) + (k.a >> 2);
        k.b = (k.b ^ v) * 0x100000001b3ull;
        k.b ^= k.b >> 29;
    }

    OrbitKey fallback(const std::vector<u64>& elements) const {
        std::vector<u64> s(elements);
        std::sort(s.begin(), s.end());
        OrbitKey k{0xfa11ba5eull, 0x5eed5eedull};
        for (u64 v : s) mix(k, v + 1);
        return k;
    }

    long raw_value(u64 e, std::size_t b) const {
        const SymBlock& blk = blocks_[b];
        long v = 0;
        for (std::size_t col : blk.cols) v = v * ctx_->order(col) + ctx_->get(e, col);
        return v;
    }

    std::vector<Arrangement> arrangements(const SymBlock& b) const {
        std::vector<Arrangement> out;
        long radix = 1;
        for (std::size_t col : b.cols) radix *= ctx_->order(col);
        auto make = [&](bool swap, bool negate) {
            Arrangement a;
            a.remap.resize((std::size_t)radix);
            for (long v = 0; v < radix; ++v) {
                std::vector<long> x(b.cols.size());
                long t = v;
                for (std::size_t k = b.cols.size(); k-- > 0;) {
                    x[k] = t % ctx_->order(b.cols[k]);
                    t /= ctx_->order(b.cols[k]);
                }
                if (swap && b.cols.size() == 2) std::swap(x[0], x[1]);
                if (negate)
                    for (std::size_t k = 0; k < b.cols.size(); ++k)
                        if (x[k]) x[k] = ctx_->order(b.cols[k]) - x[k];
                long w = 0;
                for (std::size_t k = 0; k < b.cols.size(); ++k)
                    w = w * ctx_->order(b.cols[k]) + x[k];
                a.remap[(std::size_t)v] = (std::uint16_t)w;
            }
            return a;
        };
        out.push_back(make(false, false));
        if (b.swappable) out.push_back(make(true, false));
        if (b.negatable) {
            out.push_back(make(false, true));
            if (b.swappable) out.push_back(make(true, true));
        }
        return out;
    }

    // fills `sig` (negated counts per group and value) and returns a hash of
    // the induced split (the value sequence in element-position order)
    u64 signature(const Branch& br, std::size_t b, std::size_t a, std::size_t n,
                  std::vector<int>& sig) const {
        long radix = radix_[b];
        std::size_t ngroups = n ? (std::size_t)br.gid[n - 1] + 1 : 0;
        sig.assign(ngroups * (std::size_t)radix, 0);
        const auto& remap = arrs_[b][a].remap;
        u64 h = 0xcbf29ce484222325ull;
        for (std::size_t pos = 0; pos < n; ++pos) {
            std::uint16_t idx = br.order[pos];
            long v = remap[(std::size_t)val_[b * n + idx]];
            --sig[br.gid[pos] * (std::size_t)radix + (std::size_t)v];  // negated counts
            h = (h ^ (u64)v) * 0x100000001b3ull;
        }
        return h;
    }

    static u64 state_hash(const Branch& br) {
        u64 h = 0x9e3779b97f4a7c15ull;
        for (std::size_t i = 0; i < br.order.size(); ++i) {
            h = (h ^ br.order[i]) * 0x100000001b3ull;
            h = (h ^ br.gid[i]) * 0x100000001b3ull;
            h = (h ^ br.outvals[i]) * 0x100000001b3ull;
        }
        return h;
    }

    void refine(Branch& br, std::size_t b, std::size_t a, std::size_t n) const {
        const auto& remap = arrs_[b][a].remap;
        long radix = radix_[b];
        std::vector<std::uint32_t> byidx(n);
        for (std::size_t k = 0; k < n; ++k) byidx[br.order[k]] = br.outvals[k];
        std::vector<std::uint16_t> norder;
        std::vector<std::uint16_t> ngid;
        norder.reserve(n);
        ngid.reserve(n);
        std::vector<std::vector<std::uint16_t>> buckets((std::size_t)radix);
        std::size_t pos = 0;
        std::uint16_t next_gid = 0;
        while (pos < n) {
            std::size_t end = pos;
            while (end < n && br.gid[end] == br.gid[pos]) ++end;
            for (auto& bk : buckets) bk.clear();
            for (std::size_t k = pos; k < end; ++k) {
                std::uint16_t idx = br.order[k];
                long v = remap[(std::size_t)val_[b * n + idx]];
                buckets[(std::size_t)v].push_back(idx);
            }
            for (long v = 0; v < radix; ++v) {
                if (buckets[(std::size_t)v].empty()) continue;
                for (std::uint16_t idx : buckets[(std::size_t)v]) {
                    norder.push_back(idx);
                    ngid.push_back(next_gid);
                }
                ++next_gid;
            }
            pos = end;
        }
        br.order = std::move(norder);
        br.gid = std::move(ngid);
        br.outvals.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            std::uint16_t idx = br.order[k];
            long v = remap[(std::size_t)val_[b * n + idx]];
            br.outvals[k] = byidx[idx] * (std::uint32_t)radix + (std::uint32_t)v;
        }
    }

    const PartContext* ctx_;
    std::vector<SymBlock> blocks_;
    std::size_t nblocks_ = 0;
    std::vector<long> radix_;
    std::vector<std::vector<Arrangement>> arrs_;
    std::vector<std::pair<bool, std::vector<std::size_t>>> plan_;
    std::size_t budget_;
    mutable std::uint64_t cap_hits_dummy_ = 0;
    mutable std::vector<std::uint16_t> val_;
};

// ---------------------------------------------------------------------------
// The subgroup search on one prime part

struct SearchLimits {
    std::uint64_t node_budget = 200'000'000;
    double time_budget_s = 0;  // 0 = unlimited
};

struct SearchStats {
    std::uint64_t nodes = 0;
    std::uint64_t canon_calls = 0;
    std::uint64_t canon_cap_hits = 0;
    bool budget_exceeded = false;
};

class PartSearch {
public:
    struct Node {
        std::vector<u64> gens;
        std::vector<u64> elements;  // full span, sorted
        long order = 1;
        long dim = 0;  // log_p(order)
    };

    using Report = std::function<bool(const Node&)>;
    // additional rank (in p-adic length) still worth pursuing below a node;
    // return 0 to cut the subtree, a negative value for "no limit"
    using NeedExtra = std::function<long(const Node&)>;

    // dedup_leaves: keep orbit deduplication for nodes at the maximal order
    // (needed when the caller collects them into a list; reporting-only
    // searches can skip it because duplicate reports are idempotent)
    bool dedup_leaves = true;

    PartSearch(const PartContext& ctx, std::vector<SymBlock> blocks,
               const std::unordered_set<u64>& forbidden, long max_order,
               SearchLimits limits)
        : ctx_(ctx), blocks_(blocks), canon_(ctx, std::move(blocks)), forbidden_(forbidden),
          max_order_(max_order), limits_(limits) {
        // interchangeable single-column blocks, by class
        for (std::size_t b = 0; b < blocks_.size(); ++b)
            if (blocks_[b].cls >= 0 && blocks_[b].cols.size() == 1)
                cls_cols_[blocks_[b].cls].push_back(blocks_[b].cols[0]);
        if (ctx_.pure_bits()) {
            std::vector<unsigned> shifts(ctx_.ncols());
            for (std::size_t j = 0; j < ctx_.ncols(); ++j) shifts[j] = ctx_.col_shift(j);
            std::vector<char> in_class(ctx_.ncols(), 0);
            std::vector<std::vector<int>> cells;
            for (auto& [cls, cols] : cls_cols_)
                if (cols.size() >= 2) {
                    std::vector<int> cell;
                    for (std::size_t c : cols) {
                        cell.push_back((int)c);
                        in_class[c] = 1;
                    }
                    cells.push_back(std::move(cell));
                }
            for (std::size_t j = 0; j < ctx_.ncols(); ++j)
                if (!in_class[j]) cells.push_back({(int)j});
            bitcanon_.emplace(std::move(shifts), std::move(cells));
        }
    }

    void set_need_extra(NeedExtra f) { need_extra_ = std::move(f); }

    void run(const std::vector<u64>& seed, const Report& report) {
        start_ = std::chrono::steady_clock::now();
        stats_ = {};
        visited_.clear();

        Node root;
        root.elements = {0};
        root.order = 1;
        for (u64 g : seed) {
            if (!extend_elements(root, g)) return;  // seed violates constraints
            root.gens.push_back(g);
        }
        root.dim = vp(root.order);

        std::vector<u64> cands = initial_candidates(root);
        visited_.insert(orbit_key_of(root.elements));
        dfs(root, cands, report);
        stats_.canon_cap_hits = canon_.cap_hits + (bitcanon_ ? bitcanon_->cap_hits : 0);
    }

    const SearchStats& stats() const { return stats_; }

private:
    long vp(long o) const {
        long v = 0;
        while (o % ctx_.p() == 0) { o /= ctx_.p(); ++v; }
        return v;
    }

    bool class_ok(u64 e) const {
        if (e == 0) return true;
        u64 gn = ctx_.gn_mask();
        if ((e & ~gn) == 0) return false;  // nonzero element of G_n
        if ((e & gn) != 0) return true;    // not a class of G_R x {0}
        return !forbidden_.count(e);
    }

    bool extend_elements(Node& node, u64 g) const {
        long k = ctx_.element_order(g);
        std::vector<u64> add;
        u64 m = 0;
        for (long i = 1; i < k; ++i) {
            m = ctx_.add(m, g);
            for (u64 s : node.elements) {
                u64 e = ctx_.add(m, s);
                if (!class_ok(e)) return false;
                add.push_back(e);
            }
        }
        node.elements.insert(node.elements.end(), add.begin(), add.end());
        std::sort(node.elements.begin(), node.elements.end());
        node.elements.erase(std::unique(node.elements.begin(), node.elements.end()),
                            node.elements.end());
        node.order = (long)node.elements.size();
        node.dim = vp(node.order);
        return true;
    }

    std::vector<u64> initial_candidates(const Node& root) const {
        std::vector<u64> out;
        std::unordered_set<u64> in_root(root.elements.begin(), root.elements.end());
        std::vector<std::vector<long>> gw;
        std::vector<u64> gm;
        for (u64 g : root.gens) {
            if (ctx_.pure_bits()) gm.push_back(ctx_.b_mask(g));
            else gw.push_back(ctx_.b_weights(g));
        }
        auto consider = [&](u64 e) {
            if (in_root.count(e)) return;
            if (!ctx_.q_zero(e)) return;
            if (!class_ok(e)) return;
            for (u64 m : gm)
                if (std::popcount(e & m) & 1) return;
            for (const auto& t : gw)
                if (ctx_.b_dot(t, e) != 0) return;
            out.push_back(e);
        };
        if (ctx_.p() == 2) {
            u64 vm = ctx_.value_mask();
            u64 e = 0;
            do {
                e = (e - vm) & vm;  // next subset of the value mask
                if (e) consider(e);
            } while (e);
        } else {
            u64 e = 0;
            while (true) {
                std::size_t j = 0;
                while (j < ctx_.ncols()) {
                    long v = ctx_.get(e, j) + 1;
                    if (v < ctx_.order(j)) { e = ctx_.with(e, j, v); break; }
                    e = ctx_.with(e, j, 0);
                    ++j;
                }
                if (j == ctx_.ncols()) break;
                consider(e);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    bool budget_left() {
        if (limits_.node_budget && stats_.nodes >= limits_.node_budget) {
            stats_.budget_exceeded = true;
            return false;
        }
        if (limits_.time_budget_s > 0 && (stats_.nodes & 0xff) == 0) {
            auto now = std::chrono::steady_clock::now();
            if (std::chrono::duration<double>(now - start_).count() > limits_.time_budget_s) {
                stats_.budget_exceeded = true;
                return false;
            }
        }
        return true;
    }

    // rank over F_2 of the candidates modulo the node span (pure bits only),
    // capped at `need`; used to cut subtrees that cannot reach any useful
    // dimension anymore
    long candidate_rank(const Node& node, const std::vector<u64>& cands, long need) const {
        std::vector<u64> basis;
        for (u64 g : node.elements) {
            u64 v = g;
            for (u64 b : basis)
                v = std::min(v, v ^ b);
            if (v) basis.push_back(v), std::sort(basis.rbegin(), basis.rend());
        }
        std::size_t base = basis.size();
        long rank = 0;
        for (u64 y : cands) {
            u64 v = y;
            for (u64 b : basis) v = std::min(v, v ^ b);
            if (v) {
                basis.push_back(v);
                std::sort(basis.rbegin(), basis.rend());
                if (++rank >= need) return rank;
            }
        }
        (void)base;
        return rank;
    }

    bool dfs(const Node& node, const std::vector<u64>& cands, const Report& report) {
        ++stats_.nodes;
#ifdef SSK3_SEARCH_TRACE
        if ((stats_.nodes & 0xff) == 0)
            fprintf(stderr, "[trace] nodes=%llu canon=%llu dim=%ld cands=%zu visited=%zu\n",
                    (unsigned long long)stats_.nodes, (unsigned long long)stats_.canon_calls,
                    node.dim, cands.size(), visited_.size());
#endif
        if (!report(node)) return false;
        if (!budget_left()) return false;
        if (cands.empty()) return true;

        if (need_extra_) {
            long need = need_extra_(node);
            if (need == 0) return true;
            if (need > 0 && ctx_.pure_bits() && candidate_rank(node, cands, need) < need)
                return true;
        }

        // Columns of one interchange class that are equal as functions on the
        // node's elements can be permuted freely by an automorphism fixing
        // every element of S, so candidates differing only by such a
        // permutation give equivalent children: collapse them.  The orbit key
        // packs the per-class popcount into the class's own bit lanes.
        std::vector<u64> profile_class_masks;
        u64 all_class_bits = 0;
        if (ctx_.pure_bits()) {
            for (const auto& [cls, cols] : cls_cols_) {
                if (cols.size() < 2) continue;
                std::map<u64, std::vector<std::size_t>> by_profile;
                for (std::size_t col : cols) {
                    u64 h = 0xcbf29ce484222325ull;
                    for (u64 e : node.elements) {
                        h ^= (u64)ctx_.get(e, col);
                        h *= 0x100000001b3ull;
                    }
                    by_profile[h].push_back(col);
                }
                for (auto& [h, cl] : by_profile) {
                    if (cl.size() < 2) continue;
                    u64 m = 0;
                    for (std::size_t col : cl) m |= ctx_.with(0, col, 1);
                    profile_class_masks.push_back(m);
                    all_class_bits |= m;
                }
            }
        }
        auto orbit_key = [&](u64 x) {
            u64 key = x & ~all_class_bits;
            for (u64 m : profile_class_masks) {
                int cnt = std::popcount(x & m);
                // spread `cnt` into the lowest bits of the class mask
                u64 mm = m;
                while (cnt > 0) {
                    u64 bit = mm & (~mm + 1);
                    if (cnt & 1) key |= bit;
                    cnt >>= 1;
                    mm &= mm - 1;
                }
            }
            return key;
        };
        std::unordered_set<u64> orbit_seen;

        std::unordered_set<u64> tried;
        tried.reserve(cands.size() / 4 + 8);

        bool pure = ctx_.pure_bits();
        bool room2 = node.order <= max_order_ / 2;
        for (u64 x : cands) {
            if (pure) {
                if (!room2) break;  // every candidate has order 2
            } else if (node.order > max_order_ / ctx_.element_order(x)) {
                continue;
            }
            if (tried.count(x)) continue;
            if (!profile_class_masks.empty() && !orbit_seen.insert(orbit_key(x)).second)
                continue;
            if (!budget_left()) return false;

            Node child = node;
            if (!extend_elements(child, x)) {
                tried.insert(x);
                continue;
            }
            child.gens.push_back(x);
            long k = ctx_.element_order(x);
            u64 m = 0;
            for (long i = 1; i < k; ++i) {
                m = ctx_.add(m, x);
                if (std::gcd(i, (long)ctx_.p()) != 1) continue;
                for (u64 s : node.elements) tried.insert(ctx_.add(m, s));
            }

            // a child that cannot be extended any further is a leaf: skip the
            // canonical bookkeeping and the candidate filtering entirely
            if (!dedup_leaves && child.order > max_order_ / ctx_.p()) {
                std::vector<u64> none;
                if (!dfs(child, none, report)) return false;
                continue;
            }

            ++stats_.canon_calls;
#ifdef SSK3_SEARCH_TRACE
            if ((stats_.canon_calls & 0x3fff) == 0)
                fprintf(stderr, "[trace] canon=%llu nodes=%llu dim=%ld |S|=%ld cands=%zu orbitclasses=%zu\n",
                        (unsigned long long)stats_.canon_calls, (unsigned long long)stats_.nodes,
                        node.dim, node.order, cands.size(), profile_class_masks.size());
#endif
            if (!visited_.insert(orbit_key_of(child.elements)).second) continue;

            std::vector<u64> sub;
            sub.reserve(cands.size() / 2);
            auto in_child = [&](u64 y) {
                return std::binary_search(child.elements.begin(), child.elements.end(), y);
            };
            if (pure) {
                u64 bm = ctx_.b_mask(x);
                for (u64 y : cands) {
                    if (std::popcount(y & bm) & 1) continue;
                    if (in_child(y)) continue;
                    sub.push_back(y);
                }
            } else {
                auto t = ctx_.b_weights(x);
                for (u64 y : cands) {
                    if (ctx_.b_dot(t, y) != 0) continue;
                    if (in_child(y)) continue;
                    sub.push_back(y);
                }
            }
            if (!dfs(child, sub, report)) return false;
        }
        return true;
    }

    OrbitKey orbit_key_of(const std::vector<u64>& elements) const {
        if (bitcanon_) {
            auto [a, b] = bitcanon_->key(elements);
            return OrbitKey{a, b};
        }
        return canon_.key(elements);
    }

    const PartContext& ctx_;
    std::vector<SymBlock> blocks_;
    std::map<long, std::vector<std::size_t>> cls_cols_;
    Canonizer canon_;
    std::optional<BitCanonizer> bitcanon_;
    const std::unordered_set<u64>& forbidden_;
    long max_order_;
    SearchLimits limits_;
    SearchStats stats_;
    NeedExtra need_extra_;
    std::unordered_set<OrbitKey, OrbitKeyHash> visited_;
    std::chrono::steady_clock::time_point start_;
};

// true when some isotropic element has order above p, so the search cannot
// be confined to the p-torsion subgroup
inline bool has_isotropic_beyond_torsion(const PartContext& ctx) {
    bool nonelementary = false;
    for (std::size_t j = 0; j < ctx.ncols(); ++j)
        if (ctx.order(j) != ctx.p()) nonelementary = true;
    if (!nonelementary) return false;
    if (ctx.p() == 2) {
        u64 vm = ctx.value_mask();
        u64 e = 0;
        do {
            e = (e - vm) & vm;
            if (e && ctx.element_order(e) > 2 && ctx.q_zero(e)) return true;
        } while (e);
        return false;
    }
    u64 e = 0;
    while (true) {
        std::size_t j = 0;
        while (j < ctx.ncols()) {
            long v = ctx.get(e, j) + 1;
            if (v < ctx.order(j)) { e = ctx.with(e, j, v); break; }
            e = ctx.with(e, j, 0);
            ++j;
        }
        if (j == ctx.ncols()) break;
        if (ctx.element_order(e) > ctx.p() && ctx.q_zero(e)) return true;
    }
    return false;
}

// forbidden elements of one part: nonzero classes of G_R x {0} reachable by
// part elements whose coset norm menus can sum to exactly -2
inline std::unordered_set<u64> forbidden_root_elements(const PartContext& ctx) {
    const GlueGroup& glue = ctx.glue();
    std::unordered_set<u64> out;
    std::size_t ncomp = glue.component_count();

    std::vector<std::vector<std::size_t>> comp_cols(ncomp + 1);
    for (std::size_t j = 0; j < ctx.ncols(); ++j) comp_cols[ctx.col_component(j)].push_back(j);

    struct Choice {
        u64 bits;
        const std::vector<CosetEntry>* menu;
    };
    std::vector<std::vector<Choice>> choices(ncomp);
    for (std::size_t c = 0; c < ncomp; ++c) {
        const auto& cols = comp_cols[c];
        if (cols.empty()) continue;
        const auto& table = coset_vector_table(glue.components()[c]);
        std::vector<long> val(cols.size(), 0);
        while (true) {
            std::size_t j = 0;
            while (j < cols.size()) {
                if (++val[j] < ctx.order(cols[j])) break;
                val[j++] = 0;
            }
            if (j == cols.size()) break;
            u64 bits = 0;
            std::vector<long> residues(table.divisors.size(), 0);
            for (std::size_t k = 0; k < cols.size(); ++k) {
                bits = ctx.with(bits, cols[k], val[k]);
                if (!val[k]) continue;
                const auto& cls = glue.class_of_gen(glue.fqm().part_offset(ctx.part_index()) + cols[k]);
                for (std::size_t r = 0; r < table.divisors.size(); ++r)
                    residues[r] = (residues[r] + val[k] * cls[r]) % table.divisors[r];
            }
            std::size_t key = table.key(residues);
            if (key == 0) continue;
            const auto& menu = table.cosets[key];
            bool any = false;
            for (const auto& e : menu)
                if (e.norm < Rat(0) && e.norm >= Rat(-2)) any = true;
            if (any) choices[c].push_back({bits, &table.cosets[key]});
        }
    }

    auto rec = [&](auto&& self, std::size_t c, Rat rem, u64 acc) -> void {
        if (c == ncomp) {
            if (rem == Rat(0) && acc) out.insert(acc);
            return;
        }
        self(self, c + 1, rem, acc);
        if (rem == Rat(0)) return;
        for (const auto& ch : choices[c])
            for (const auto& e : *ch.menu) {
                if (e.norm >= Rat(0) || e.norm < rem) continue;
                self(self, c + 1, Rat(rem - e.norm), ctx.add(acc, ch.bits));
            }
    };
    rec(rec, 0, Rat(-2), 0);
    return out;
}

}  // namespace ssk3
