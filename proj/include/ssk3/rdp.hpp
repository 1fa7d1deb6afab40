#pragma once

// The classification pipeline for configurations of rank 21:
//   * candidate triples [R, n, p] from the finiteness bound NP(R),
//   * the three pruning lemmas (p-power polarization, the 3-part and the
//     7-part obstructions),
//   * the per-candidate search (algorithm II): split P_R into A = {p} and
//     B = rest, enumerate maximal isotropic parts for B, sigma-graded parts
//     for A, cross and check the glued conditions,
//   * re-verification of stored witnesses from scratch.

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <set>

#include "ssk3/glue.hpp"
#include "ssk3/search.hpp"
#include "ssk3/symmetry.hpp"

namespace ssk3 {

// ---------------------------------------------------------------------------
// ADE types of a given rank

inline void ade_types_rec(int rank_left, int max_kind, std::map<Symbol, int>& acc,
                          std::vector<AdeType>& out) {
    // symbols indexed in canonical (descending) order:
    // 0..2 = E8,E7,E6; 3.. = D_rank..D4; then A_rank..A1
    if (rank_left == 0) {
        out.push_back(AdeType(acc));
        return;
    }
    for (int k = max_kind;; ++k) {
        Symbol s;
        if (k == 0) s = {'E', 8};
        else if (k == 1) s = {'E', 7};
        else if (k == 2) s = {'E', 6};
        else if (k < 21) s = {'D', 24 - k};  // k=3 -> D21 ... k=20 -> D4
        else if (k < 42) s = {'A', 42 - k};  // k=21 -> A21 ... k=41 -> A1
        else break;
        if (!s.valid() || s.rank() > rank_left) continue;
        acc[s] += 1;
        ade_types_rec(rank_left - s.rank(), k, acc, out);
        if (--acc[s] == 0) acc.erase(s);
    }
}

inline std::vector<AdeType> ade_types_of_rank(int rank) {
    std::vector<AdeType> out;
    std::map<Symbol, int> acc;
    ade_types_rec(rank, 0, acc, out);
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// N_R, |G_R| and the finiteness bound

inline long n_of_symbol(const Symbol& s) {
    if (s.kind == 'A') return s.index % 2 == 0 ? s.index + 1 : 2 * (s.index + 1);
    if (s.kind == 'D') {
        if (s.index % 2 == 1) return 8;
        return s.index % 4 == 0 ? 2 : 4;
    }
    return s.index == 6 ? 3 : s.index == 7 ? 4 : 1;
}

inline long disc_order_of_symbol(const Symbol& s) {
    if (s.kind == 'A') return s.index + 1;
    if (s.kind == 'D') return 4;
    return s.index == 6 ? 3 : s.index == 7 ? 2 : 1;
}

inline long N_R(const AdeType& r) {
    long n = 1;
    for (auto& [s, c] : r.parts()) n = std::lcm(n, n_of_symbol(s));
    return n;
}

inline long disc_order(const AdeType& r) {
    long d = 1;
    for (auto& [s, c] : r.parts())
        for (int i = 0; i < c; ++i) d *= disc_order_of_symbol(s);
    return d;
}

inline std::vector<long> prime_factors(long n) {
    std::vector<long> ps;
    for (long p = 2; p * p <= n; ++p)
        if (n % p == 0) {
            ps.push_back(p);
            while (n % p == 0) n /= p;
        }
    if (n > 1) ps.push_back(n);
    return ps;
}

inline long ord_p(long n, long p) {
    long v = 0;
    while (n % p == 0) { n /= p; ++v; }
    return v;
}

inline bool is_square(long n) {
    if (n < 0) return false;
    long r = (long)std::sqrt((double)n);
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r * r == n;
}

inline std::vector<long> divisors_of(long n) {
    std::vector<long> d{1};
    for (long p : prime_factors(n)) {
        long v = ord_p(n, p);
        std::size_t sz = d.size();
        long pk = 1;
        for (long k = 1; k <= v; ++k) {
            pk *= p;
            for (std::size_t i = 0; i < sz; ++i) d.push_back(d[i] * pk);
        }
    }
    return d;
}

// NP(R) = { (n,p) : p | |G_R|, 2n | N_R p^2, p^2 | n|G_R|, sqrt(n|G_R|) in Z }
inline std::vector<std::pair<long, long>> np_set(const AdeType& r) {
    long g = disc_order(r);
    long nr = N_R(r);
    std::vector<std::pair<long, long>> out;
    for (long p : prime_factors(g)) {
        for (long d : divisors_of(nr * p * p)) {
            if (d % 2) continue;  // d = 2n
            long n = d / 2;
            if (n % 2) continue;  // n must be even
            if ((n * g) % (p * p) != 0) continue;
            if (!is_square(n * g)) continue;
            out.push_back({n, p});
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

struct RdpCandidate {
    AdeType R;
    long n;
    long p;
    friend bool operator<(const RdpCandidate& a, const RdpCandidate& b) {
        if (a.p != b.p) return a.p > b.p;  // table order: p descending
        if (!(a.R == b.R)) return a.R < b.R;
        return a.n < b.n;
    }
};

struct CandidateLists {
    std::vector<RdpCandidate> triples;            // script R
    std::vector<std::pair<AdeType, long>> pairs;  // script R-bar
};

inline CandidateLists build_candidates() {
    CandidateLists out;
    for (const AdeType& r : ade_types_of_rank(21)) {
        std::set<long> ns;
        for (auto [n, p] : np_set(r)) {
            out.triples.push_back({r, n, p});
            ns.insert(n);
        }
        for (long n : ns) out.pairs.push_back({r, n});
    }
    std::sort(out.triples.begin(), out.triples.end());
    return out;
}

// ---------------------------------------------------------------------------
// Pruning lemmas

// exponent of the p-part of G_R: p^mu kills every element
inline long mu_exponent(const AdeType& r, long p) {
    long mu = 0;
    for (auto& [s, c] : r.parts()) {
        long v;
        if (s.kind == 'D' && p == 2)
            v = s.index % 2 == 0 ? 1 : 2;  // (Z/2)^2 or Z/4
        else
            v = ord_p(disc_order_of_symbol(s), p);
        mu = std::max(mu, v);
    }
    return mu;
}

inline bool prune_p_power(const RdpCandidate& c) {
    return ord_p(c.n, c.p) >= mu_exponent(c.R, c.p) + 2;
}

inline bool prune_three(const RdpCandidate& c) {
    if (c.p == 3) return false;
    long g3 = ord_p(disc_order(c.R), 3);
    long n3 = ord_p(c.n, 3);
    int a2 = c.R.multiplicity({'A', 2});
    int a5 = c.R.multiplicity({'A', 5});
    if (g3 == 2 && n3 == 0 && (a2 == 2 || a5 == 2)) return true;
    if (g3 == 1 && n3 == 1) {
        long m = c.n / 3;
        if (m % 6 == 4 && a2 == 1) return true;
        if (m % 6 == 2 && a5 == 1) return true;
    }
    return false;
}

inline bool prune_seven(const RdpCandidate& c) {
    if (c.p == 7) return false;
    return ord_p(disc_order(c.R), 7) == 2 && ord_p(c.n, 7) == 0 &&
           c.R.multiplicity({'A', 6}) == 2;
}

inline bool pruned(const RdpCandidate& c) {
    return prune_p_power(c) || prune_three(c) || prune_seven(c);
}

struct PruneCounts {
    std::size_t removed_triples = 0;
    std::size_t removed_pairs = 0;
    std::vector<RdpCandidate> kept;
};

inline PruneCounts prune(const CandidateLists& lists) {
    PruneCounts pc;
    std::map<std::pair<std::string, long>, std::pair<std::size_t, std::size_t>> pair_counts;
    for (const auto& c : lists.triples) {
        auto& [total, removed] = pair_counts[{c.R.str(), c.n}];
        ++total;
        if (pruned(c)) {
            ++pc.removed_triples;
            ++removed;
        } else {
            pc.kept.push_back(c);
        }
    }
    for (auto& [key, tr] : pair_counts)
        if (tr.first == tr.second) ++pc.removed_pairs;
    return pc;
}

// ---------------------------------------------------------------------------
// Witnesses and condition checking

struct SubgroupWitness {
    std::vector<Fqm::Elem> gens;  // flat residue coordinates in the glue Fqm
};

// The four realizability conditions for an isotropic subgroup, checked from
// scratch (matrix route, independent of the search's incremental tests).
inline bool check_conditions(const GlueGroup& glue, const FqmSubgroup& s, long p, int sigma,
                             std::string* why = nullptr) {
    auto fail = [&](const char* msg) {
        if (why) *why = msg;
        return false;
    };
    const Fqm& g = glue.fqm();
    if (!s.is_isotropic(g)) return fail("not isotropic");

    // (1) S-perp / S is p-elementary of order p^(2 sigma)
    FqmSubgroup k = s.orthogonal_complement(g);
    long os = s.order(g), ok = k.order(g);
    long want = 1;
    for (int i = 0; i < 2 * sigma; ++i) want *= p;
    if (ok % os != 0 || ok / os != want) return fail("quotient order mismatch");
    for (const auto& e : k.generator_elems(g)) {
        Fqm::Elem pe(e.size());
        for (std::size_t i = 0; i < e.size(); ++i) pe[i] = e[i] * p;
        if (!s.contains(g, pe)) return fail("quotient not p-elementary");
    }

    auto elements = s.elements(g);

    // (2) S meets G_n trivially
    std::size_t flat0 = 0;
    std::vector<bool> is_gn(g.gen_count(), false);
    for (std::size_t flat = 0; flat < g.gen_count(); ++flat)
        is_gn[flat] = glue.component_of_gen(flat) == glue.in_component();
    for (const auto& e : elements) {
        bool nonzero = false, pure = true;
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (e[i] == 0) continue;
            nonzero = true;
            if (!is_gn[i]) pure = false;
        }
        if (nonzero && pure) return fail("meets G_n");
    }
    (void)flat0;

    // (3) rho condition: no extra roots
    std::vector<Fqm::Elem> s0;
    for (const auto& e : elements) {
        bool gn_zero = true;
        for (std::size_t i = 0; i < e.size(); ++i)
            if (e[i] != 0 && is_gn[i]) gn_zero = false;
        if (gn_zero) s0.push_back(e);
    }
    if (glue.rho(s0) != root_count(glue.type())) return fail("extra roots");

    // (4) p = 2: the overlattice is of type I (and generally: correct disc)
    Overlattice lam = overlattice(g.gram(), g, s);
    Int d = det(lam.gram);
    Int expected = -1;
    for (int i = 0; i < 2 * sigma; ++i) expected *= p;
    if (d != expected) return fail("overlattice disc mismatch");
    if (!is_p_elementary(lam.gram, p)) return fail("overlattice not p-elementary");
    if (p == 2 && !is_type_I(lam.gram)) return fail("not type I");
    return true;
}

// ---------------------------------------------------------------------------
// The per-candidate search (algorithm II with A = {p} by default)

struct CandidateOptions {
    SearchLimits limits;
    std::set<int> sigma_filter;  // empty = all
    bool elliptic_symmetry = false;          // restrict to Aut(Q(R'))
    std::optional<std::size_t> fixed_component;  // the z component (elliptic)
    std::vector<Fqm::Elem> forced;           // elements every subgroup must contain
};

struct CandidateOutcome {
    bool decided = true;
    std::set<int> sigmas;
    std::map<int, SubgroupWitness> witness;
    std::uint64_t nodes = 0;
    double seconds = 0;
};

namespace detail {

// symmetry blocks of one part, honouring the per-prime soundness rule:
// a component move enters this part's group only if it acts trivially on
// every other prime part
inline std::vector<SymBlock> part_blocks(const GlueGroup& glue, const PartContext& ctx,
                                         const CandidateOptions& opt) {
    std::size_t ncomp = glue.component_count();
    std::vector<SymBlock> blocks;
    std::map<std::size_t, std::size_t> comp_block;
    for (std::size_t j = 0; j < ctx.ncols(); ++j) {
        std::size_t c = ctx.col_component(j);
        auto it = comp_block.find(c);
        if (it == comp_block.end()) {
            SymBlock b;
            b.comp = c;
            comp_block[c] = blocks.size();
            blocks.push_back(b);
        }
        blocks[comp_block[c]].cols.push_back(j);
    }
    long p = ctx.p();
    for (auto& b : blocks) {
        bool is_in = glue.has_in_factor() && b.comp == glue.in_component();
        long gx = is_in ? glue.polarization() : disc_order_of_symbol(glue.components()[b.comp]);
        // negation acts trivially on every other prime iff the other prime
        // parts of G_X have exponent <= 2
        bool neg_ok = true;
        for (long q : prime_factors(gx)) {
            if (q == p) continue;
            long exp;
            if (is_in) exp = ord_p(gx, q);  // cyclic
            else if (q == 2 && glue.components()[b.comp].kind == 'D')
                exp = glue.components()[b.comp].index % 2 ? 2 : 1;
            else exp = ord_p(gx, q);
            if (!(q == 2 && exp <= 1)) neg_ok = false;
        }
        if (is_in && opt.elliptic_symmetry) neg_ok = false;
        // negation is trivial when every column has order 2
        bool nontrivial = false;
        for (std::size_t col : b.cols)
            if (ctx.order(col) > 2) nontrivial = true;
        b.negatable = neg_ok && nontrivial;
        if (!is_in && glue.components()[b.comp].kind == 'D' &&
            glue.components()[b.comp].index % 2 == 0 && b.cols.size() == 2)
            b.swappable = true;
        // interchange classes: identical components whose whole discriminant
        // group lives at this prime
        b.cls = -1;
        if (!is_in) {
            const Symbol& s = glue.components()[b.comp];
            bool mono = true;
            for (long q : prime_factors(gx))
                if (q != p) mono = false;
            bool fixed = opt.fixed_component && *opt.fixed_component == b.comp;
            if (mono && !fixed) b.cls = (s.kind == 'A' ? 0 : s.kind == 'D' ? 1000 : 2000) + s.index;
        }
    }
    // classes with a single member behave as fixed
    std::map<long, int> cls_count;
    for (auto& b : blocks)
        if (b.cls >= 0) ++cls_count[b.cls];
    for (auto& b : blocks)
        if (b.cls >= 0 && cls_count[b.cls] < 2) b.cls = -1;
    return blocks;
}

// the characteristic element of a 2-elementary part: b(x,c) = q(x) mod Z
inline std::optional<u64> characteristic_element(const PartContext& ctx) {
    if (!ctx.pure_bits()) return std::nullopt;
    std::size_t n = ctx.ncols();
    // solve B2 c = chi over F_2
    std::vector<u64> rows(n);
    std::vector<int> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        u64 x = ctx.with(0, i, 1);
        rows[i] = ctx.b_mask(x);
        rhs[i] = (int)(ctx.q_num(x) & 1);  // 2q(g_i) mod 2
    }
    // rows[i] has bits at column shifts; convert to plain column masks
    std::vector<u64> m(n, 0);
    std::vector<int> b(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            if (rows[i] & (u64(1) << (2 * j))) m[i] |= u64(1) << j;
        b[i] = rhs[i];
    }
    u64 c = 0;
    std::vector<std::size_t> piv;
    std::vector<u64> red = m;
    std::vector<int> rb = b;
    std::vector<int> pivot_col(n, -1);
    std::size_t rank = 0;
    for (std::size_t col = 0; col < n && rank < n; ++col) {
        std::size_t sel = n;
        for (std::size_t i = rank; i < n; ++i)
            if (red[i] & (u64(1) << col)) { sel = i; break; }
        if (sel == n) continue;
        std::swap(red[rank], red[sel]);
        std::swap(rb[rank], rb[sel]);
        for (std::size_t i = 0; i < n; ++i)
            if (i != rank && (red[i] & (u64(1) << col))) {
                red[i] ^= red[rank];
                rb[i] ^= rb[rank];
            }
        pivot_col[rank] = (int)col;
        ++rank;
    }
    for (std::size_t i = rank; i < n; ++i)
        if (rb[i]) return std::nullopt;  // no solution (degenerate b?)
    for (std::size_t i = 0; i < rank; ++i)
        if (rb[i]) c |= u64(1) << (std::size_t)pivot_col[i];
    // c in packed coordinates
    u64 packed = 0;
    for (std::size_t j = 0; j < n; ++j)
        if (c & (u64(1) << j)) packed = ctx.with(packed, j, 1);
    return packed;
}

struct PartReport {
    std::vector<u64> gens;
    std::vector<u64> elements;
    long order;
};

}  // namespace detail

class CandidateRunner {
public:
    CandidateRunner(const AdeType& R, long n, long p, CandidateOptions opt)
        : R_(R), n_(n), p_(p), opt_(std::move(opt)), glue_(R, n) {}

    const GlueGroup& glue() const { return glue_; }

    // stream of product subgroups passing all four conditions; the callback
    // receives (sigma, generators as flat elements) and returns false to
    // stop the whole run (used by the early-exit logic upstream)
    using Sink = std::function<bool(int sigma, const std::vector<Fqm::Elem>&)>;

    CandidateOutcome run(const Sink& sink) {
        auto t0 = std::chrono::steady_clock::now();
        CandidateOutcome out;
        const Fqm& g = glue_.fqm();

        // prime parts and their contexts; parts whose isotropic elements all
        // lie in the p-torsion are reduced to it
        std::size_t nparts = g.parts().size();
        std::vector<PartContext> ctx;
        for (std::size_t i = 0; i < nparts; ++i) {
            ctx.emplace_back(glue_, i);
            bool nonelementary = false;
            for (std::size_t j = 0; j < ctx.back().ncols(); ++j)
                if (ctx.back().order(j) != g.parts()[i].p) nonelementary = true;
            if (nonelementary && !has_isotropic_beyond_torsion(ctx.back()))
                ctx.back() = PartContext(glue_, i, true);
        }

        std::size_t apart = nparts;
        for (std::size_t i = 0; i < nparts; ++i)
            if (g.parts()[i].p == p_) apart = i;

        // every non-p part must have square order
        for (std::size_t i = 0; i < nparts; ++i) {
            if (i == apart) continue;
            long v = 0, o = ctx[i].group_order();
            while (o % g.parts()[i].p == 0) { o /= g.parts()[i].p; ++v; }
            if (v % 2) {
                finish(out, t0);
                return out;  // decided: nothing realizable
            }
        }
        long va = 0;
        if (apart < nparts) {
            long o = ctx[apart].group_order();
            while (o % p_ == 0) { o /= p_; ++va; }
        }
        if (va < 2 || va % 2) {
            finish(out, t0);
            return out;  // sigma >= 1 impossible
        }

        // B parts: collect maximal isotropic representatives
        std::vector<std::vector<detail::PartReport>> breps(nparts);
        for (std::size_t i = 0; i < nparts; ++i) {
            if (i == apart) continue;
            long target = 1;
            long v = 0, o = ctx[i].group_order();
            long q = g.parts()[i].p;
            while (o % q == 0) { o /= q; ++v; }
            for (long k = 0; k < v / 2; ++k) target *= q;

            auto forb = forbidden_root_elements(ctx[i]);
            PartSearch search(ctx[i], detail::part_blocks(glue_, ctx[i], opt_), forb, target,
                              opt_.limits);
            long vhalf = v / 2;
            search.set_need_extra([vhalf](const PartSearch::Node& node) {
                return vhalf - node.dim;  // must reach the Lagrangian dimension
            });
            std::vector<u64> bseed;
            for (const auto& e : opt_.forced) {
                u64 x = ctx[i].from_elem(e);
                if (x) bseed.push_back(x);
            }
            search.run(bseed, [&](const PartSearch::Node& node) {
                if (node.order == target)
                    breps[i].push_back({node.gens, node.elements, node.order});
                return true;
            });
            out.nodes += search.stats().nodes;
            if (search.stats().budget_exceeded) out.decided = false;
            if (breps[i].empty()) {
                finish(out, t0);
                return out;  // no Lagrangian part: nothing realizable (if decided)
            }
        }

        // B-products with valid mixed classes
        std::vector<std::vector<const detail::PartReport*>> bcombos;
        {
            std::vector<const detail::PartReport*> cur;
            build_bcombos(ctx, apart, breps, 0, cur, bcombos);
        }
        if (bcombos.empty()) {
            finish(out, t0);
            return out;
        }

        // A part search
        int max_sigma = std::min<long>(10, va / 2);
        std::set<int> wanted;
        for (int s = 1; s <= max_sigma; ++s)
            if (opt_.sigma_filter.empty() || opt_.sigma_filter.count(s)) wanted.insert(s);
        if (wanted.empty() || apart == nparts) {
            finish(out, t0);
            return out;
        }

        long max_order = 1;
        for (long k = 0; k < (va - 2) / 2; ++k) max_order *= p_;

        const PartContext& actx = ctx[apart];
        auto forb = forbidden_root_elements(actx);
        std::vector<u64> seed;
        bool c_seeded = false;
        if (p_ == 2 && actx.pure_bits() && !actx.torsion_reduced()) {
            auto c = detail::characteristic_element(actx);
            if (!c) {
                finish(out, t0);
                return out;
            }
            if (*c) {
                seed.push_back(*c);
                c_seeded = true;
            } else {
                c_seeded = true;  // chi = 0: type I automatic
            }
        }
        for (const auto& e : opt_.forced) {
            u64 x = actx.from_elem(e);
            if (x && std::find(seed.begin(), seed.end(), x) == seed.end()) seed.push_back(x);
        }

        bool stopped = false;
        PartSearch search(actx, detail::part_blocks(glue_, actx, opt_), forb, max_order,
                          opt_.limits);
        search.dedup_leaves = false;
        if (!opt_.elliptic_symmetry) {
            // a subtree is only useful while it can still reach the dimension
            // of some missing sigma
            search.set_need_extra([this, va, &out, &wanted](const PartSearch::Node& node) {
                long best = 0;
                for (int sgm : wanted) {
                    if (out.sigmas.count(sgm)) continue;
                    long dim = (va - 2 * sgm) / 2;
                    if (dim > node.dim && (best == 0 || dim - node.dim < best))
                        best = dim - node.dim;
                }
                return best;  // 0: nothing useful below
            });
        }
        search.run(seed, [&](const PartSearch::Node& node) {
            // sigma from the complement within this part
            int sigma = quotient_sigma(actx, node);
            if (sigma < 0) return true;
            if (!opt_.elliptic_symmetry && !wanted.count(sigma)) return true;
            if (opt_.elliptic_symmetry &&
                !(opt_.sigma_filter.empty() || opt_.sigma_filter.count(sigma)))
                return true;
            if (!opt_.elliptic_symmetry && out.sigmas.count(sigma)) return true;
            // cross with the B part
            for (const auto& combo : bcombos) {
                if (!cross_ok(ctx, apart, node, combo)) continue;
                std::vector<Fqm::Elem> gens;
                for (u64 x : node.gens) gens.push_back(actx.to_elem(x));
                std::size_t bi = 0;
                for (std::size_t i = 0; i < ctx.size(); ++i) {
                    if (i == apart) continue;
                    for (u64 x : combo[bi]->gens) gens.push_back(ctx[i].to_elem(x));
                    ++bi;
                }
                // type I for p = 2 (automatic when the part is 2-elementary
                // and the characteristic element is in the seed)
                if (p_ == 2 && !c_seeded) {
                    FqmSubgroup s = FqmSubgroup::span(g, gens);
                    Overlattice lam = overlattice(g.gram(), g, s);
                    if (!is_type_I(lam.gram)) continue;
                }
                out.sigmas.insert(sigma);
                if (!out.witness.count(sigma)) out.witness[sigma] = {gens};
                if (!sink(sigma, gens)) { stopped = true; return false; }
                if (!opt_.elliptic_symmetry) break;  // one witness per sigma
            }
            // early exit: everything wanted was found (not in elliptic mode,
            // where every representative matters)
            if (!opt_.elliptic_symmetry) {
                bool all = true;
                for (int s : wanted)
                    if (!out.sigmas.count(s)) all = false;
                if (all) { stopped = true; return false; }
            }
            return true;
        });
        out.nodes += search.stats().nodes;
        if (search.stats().budget_exceeded && !stopped) out.decided = false;
        finish(out, t0);
        return out;
    }

private:
    void finish(CandidateOutcome& out, std::chrono::steady_clock::time_point t0) const {
        out.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    int quotient_sigma(const PartContext& actx, const PartSearch::Node& node) const {
        // elementary part: the quotient is automatically p-elementary and
        // sigma is read off the dimension
        bool elementary = !actx.torsion_reduced();
        for (std::size_t j = 0; j < actx.ncols(); ++j)
            if (actx.order(j) != p_) elementary = false;
        if (elementary) {
            long v = actx.valuation();
            long t = v - 2 * node.dim;
            if (t < 2 || t % 2) return -1;
            int sigma = (int)(t / 2);
            return sigma <= 10 ? sigma : -1;
        }
        // otherwise: complement of the node within its part
        const Fqm& g = glue_.fqm();
        std::vector<Fqm::Elem> gens;
        for (u64 x : node.gens) gens.push_back(actx.to_elem(x));
        FqmSubgroup s = FqmSubgroup::span(g, gens);
        FqmSubgroup k = s.orthogonal_complement(g);
        std::size_t pi = actx.part_index();
        zint q = g.parts()[pi].qmod();
        long so = (long)zq::span_order(s.block(pi), q);
        long ko = (long)zq::span_order(k.block(pi), q);
        if (ko % so) return -1;
        long quot = ko / so;
        long v = 0;
        while (quot % p_ == 0) { quot /= p_; ++v; }
        if (quot != 1 || v % 2) return -1;
        // p-elementary: p * K contained in S (within this part)
        for (const auto& row : k.block(pi)) {
            ZqRow pr(row.size());
            for (std::size_t j = 0; j < row.size(); ++j) pr[j] = row[j] * (zint)p_ % q;
            if (!zq::member(s.block(pi), std::move(pr), q, (zint)p_)) return -1;
        }
        int sigma = (int)(v / 2);
        if (sigma < 1 || sigma > 10) return -1;
        return sigma;
    }

    void build_bcombos(const std::vector<PartContext>& ctx, std::size_t apart,
                       const std::vector<std::vector<detail::PartReport>>& breps,
                       std::size_t i, std::vector<const detail::PartReport*>& cur,
                       std::vector<std::vector<const detail::PartReport*>>& out) const {
        while (i < ctx.size() && i == apart) ++i;
        if (i >= ctx.size()) {
            if (bcombo_classes_ok(ctx, apart, cur)) out.push_back(cur);
            return;
        }
        for (const auto& rep : breps[i]) {
            cur.push_back(&rep);
            std::size_t j = i + 1;
            build_bcombos(ctx, apart, breps, j, cur, out);
            cur.pop_back();
        }
    }

    // mixed classes among B parts have no extra roots
    bool bcombo_classes_ok(const std::vector<PartContext>& ctx, std::size_t apart,
                           const std::vector<const detail::PartReport*>& combo) const {
        if (combo.size() < 2) return true;
        std::vector<std::size_t> parts;
        for (std::size_t i = 0; i < ctx.size(); ++i)
            if (i != apart) parts.push_back(i);
        // iterate the product of the element lists, count nonzero parts
        std::vector<std::size_t> idx(combo.size(), 0);
        while (true) {
            std::size_t nz = 0;
            for (std::size_t k = 0; k < combo.size(); ++k)
                if (combo[k]->elements[idx[k]] != 0) ++nz;
            if (nz >= 2 && !mixed_class_ok(ctx, parts, combo, idx)) return false;
            std::size_t k = 0;
            while (k < combo.size() && ++idx[k] == combo[k]->elements.size()) idx[k++] = 0;
            if (k == combo.size()) break;
        }
        return true;
    }

    bool mixed_class_ok(const std::vector<PartContext>& ctx, const std::vector<std::size_t>& parts,
                        const std::vector<const detail::PartReport*>& combo,
                        const std::vector<std::size_t>& idx) const {
        std::size_t nc = glue_.component_count() + (glue_.has_in_factor() ? 1 : 0);
        std::vector<std::vector<long>> res(nc);
        for (std::size_t c = 0; c < nc; ++c) res[c].assign(glue_.comp_divisors(c).size(), 0);
        for (std::size_t k = 0; k < combo.size(); ++k) {
            auto contrib = ctx[parts[k]].class_contrib(combo[k]->elements[idx[k]]);
            for (std::size_t c = 0; c < nc; ++c)
                for (std::size_t r = 0; r < res[c].size(); ++r)
                    res[c][r] = (res[c][r] + contrib[c][r]) % glue_.comp_divisors(c)[r];
        }
        if (glue_.has_in_factor()) {
            if (res[glue_.in_component()][0] != 0) return true;  // not a rho class
        }
        std::vector<std::size_t> keys(nc, 0);
        bool nonzero = false;
        for (std::size_t c = 0; c < glue_.component_count(); ++c) {
            keys[c] = coset_vector_table(glue_.components()[c]).key(res[c]);
            if (keys[c]) nonzero = true;
        }
        if (!nonzero) return true;
        return glue_.class_root_count(keys) == 0;
    }

    // classes mixing the A node with a B combo
    bool cross_ok(const std::vector<PartContext>& ctx, std::size_t apart,
                  const PartSearch::Node& node,
                  const std::vector<const detail::PartReport*>& combo) const {
        if (combo.empty()) return true;
        std::vector<std::size_t> parts;
        for (std::size_t i = 0; i < ctx.size(); ++i)
            if (i != apart) parts.push_back(i);
        std::size_t nc = glue_.component_count() + (glue_.has_in_factor() ? 1 : 0);
        // pre-walk the B product
        std::vector<std::size_t> idx(combo.size(), 0);
        while (true) {
            bool bnz = false;
            for (std::size_t k = 0; k < combo.size(); ++k)
                if (combo[k]->elements[idx[k]] != 0) bnz = true;
            if (bnz) {
                std::vector<std::vector<long>> bres(nc);
                for (std::size_t c = 0; c < nc; ++c)
                    bres[c].assign(glue_.comp_divisors(c).size(), 0);
                for (std::size_t k = 0; k < combo.size(); ++k) {
                    auto contrib = ctx[parts[k]].class_contrib(combo[k]->elements[idx[k]]);
                    for (std::size_t c = 0; c < nc; ++c)
                        for (std::size_t r = 0; r < bres[c].size(); ++r)
                            bres[c][r] =
                                (bres[c][r] + contrib[c][r]) % glue_.comp_divisors(c)[r];
                }
                for (u64 a : node.elements) {
                    if (a == 0) continue;
                    auto ares = ctx[apart].class_contrib(a);
                    std::vector<std::size_t> keys(nc, 0);
                    bool gn_zero = true;
                    for (std::size_t c = 0; c < nc; ++c) {
                        std::vector<long> sum(bres[c].size());
                        for (std::size_t r = 0; r < sum.size(); ++r)
                            sum[r] = (bres[c][r] + ares[c][r]) % glue_.comp_divisors(c)[r];
                        if (glue_.has_in_factor() && c == glue_.in_component()) {
                            if (sum[0] != 0) gn_zero = false;
                        } else {
                            keys[c] = coset_vector_table(glue_.components()[c]).key(sum);
                        }
                    }
                    if (!gn_zero) continue;
                    if (glue_.class_root_count(keys) > 0) return false;
                }
            }
            std::size_t k = 0;
            while (k < combo.size() && ++idx[k] == combo[k]->elements.size()) idx[k++] = 0;
            if (k == combo.size()) break;
        }
        return true;
    }

    AdeType R_;
    long n_;
    long p_;
    CandidateOptions opt_;
    GlueGroup glue_;
};

// plain entry point: realizable sigma set for one candidate
inline CandidateOutcome run_candidate(const AdeType& R, long n, long p,
                                      const CandidateOptions& opt = {}) {
    CandidateRunner runner(R, n, p, opt);
    return runner.run([](int, const std::vector<Fqm::Elem>&) { return true; });
}

}  // namespace ssk3
