#pragma once

// Symmetry of the glued discriminant form.
//
// The group used for orbit reduction is generated component-wise from
// Aut(Q(R)) x Aut(I(n)): negation on each component's discriminant group,
// the swap of the two spinor classes for D_m (m even), the full permutation
// of the three nonzero classes for D_4, transpositions of identical
// components, and negation on G_n.  Every generator is checked to preserve
// q at construction and dropped if it does not; using a (possibly proper)
// subgroup of the full image only weakens deduplication, never correctness,
// because all realizability conditions are invariant under the full image.

#include <optional>
#include <vector>

#include "ssk3/glue.hpp"

namespace ssk3 {

// An automorphism of the glued module, as a matrix action per prime part:
// generator g_j maps to sum_i m[part][j][i] * g_i (residue arithmetic).
struct FqmAutomorphism {
    std::vector<std::vector<std::vector<long>>> action;  // [part][src][dst]

    static FqmAutomorphism identity(const Fqm& g) {
        FqmAutomorphism a;
        for (const auto& part : g.parts()) {
            std::vector<std::vector<long>> m(part.size(), std::vector<long>(part.size(), 0));
            for (std::size_t i = 0; i < part.size(); ++i) m[i][i] = 1;
            a.action.push_back(std::move(m));
        }
        return a;
    }

    Fqm::Elem apply(const Fqm& g, const Fqm::Elem& x) const {
        Fqm::Elem y(x.size(), 0);
        std::size_t off = 0;
        for (std::size_t pi = 0; pi < g.parts().size(); ++pi) {
            const PrimePart& part = g.parts()[pi];
            for (std::size_t j = 0; j < part.size(); ++j) {
                long xj = x[off + j] % part.orders[j];
                if (xj == 0) continue;
                for (std::size_t i = 0; i < part.size(); ++i) {
                    long c = action[pi][j][i];
                    if (c == 0) continue;
                    y[off + i] = (long)(((__int128)y[off + i] + (__int128)xj * c) % part.orders[i]);
                }
            }
            for (std::size_t i = 0; i < part.size(); ++i)
                if (y[off + i] < 0) y[off + i] += part.orders[i];
            off += part.size();
        }
        return y;
    }

    // q(phi g_j) == q(g_j) and b(phi g_i, phi g_j) == b(g_i, g_j) on all
    // generator pairs; that extends to the whole group by bilinearity.
    bool preserves_q(const Fqm& g) const {
        std::size_t n = g.gen_count();
        std::vector<Fqm::Elem> basis(n, Fqm::Elem(n, 0));
        std::size_t off = 0, k = 0;
        for (const auto& part : g.parts()) {
            for (std::size_t i = 0; i < part.size(); ++i, ++k) basis[k][off + i] = 1;
            off += part.size();
        }
        std::vector<Fqm::Elem> img(n);
        for (std::size_t i = 0; i < n; ++i) img[i] = apply(g, basis[i]);
        for (std::size_t i = 0; i < n; ++i) {
            if (g.q_value(img[i]) != g.q_value(basis[i])) return false;
            for (std::size_t j = i + 1; j < n; ++j)
                if (g.b_value(img[i], img[j]) != g.b_value(basis[i], basis[j])) return false;
        }
        return true;
    }
};

// Which components of the glue group a symmetry may move.
struct SymmetryOptions {
    bool allow_in_negation = true;             // negation on G_n
    std::optional<std::size_t> fixed_component;  // excluded from swaps (elliptic z)
};

// Generators of the orbit-reduction group, verified q-preserving.
inline std::vector<FqmAutomorphism> gamma_generators(const GlueGroup& glue,
                                                     const SymmetryOptions& opt = {}) {
    const Fqm& g = glue.fqm();
    std::vector<FqmAutomorphism> out;
    auto push_checked = [&](FqmAutomorphism a) {
        bool nontrivial = false;
        for (std::size_t pi = 0; pi < g.parts().size(); ++pi)
            for (std::size_t i = 0; i < g.parts()[pi].size() && !nontrivial; ++i)
                for (std::size_t j = 0; j < g.parts()[pi].size(); ++j)
                    if (a.action[pi][i][j] != (i == j ? 1 : 0)) { nontrivial = true; break; }
        if (nontrivial && a.preserves_q(g)) out.push_back(std::move(a));
    };

    // flat generator index -> (part, index-in-part)
    std::vector<std::pair<std::size_t, std::size_t>> where;
    for (std::size_t pi = 0; pi < g.parts().size(); ++pi)
        for (std::size_t i = 0; i < g.parts()[pi].size(); ++i) where.push_back({pi, i});

    std::size_t ncomp = glue.component_count();
    std::vector<std::vector<std::size_t>> comp_gens(ncomp + 1);
    for (std::size_t flat = 0; flat < g.gen_count(); ++flat)
        comp_gens[glue.component_of_gen(flat)].push_back(flat);

    // negation per component (and on G_n)
    for (std::size_t c = 0; c < ncomp + 1; ++c) {
        if (c == ncomp && (!glue.has_in_factor() || !opt.allow_in_negation)) continue;
        if (c < ncomp) {
            const Symbol& s = glue.components()[c];
            if (s.kind == 'E' && (s.index == 7 || s.index == 8)) continue;  // trivial or no action
        }
        FqmAutomorphism a = FqmAutomorphism::identity(g);
        for (std::size_t flat : comp_gens[c]) {
            auto [pi, i] = where[flat];
            a.action[pi][i][i] = g.parts()[pi].orders[i] - 1;
        }
        push_checked(std::move(a));
    }

    // spinor swap for D_m (m even); for D_4 also a 3-cycle, generating the
    // full permutation action on the three nonzero classes
    for (std::size_t c = 0; c < ncomp; ++c) {
        const Symbol& s = glue.components()[c];
        if (s.kind != 'D' || s.index % 2 != 0) continue;
        if (comp_gens[c].size() != 2) continue;
        auto [pi, i0] = where[comp_gens[c][0]];
        auto i1 = where[comp_gens[c][1]].second;
        FqmAutomorphism sw = FqmAutomorphism::identity(g);
        sw.action[pi][i0][i0] = 0; sw.action[pi][i1][i1] = 0;
        sw.action[pi][i0][i1] = 1; sw.action[pi][i1][i0] = 1;
        push_checked(std::move(sw));
        if (s.index == 4) {
            // s -> s' -> s+s' -> s
            FqmAutomorphism cyc = FqmAutomorphism::identity(g);
            cyc.action[pi][i0][i0] = 0; cyc.action[pi][i0][i1] = 1;
            cyc.action[pi][i1][i0] = 1; cyc.action[pi][i1][i1] = 1;
            push_checked(std::move(cyc));
        }
    }

    // transpositions of adjacent identical components
    for (std::size_t c = 0; c + 1 < ncomp; ++c) {
        if (!(glue.components()[c] == glue.components()[c + 1])) continue;
        if (opt.fixed_component && (*opt.fixed_component == c || *opt.fixed_component == c + 1))
            continue;
        FqmAutomorphism a = FqmAutomorphism::identity(g);
        for (std::size_t k = 0; k < comp_gens[c].size(); ++k) {
            auto [pi, i] = where[comp_gens[c][k]];
            auto [pj, j] = where[comp_gens[c + 1][k]];
            assert(pi == pj);
            a.action[pi][i][i] = 0; a.action[pi][j][j] = 0;
            a.action[pi][i][j] = 1; a.action[pi][j][i] = 1;
        }
        push_checked(std::move(a));
    }
    return out;
}

}  // namespace ssk3
