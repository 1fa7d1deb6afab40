#pragma once

// Linear algebra over Z/p^e with machine integers: Howell normal form,
// membership, kernels.  The Howell form is the canonical representation of
// a submodule of (Z/q)^n, so two generator sets span the same subgroup iff
// their Howell matrices are equal; that is what makes subgroup hashing and
// deduplication work.
//
// Modules with heterogeneous factors (+) Z/p^{e_j} are embedded in (Z/q)^n,
// q = p^{max e_j}, by scaling coordinate j with p^{q-e_j}; all subgroup
// matrices in the library live in these scaled coordinates.

#include <cassert>
#include <cstdint>
#include <vector>

namespace ssk3 {

using zint = std::uint64_t;

inline zint pow_u64(zint b, unsigned e) {
    zint r = 1;
    while (e--) r *= b;
    return r;
}

// p-adic valuation of x (x != 0), bounded by that of q
inline unsigned val_p(zint x, zint p) {
    unsigned v = 0;
    while (x % p == 0) { x /= p; ++v; }
    return v;
}

// inverse of a unit mod q
inline zint inv_mod(zint a, zint q) {
    // extended euclid; a must be a unit
    long long t = 0, newt = 1;
    long long r = (long long)q, newr = (long long)(a % q);
    while (newr != 0) {
        long long quo = r / newr;
        long long tmp = t - quo * newt; t = newt; newt = tmp;
        tmp = r - quo * newr; r = newr; newr = tmp;
    }
    assert(r == 1);
    return (zint)((t % (long long)q + (long long)q) % (long long)q);
}

using ZqRow = std::vector<zint>;
using ZqMat = std::vector<ZqRow>;

namespace zq {

inline void row_submul(ZqRow& dst, const ZqRow& src, zint c, zint q) {
    for (std::size_t j = 0; j < dst.size(); ++j)
        dst[j] = (dst[j] + (q - c % q) * src[j]) % q;
}
inline void row_scale(ZqRow& r, zint c, zint q) {
    for (auto& x : r) x = x * c % q;
}
inline bool row_zero(const ZqRow& r) {
    for (auto x : r) if (x) return false;
    return true;
}

// In-place Howell normal form over Z/q, q = p^e.  Columns are processed
// left to right; each pivot is an exact power of p; the annihilator rows
// (q/pivot)*row are fed back so the form has the Howell closure property.
// Entries above a pivot p^v are reduced into [0, p^v).
inline ZqMat howell(ZqMat rows, zint q, zint p) {
    ZqMat work;
    for (auto& r : rows)
        if (!row_zero(r)) work.push_back(std::move(r));
    ZqMat out;
    std::size_t ncols = work.empty() ? 0 : work[0].size();
    for (std::size_t col = 0; col < ncols && !work.empty(); ++col) {
        // row with minimal valuation at this column
        std::size_t best = work.size();
        unsigned bestv = 0;
        for (std::size_t i = 0; i < work.size(); ++i) {
            if (work[i][col] == 0) continue;
            unsigned v = val_p(work[i][col], p);
            if (best == work.size() || v < bestv) { best = i; bestv = v; }
        }
        if (best == work.size()) continue;
        ZqRow piv = std::move(work[best]);
        work.erase(work.begin() + best);
        zint pv = pow_u64(p, bestv);
        row_scale(piv, inv_mod(piv[col] / pv, q), q);  // pivot entry -> p^v
        for (auto& r : work) {
            if (r[col] == 0) continue;
            row_submul(r, piv, r[col] / pv, q);
        }
        if (pv != 1) {
            ZqRow ann = piv;
            row_scale(ann, q / pv, q);
            if (!row_zero(ann)) work.push_back(std::move(ann));
        }
        // drop rows that became zero
        for (std::size_t i = work.size(); i-- > 0;)
            if (row_zero(work[i])) work.erase(work.begin() + i);
        out.push_back(std::move(piv));
    }
    // reduce entries above each pivot
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::size_t col = 0;
        while (out[i][col] == 0) ++col;
        zint pv = out[i][col];
        for (std::size_t k = 0; k < i; ++k)
            if (out[k][col] % pv || out[k][col] >= pv)
                row_submul(out[k], out[i], out[k][col] / pv, q);
    }
    return out;
}

// order of the row span: product over pivot rows of q / pivot
inline zint span_order(const ZqMat& h, zint q) {
    zint o = 1;
    for (const auto& r : h) {
        std::size_t col = 0;
        while (col < r.size() && r[col] == 0) ++col;
        if (col < r.size()) o *= q / r[col];
    }
    return o;
}

// membership of x in the span of a Howell matrix
inline bool member(const ZqMat& h, ZqRow x, zint q, zint p) {
    for (const auto& r : h) {
        std::size_t col = 0;
        while (col < r.size() && r[col] == 0) ++col;
        if (col == r.size()) continue;
        if (x[col] == 0) continue;
        zint pv = r[col];
        if (x[col] % pv) return false;
        row_submul(x, r, x[col] / pv, q);
    }
    return row_zero(x);
}

// kernel of x |-> x * B (mod q): Howell basis of { x in (Z/q)^n : xB = 0 }
inline ZqMat kernel(const ZqMat& B, std::size_t n, zint q, zint p) {
    std::size_t m = B.empty() ? 0 : B[0].size();
    ZqMat aug(n, ZqRow(m + n, 0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) aug[i][j] = B[i][j] % q;
        aug[i][m + i] = 1;
    }
    ZqMat h = howell(std::move(aug), q, p);
    ZqMat ker;
    for (const auto& r : h) {
        bool zero = true;
        for (std::size_t j = 0; j < m; ++j)
            if (r[j]) { zero = false; break; }
        if (zero) ker.emplace_back(r.begin() + m, r.end());
    }
    return howell(std::move(ker), q, p);
}

}  // namespace zq
}  // namespace ssk3
