#pragma once

// Canonical orbit keys for subgroups of a 2-elementary prime part, under
// permutations of interchangeable columns (one symmetric group per class of
// identical single-generator components).
//
// Individualization-refinement: the element partition and the column
// partition refine each other until stable (elements by per-cell popcounts,
// columns by per-group incidence counts); a non-singleton column cell is
// then individualized and the process recurses.  Leaves yield a relabeled,
// sorted element list; the key is the minimum over leaves.  Automorphisms
// discovered from equal leaves prune sibling branches, which is what keeps
// highly symmetric subgroups (the all-A_1 searches) from exploding.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <vector>

namespace ssk3 {

class BitCanonizer {
public:
    BitCanonizer(std::vector<unsigned> column_shifts, std::vector<std::vector<int>> cells)
        : shifts_(std::move(column_shifts)) {
        ncols_ = shifts_.size();
        for (auto& cell : cells) {
            init_cell_of_.resize(ncols_, 0);
            for (int c : cell) init_cell_of_[(std::size_t)c] = (int)init_ncells_;
            ++init_ncells_;
        }
        init_cols_.resize(ncols_);
        {
            std::vector<int> pos;
            for (const auto& cell : cells)
                for (int c : cell) pos.push_back(c);
            init_cols_ = pos;
        }
        // cell id per initial position
        init_cellid_.resize(ncols_);
        {
            std::size_t k = 0;
            for (std::size_t ci = 0; ci < cells.size(); ++ci)
                for (std::size_t j = 0; j < cells[ci].size(); ++j) init_cellid_[k++] = (int)ci;
        }
    }

    mutable std::uint64_t cap_hits = 0;

    std::pair<std::uint64_t, std::uint64_t> key(const std::vector<std::uint64_t>& elements) const {
        n_ = elements.size();
        elems_ = &elements;
        best_.clear();
        have_best_ = false;
        auts_.clear();
        work_ = 0;
        capped_ = false;

        State st;
        st.cols = init_cols_;
        st.cellid = init_cellid_;
        st.grp.assign(n_, 0);
        refine(st);
        descend(st);
        if (capped_) {
            ++cap_hits;
            std::vector<std::uint64_t> s(elements);
            std::sort(s.begin(), s.end());
            return hash_form(s, 0xfa11ba5eull);
        }
        return hash_form(best_, 0x736b3375ull);
    }

private:
    // columns in cell-contiguous order plus the cell id per position; the
    // element side is a group id per element
    struct State {
        std::vector<int> cols;
        std::vector<int> cellid;
        std::vector<std::uint16_t> grp;
        std::vector<int> prefix;
    };

    static std::pair<std::uint64_t, std::uint64_t> hash_form(const std::vector<std::uint64_t>& form,
                                                             std::uint64_t salt) {
        std::uint64_t a = salt, b = 0x9e3779b97f4a7c15ull ^ salt;
        for (std::uint64_t v : form) {
            a ^= v + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2);
            b = (b ^ v) * 0x100000001b3ull;
            b ^= b >> 29;
        }
        return {a, b};
    }

    long bit(std::size_t elem_idx, int col) const {
        return ((*elems_)[elem_idx] >> shifts_[(std::size_t)col]) & 1;
    }

    void refine(State& st) const {
        std::size_t nc = ncols_;
        // scratch buffers
        ekey_.assign(n_ * 2, 0);       // packed element keys (two words)
        eord_.resize(n_);
        ckey_.clear();
        bool changed = true;
        while (changed && !capped_) {
            changed = false;
            if (++work_ > 100000) { capped_ = true; return; }

            // element side: key = (grp, popcount per cell in cell order)
            std::size_t cell_count = st.cellid.empty() ? 0 : (std::size_t)st.cellid.back() + 1;
            // cell masks
            cellmask_.assign(cell_count, 0);
            for (std::size_t k = 0; k < nc; ++k)
                cellmask_[(std::size_t)st.cellid[k]] |= (std::uint64_t)1 << shifts_[(std::size_t)st.cols[k]];
            for (std::size_t i = 0; i < n_; ++i) {
                std::uint64_t k1 = st.grp[i], k2 = 0;
                std::uint64_t e = (*elems_)[i];
                for (std::size_t c = 0; c < cell_count; ++c) {
                    unsigned pc = (unsigned)std::popcount(e & cellmask_[c]);
                    if (c < 10) k1 = (k1 << 5) | pc;
                    else k2 = (k2 << 5) | pc;
                }
                ekey_[2 * i] = k1;
                ekey_[2 * i + 1] = k2;
            }
            for (std::size_t i = 0; i < n_; ++i) eord_[i] = (std::uint32_t)i;
            std::sort(eord_.begin(), eord_.end(), [&](std::uint32_t x, std::uint32_t y) {
                if (ekey_[2 * x] != ekey_[2 * y]) return ekey_[2 * x] < ekey_[2 * y];
                return ekey_[2 * x + 1] < ekey_[2 * y + 1];
            });
            std::uint16_t gid = 0;
            bool esplit = false;
            grp_scratch_.resize(n_);
            for (std::size_t k = 0; k < n_; ++k) {
                if (k && (ekey_[2 * eord_[k]] != ekey_[2 * eord_[k - 1]] ||
                          ekey_[2 * eord_[k] + 1] != ekey_[2 * eord_[k - 1] + 1]))
                    ++gid;
                if (st.grp[eord_[k]] != gid) esplit = true;
                grp_scratch_[eord_[k]] = gid;
            }
            if (esplit) {
                st.grp.swap(grp_scratch_);
                changed = true;
            }

            // column side: within each cell, split by counts against groups
            std::size_t ngroups = 0;
            for (std::size_t i = 0; i < n_; ++i)
                ngroups = std::max<std::size_t>(ngroups, (std::size_t)st.grp[i] + 1);
            ckey_.assign(nc * ngroups, 0);
            for (std::size_t i = 0; i < n_; ++i) {
                std::uint64_t e = (*elems_)[i];
                std::uint16_t g = st.grp[i];
                for (std::size_t k = 0; k < nc; ++k)
                    ckey_[(std::size_t)st.cols[k] * ngroups + g] +=
                        (std::uint16_t)((e >> shifts_[(std::size_t)st.cols[k]]) & 1);
            }
            std::vector<int> ncols2(st.cols), ncell2(st.cellid);
            std::size_t pos = 0;
            int newcell = 0;
            bool csplit = false;
            while (pos < nc) {
                std::size_t end = pos;
                while (end < nc && st.cellid[end] == st.cellid[pos]) ++end;
                if (end - pos == 1) {
                    ncols2[pos] = st.cols[pos];
                    ncell2[pos] = newcell++;
                } else {
                    std::vector<int> idx(st.cols.begin() + pos, st.cols.begin() + end);
                    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
                        const std::uint16_t* ka = &ckey_[(std::size_t)a * ngroups];
                        const std::uint16_t* kb = &ckey_[(std::size_t)b * ngroups];
                        for (std::size_t g = 0; g < ngroups; ++g)
                            if (ka[g] != kb[g]) return ka[g] < kb[g];
                        return a < b;  // within equal keys keep column order
                    });
                    for (std::size_t k = 0; k < idx.size(); ++k) {
                        bool newc = k == 0 ||
                                    memcmp(&ckey_[(std::size_t)idx[k] * ngroups],
                                           &ckey_[(std::size_t)idx[k - 1] * ngroups],
                                           ngroups * sizeof(std::uint16_t)) != 0;
                        if (newc) {
                            if (k) csplit = true;
                            ++newcell;
                        }
                        ncols2[pos + k] = idx[k];
                        ncell2[pos + k] = newcell - 1;
                    }
                }
                pos = end;
            }
            if (csplit) {
                st.cols.swap(ncols2);
                st.cellid.swap(ncell2);
                // renumber cell ids contiguously
                int cur = -1, prev = -1;
                for (std::size_t k = 0; k < nc; ++k) {
                    if (st.cellid[k] != prev) { prev = st.cellid[k]; ++cur; }
                    st.cellid[k] = cur;
                }
                changed = true;
            }
        }
    }

    void leaf(const State& st) const {
        std::vector<std::uint64_t> form(n_, 0);
        for (std::size_t i = 0; i < n_; ++i) {
            std::uint64_t v = 0;
            for (std::size_t c = 0; c < ncols_; ++c)
                v = (v << 1) | (std::uint64_t)bit(i, st.cols[c]);
            form[i] = v;
        }
        std::sort(form.begin(), form.end());
        if (!have_best_ || form < best_) {
            best_ = std::move(form);
            best_cols_ = st.cols;
            have_best_ = true;
        } else if (form == best_ && auts_.size() < 64) {
            std::vector<int> perm(ncols_);
            for (std::size_t c = 0; c < ncols_; ++c)
                perm[(std::size_t)best_cols_[c]] = st.cols[c];
            bool trivial = true;
            for (std::size_t c = 0; c < ncols_; ++c)
                if (perm[c] != (int)c) { trivial = false; break; }
            if (!trivial &&
                std::find(auts_.begin(), auts_.end(), perm) == auts_.end())
                auts_.push_back(std::move(perm));
        }
    }

    void descend(const State& st) const {
        if (capped_) return;
        // discrete element partition: any columns still sharing a cell are
        // equal as functions on S, so the within-cell order is irrelevant
        // and this is already a leaf
        {
            std::size_t ngroups = 0;
            for (std::size_t i = 0; i < n_; ++i)
                ngroups = std::max<std::size_t>(ngroups, (std::size_t)st.grp[i] + 1);
            if (ngroups == n_) {
                leaf(st);
                return;
            }
        }
        // smallest non-singleton cell, earliest among equals
        std::size_t tstart = 0, tend = 0, bestsz = ncols_ + 1;
        for (std::size_t k = 0; k < ncols_;) {
            std::size_t end = k;
            while (end < ncols_ && st.cellid[end] == st.cellid[k]) ++end;
            if (end - k > 1 && end - k < bestsz) {
                bestsz = end - k;
                tstart = k;
                tend = end;
            }
            k = end;
        }
        if (bestsz == ncols_ + 1) {
            leaf(st);
            return;
        }
        // column orbits under the automorphisms that fix the prefix
        std::vector<int> uf(ncols_);
        for (std::size_t c = 0; c < ncols_; ++c) uf[c] = (int)c;
        auto find = [&](int x) {
            while (uf[(std::size_t)x] != x) x = uf[(std::size_t)x] = uf[(std::size_t)uf[(std::size_t)x]];
            return x;
        };
        for (const auto& gamma : auts_) {
            bool fixes = true;
            for (int p : st.prefix)
                if (gamma[(std::size_t)p] != p) { fixes = false; break; }
            if (!fixes) continue;
            for (std::size_t c = 0; c < ncols_; ++c) {
                int a = find((int)c), b = find(gamma[c]);
                if (a != b) uf[(std::size_t)a] = b;
            }
        }
        std::vector<char> orbit_done(ncols_, 0);
        for (std::size_t k = tstart; k < tend; ++k) {
            int col = st.cols[k];
            int rep = find(col);
            if (orbit_done[(std::size_t)rep]) continue;
            orbit_done[(std::size_t)rep] = 1;
            State child;
            child.grp = st.grp;
            child.prefix = st.prefix;
            child.prefix.push_back(col);
            child.cols.reserve(ncols_);
            child.cellid.reserve(ncols_);
            // individualize: col becomes its own cell in front of the rest of
            // its cell; every other cell keeps its grouping
            int nid = -1;
            int prev_old = -2;
            for (std::size_t j = 0; j < ncols_; ++j) {
                if (j == tstart) {
                    child.cols.push_back(col);
                    child.cellid.push_back(++nid);
                    if (tend - tstart > 1) {
                        ++nid;
                        for (std::size_t t2 = tstart; t2 < tend; ++t2)
                            if (st.cols[t2] != col) {
                                child.cols.push_back(st.cols[t2]);
                                child.cellid.push_back(nid);
                            }
                    }
                    prev_old = -2;
                    j = tend - 1;
                } else {
                    if (st.cellid[j] != prev_old) {
                        ++nid;
                        prev_old = st.cellid[j];
                    }
                    child.cols.push_back(st.cols[j]);
                    child.cellid.push_back(nid);
                }
            }
            refine(child);
            descend(child);
            if (capped_) return;
        }
    }

    std::vector<unsigned> shifts_;
    std::size_t ncols_ = 0;
    std::vector<int> init_cols_, init_cellid_, init_cell_of_;
    std::size_t init_ncells_ = 0;

    mutable std::size_t n_ = 0;
    mutable const std::vector<std::uint64_t>* elems_ = nullptr;
    mutable std::vector<std::uint64_t> best_;
    mutable std::vector<int> best_cols_;
    mutable bool have_best_ = false;
    mutable std::vector<std::vector<int>> auts_;
    mutable std::size_t work_ = 0;
    mutable bool capped_ = false;
    mutable std::vector<std::uint64_t> ekey_, cellmask_;
    mutable std::vector<std::uint32_t> eord_;
    mutable std::vector<std::uint16_t> ckey_, grp_scratch_;
};

}  // namespace ssk3
