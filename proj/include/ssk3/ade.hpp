#pragma once

// ADE types and their root lattices.
//
// An ADE type is a formal sum of symbols A_l (l>=1), D_m (m>=4), E_n
// (n=6,7,8) with multiplicities.  Q(R) is the negative definite lattice
// whose Gram matrix is minus the Cartan matrix of R; Q(R,n) = Q(R) (+) I(n)
// where I(n) is rank one of norm n.  Canonical component order is
// E8 > E7 > E6 > D_m (descending m) > A_l (descending l); Gram matrices,
// string serialization ("E8+2D4+3A1") and all coset indexing follow it.

#include <algorithm>
#include <cassert>
#include <cctype>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssk3/intmat.hpp"

namespace ssk3 {

struct Symbol {
    char kind = 'A';  // 'A', 'D' or 'E'
    int index = 1;

    bool valid() const {
        switch (kind) {
            case 'A': return index >= 1;
            case 'D': return index >= 4;
            case 'E': return index >= 6 && index <= 8;
        }
        return false;
    }
    int rank() const { return index; }

    // canonical order: E8 > E7 > E6 > D (desc) > A (desc)
    friend bool operator<(const Symbol& a, const Symbol& b) {
        auto key = [](const Symbol& s) {
            int k = s.kind == 'E' ? 2 : s.kind == 'D' ? 1 : 0;
            return std::pair<int, int>(k, s.index);
        };
        return key(b) < key(a);  // descending
    }
    friend bool operator==(const Symbol& a, const Symbol& b) {
        return a.kind == b.kind && a.index == b.index;
    }

    std::string str() const { return std::string(1, kind) + std::to_string(index); }
};

class AdeType {
public:
    AdeType() = default;
    explicit AdeType(std::map<Symbol, int> coeffs) {
        for (auto& [s, c] : coeffs) {
            if (!s.valid()) throw std::invalid_argument("invalid ADE symbol " + s.str());
            if (c < 0) throw std::invalid_argument("negative multiplicity");
            if (c > 0) parts_.emplace_back(s, c);
        }
    }

    static AdeType single(char kind, int index, int mult = 1) {
        return AdeType(std::map<Symbol, int>{{Symbol{kind, index}, mult}});
    }

    // components in canonical order with multiplicities
    const std::vector<std::pair<Symbol, int>>& parts() const { return parts_; }

    // flat list of symbols, one per component, canonical order
    std::vector<Symbol> components() const {
        std::vector<Symbol> v;
        for (auto& [s, c] : parts_)
            for (int i = 0; i < c; ++i) v.push_back(s);
        return v;
    }

    int rank() const {
        int r = 0;
        for (auto& [s, c] : parts_) r += s.rank() * c;
        return r;
    }

    int multiplicity(const Symbol& s) const {
        for (auto& [t, c] : parts_)
            if (t == s) return c;
        return 0;
    }

    bool empty() const { return parts_.empty(); }

    AdeType plus(const Symbol& s, int mult = 1) const {
        std::map<Symbol, int> m(parts_.begin(), parts_.end());
        m[s] += mult;
        return AdeType(m);
    }
    AdeType minus(const Symbol& s, int mult = 1) const {
        std::map<Symbol, int> m(parts_.begin(), parts_.end());
        m[s] -= mult;
        if (m[s] < 0) throw std::invalid_argument("negative multiplicity");
        if (m[s] == 0) m.erase(s);
        return AdeType(m);
    }

    friend bool operator==(const AdeType& a, const AdeType& b) { return a.parts_ == b.parts_; }
    friend bool operator<(const AdeType& a, const AdeType& b) {
        auto key = [](const AdeType& t) {
            std::vector<std::pair<int, int>> k;
            for (auto& [s, c] : t.parts_) {
                int kk = s.kind == 'E' ? 2 : s.kind == 'D' ? 1 : 0;
                k.emplace_back(-kk * 100 - s.index, -c);
            }
            return k;
        };
        return key(a) < key(b);
    }

    // "E8+2D4+3A1"; empty type prints "0"
    std::string str() const {
        if (parts_.empty()) return "0";
        std::string out;
        for (auto& [s, c] : parts_) {
            if (!out.empty()) out += '+';
            if (c > 1) out += std::to_string(c);
            out += s.str();
        }
        return out;
    }

    static AdeType parse(const std::string& text) {
        std::map<Symbol, int> m;
        std::size_t i = 0;
        auto skip_ws = [&] { while (i < text.size() && std::isspace((unsigned char)text[i])) ++i; };
        skip_ws();
        if (text.substr(i) == "0") return AdeType();
        while (i < text.size()) {
            skip_ws();
            int mult = 1;
            if (std::isdigit((unsigned char)text[i])) {
                mult = 0;
                while (i < text.size() && std::isdigit((unsigned char)text[i]))
                    mult = mult * 10 + (text[i++] - '0');
            }
            skip_ws();
            if (i >= text.size() || (text[i] != 'A' && text[i] != 'D' && text[i] != 'E'))
                throw std::invalid_argument("bad ADE string: " + text);
            char kind = text[i++];
            if (i < text.size() && text[i] == '_') ++i;
            if (i >= text.size() || !std::isdigit((unsigned char)text[i]))
                throw std::invalid_argument("bad ADE string: " + text);
            int idx = 0;
            while (i < text.size() && std::isdigit((unsigned char)text[i]))
                idx = idx * 10 + (text[i++] - '0');
            Symbol s{kind, idx};
            if (!s.valid()) throw std::invalid_argument("invalid ADE symbol in: " + text);
            m[s] += mult;
            skip_ws();
            if (i < text.size()) {
                if (text[i] != '+') throw std::invalid_argument("bad ADE string: " + text);
                ++i;
            }
        }
        return AdeType(m);
    }

private:
    // sorted canonically, multiplicities > 0
    std::vector<std::pair<Symbol, int>> parts_;
};

enum class SignatureTag { NegativeDefinite, Indefinite, RankOnePositive };

struct GramLattice {
    IntMat gram;
    SignatureTag tag = SignatureTag::NegativeDefinite;
};

// minus the Cartan matrix.  Dynkin labeling: chain for A_l; for D_m the
// fork at the last two indices; Bourbaki numbering for E_n.
inline GramLattice gram_of_indecomposable(const Symbol& s) {
    if (!s.valid()) throw std::invalid_argument("invalid ADE symbol " + s.str());
    int n = s.rank();
    IntMat g(n, n);
    for (int i = 0; i < n; ++i) g(i, i) = -2;
    auto link = [&](int i, int j) { g(i, j) = 1; g(j, i) = 1; };
    if (s.kind == 'A') {
        for (int i = 0; i + 1 < n; ++i) link(i, i + 1);
    } else if (s.kind == 'D') {
        for (int i = 0; i + 1 < n - 2; ++i) link(i, i + 1);
        link(n - 3, n - 2);
        link(n - 3, n - 1);
    } else {
        // Bourbaki: node 2 hangs off node 4 of the chain 1-3-4-5-...-n
        link(0, 2);
        link(1, 3);
        for (int i = 2; i + 1 < n; ++i) link(i, i + 1);
    }
    return {std::move(g), SignatureTag::NegativeDefinite};
}

inline GramLattice gram_of(const AdeType& r) {
    int n = r.rank();
    IntMat g(n, n);
    int off = 0;
    for (const Symbol& s : r.components()) {
        IntMat c = gram_of_indecomposable(s).gram;
        for (int i = 0; i < s.rank(); ++i)
            for (int j = 0; j < s.rank(); ++j) g(off + i, off + j) = c(i, j);
        off += s.rank();
    }
    return {std::move(g), SignatureTag::NegativeDefinite};
}

// Q(R,n) = Q(R) (+) I(n), the rank-1 positive block last
inline GramLattice gram_of(const AdeType& r, long n) {
    if (n <= 0 || n % 2 != 0) throw std::invalid_argument("polarization norm must be even positive");
    int rk = r.rank();
    IntMat g(rk + 1, rk + 1);
    IntMat q = gram_of(r).gram;
    for (int i = 0; i < rk; ++i)
        for (int j = 0; j < rk; ++j) g(i, j) = q(i, j);
    g(rk, rk) = n;
    return {std::move(g), SignatureTag::Indefinite};
}

}  // namespace ssk3
