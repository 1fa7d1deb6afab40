#pragma once

// Exact integer / rational matrices on GMP, with the normal forms the rest
// of the library is built on: Bareiss determinants, Hermite and Smith normal
// forms (with transforms), integer kernels and exact inverses.
//
// Everything here is a value type; no operation mutates its input.

#include <cassert>
#include <cstddef>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <gmpxx.h>

namespace ssk3 {

using Int = mpz_class;
using Rational = mpq_class;

class IntMat {
public:
    IntMat() = default;
    IntMat(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), e_(rows * cols) {}
    IntMat(std::size_t rows, std::size_t cols, std::vector<Int> entries)
        : rows_(rows), cols_(cols), e_(std::move(entries)) {
        assert(e_.size() == rows_ * cols_);
    }
    static IntMat from_rows(const std::vector<std::vector<long>>& r) {
        std::size_t m = r.size(), n = m ? r[0].size() : 0;
        IntMat a(m, n);
        for (std::size_t i = 0; i < m; ++i) {
            assert(r[i].size() == n);
            for (std::size_t j = 0; j < n; ++j) a(i, j) = r[i][j];
        }
        return a;
    }
    static IntMat identity(std::size_t n) {
        IntMat a(n, n);
        for (std::size_t i = 0; i < n; ++i) a(i, i) = 1;
        return a;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Int& operator()(std::size_t i, std::size_t j) { return e_[i * cols_ + j]; }
    const Int& operator()(std::size_t i, std::size_t j) const { return e_[i * cols_ + j]; }

    bool operator==(const IntMat&) const = default;

    bool is_symmetric() const {
        if (rows_ != cols_) return false;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = i + 1; j < cols_; ++j)
                if ((*this)(i, j) != (*this)(j, i)) return false;
        return true;
    }

    IntMat transpose() const {
        IntMat t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    friend IntMat operator*(const IntMat& a, const IntMat& b) {
        assert(a.cols_ == b.rows_);
        IntMat c(a.rows_, b.cols_);
        Int t;
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const Int& aik = a(i, k);
                if (aik == 0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) {
                    t = aik * b(k, j);
                    c(i, j) += t;
                }
            }
        return c;
    }

    friend std::ostream& operator<<(std::ostream& os, const IntMat& a) {
        for (std::size_t i = 0; i < a.rows_; ++i) {
            os << (i ? "\n[" : "[");
            for (std::size_t j = 0; j < a.cols_; ++j)
                os << (j ? " " : "") << a(i, j);
            os << "]";
        }
        return os;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Int> e_;
};

class RatMat {
public:
    RatMat() = default;
    RatMat(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), e_(rows * cols) {}
    explicit RatMat(const IntMat& a) : RatMat(a.rows(), a.cols()) {
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j)
                (*this)(i, j) = Rational(a(i, j));
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    Rational& operator()(std::size_t i, std::size_t j) { return e_[i * cols_ + j]; }
    const Rational& operator()(std::size_t i, std::size_t j) const { return e_[i * cols_ + j]; }

    bool operator==(const RatMat&) const = default;

    RatMat transpose() const {
        RatMat t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    friend RatMat operator*(const RatMat& a, const RatMat& b) {
        assert(a.cols_ == b.rows_);
        RatMat c(a.rows_, b.cols_);
        Rational t;
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const Rational& aik = a(i, k);
                if (aik == 0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) {
                    t = aik * b(k, j);
                    c(i, j) += t;
                }
            }
        return c;
    }

    bool is_integral() const {
        for (const auto& x : e_)
            if (x.get_den() != 1) return false;
        return true;
    }

    IntMat to_int() const {
        IntMat a(rows_, cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) {
                assert((*this)(i, j).get_den() == 1);
                a(i, j) = (*this)(i, j).get_num();
            }
        return a;
    }

    // least common multiple of all denominators
    Int common_denominator() const {
        Int d = 1;
        for (const auto& x : e_) mpz_lcm(d.get_mpz_t(), d.get_mpz_t(), x.get_den_mpz_t());
        return d;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Rational> e_;
};

// Bareiss fraction-free elimination.  Exact determinant without rational
// arithmetic; intermediate entries stay bounded by minors.
inline Int det(const IntMat& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("det: non-square matrix");
    std::size_t n = m.rows();
    if (n == 0) return 1;
    IntMat a = m;
    Int prev = 1;
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (a(k, k) == 0) {
            std::size_t piv = k + 1;
            while (piv < n && a(piv, k) == 0) ++piv;
            if (piv == n) return 0;
            for (std::size_t j = k; j < n; ++j) std::swap(a(k, j), a(piv, j));
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = k + 1; j < n; ++j) {
                Int t = a(i, j) * a(k, k) - a(i, k) * a(k, j);
                mpz_divexact(a(i, j).get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
            }
        prev = a(k, k);
    }
    return sign > 0 ? a(n - 1, n - 1) : Int(-a(n - 1, n - 1));
}

// Exact inverse over Q by Gauss-Jordan.  Throws on singular input.
struct SingularMatrix : std::runtime_error {
    SingularMatrix() : std::runtime_error("singular matrix") {}
};

inline RatMat inverse_rational(const IntMat& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("inverse: non-square matrix");
    std::size_t n = m.rows();
    RatMat a(n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) a(i, j) = Rational(m(i, j));
        a(i, n + i) = 1;
    }
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        while (piv < n && a(piv, k) == 0) ++piv;
        if (piv == n) throw SingularMatrix();
        if (piv != k)
            for (std::size_t j = 0; j < 2 * n; ++j) std::swap(a(k, j), a(piv, j));
        Rational d = a(k, k);
        for (std::size_t j = 0; j < 2 * n; ++j) a(k, j) /= d;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == k || a(i, k) == 0) continue;
            Rational f = a(i, k);
            for (std::size_t j = k; j < 2 * n; ++j) a(i, j) -= f * a(k, j);
        }
    }
    RatMat inv(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) inv(i, j) = a(i, n + j);
    return inv;
}

namespace detail {

// In-place row HNF with optional transform tracking.  Returns the list of
// pivot columns.  On exit `a` is upper staircase: pivots positive, entries
// above a pivot reduced into [0, pivot), zero rows at the bottom.
inline std::vector<std::size_t> hnf_in_place(IntMat& a, IntMat* trans) {
    std::size_t m = a.rows(), n = a.cols();
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    Int q, t;
    auto row_addmul = [&](std::size_t dst, std::size_t src, const Int& c) {
        if (c == 0) return;
        for (std::size_t j = 0; j < n; ++j) {
            t = c * a(src, j);
            a(dst, j) += t;
        }
        if (trans)
            for (std::size_t j = 0; j < trans->cols(); ++j) {
                t = c * (*trans)(src, j);
                (*trans)(dst, j) += t;
            }
    };
    auto row_swap = [&](std::size_t i, std::size_t j) {
        if (i == j) return;
        for (std::size_t k = 0; k < n; ++k) std::swap(a(i, k), a(j, k));
        if (trans)
            for (std::size_t k = 0; k < trans->cols(); ++k)
                std::swap((*trans)(i, k), (*trans)(j, k));
    };
    auto row_negate = [&](std::size_t i) {
        for (std::size_t k = 0; k < n; ++k) a(i, k) = -a(i, k);
        if (trans)
            for (std::size_t k = 0; k < trans->cols(); ++k)
                (*trans)(i, k) = -(*trans)(i, k);
    };
    for (std::size_t col = 0; col < n && r < m; ++col) {
        // euclidean reduction of rows r..m-1 on this column
        while (true) {
            std::size_t piv = m;
            for (std::size_t i = r; i < m; ++i)
                if (a(i, col) != 0 &&
                    (piv == m || mpz_cmpabs(a(i, col).get_mpz_t(), a(piv, col).get_mpz_t()) < 0))
                    piv = i;
            if (piv == m) break;  // column is zero below r
            row_swap(r, piv);
            if (a(r, col) < 0) row_negate(r);
            bool clean = true;
            for (std::size_t i = r + 1; i < m; ++i) {
                if (a(i, col) == 0) continue;
                mpz_fdiv_q(q.get_mpz_t(), a(i, col).get_mpz_t(), a(r, col).get_mpz_t());
                row_addmul(i, r, Int(-q));
                if (a(i, col) != 0) clean = false;
            }
            if (clean) {
                // reduce entries above the pivot
                for (std::size_t i = 0; i < r; ++i) {
                    mpz_fdiv_q(q.get_mpz_t(), a(i, col).get_mpz_t(), a(r, col).get_mpz_t());
                    row_addmul(i, r, Int(-q));
                }
                pivots.push_back(col);
                ++r;
                break;
            }
        }
    }
    return pivots;
}

}  // namespace detail

struct HnfResult {
    IntMat h;                         // staircase rows, zero rows dropped
    std::vector<std::size_t> pivots;  // pivot column per row of h
};

// Row-style Hermite normal form; row span is preserved, zero rows dropped.
inline HnfResult hermite_normal_form_full(const IntMat& m) {
    IntMat a = m;
    auto pivots = detail::hnf_in_place(a, nullptr);
    IntMat h(pivots.size(), m.cols());
    for (std::size_t i = 0; i < pivots.size(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) h(i, j) = a(i, j);
    return {std::move(h), std::move(pivots)};
}

inline IntMat hermite_normal_form(const IntMat& m) {
    return hermite_normal_form_full(m).h;
}

// Basis (as rows) of { x : x * m == 0 } over Z.
inline IntMat integer_kernel(const IntMat& m) {
    std::size_t r = m.rows();
    IntMat a = m;
    IntMat u = IntMat::identity(r);
    auto pivots = detail::hnf_in_place(a, &u);
    std::size_t rank = pivots.size();
    IntMat k(r - rank, r);
    for (std::size_t i = rank; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) k(i - rank, j) = u(i, j);
    return k;
}

struct SmithDecomposition {
    IntMat left;             // unimodular
    std::vector<Int> diag;   // d_1 | d_2 | ... , nonnegative
    IntMat right;            // unimodular
};

// Smith normal form: left * m * right is diagonal with the divisor chain.
inline SmithDecomposition smith_normal_form(const IntMat& m) {
    std::size_t rows = m.rows(), cols = m.cols();
    IntMat a = m;
    IntMat u = IntMat::identity(rows), v = IntMat::identity(cols);
    Int q, t;
    auto row_addmul = [&](std::size_t dst, std::size_t src, const Int& c) {
        for (std::size_t j = 0; j < cols; ++j) { t = c * a(src, j); a(dst, j) += t; }
        for (std::size_t j = 0; j < rows; ++j) { t = c * u(src, j); u(dst, j) += t; }
    };
    auto col_addmul = [&](std::size_t dst, std::size_t src, const Int& c) {
        for (std::size_t i = 0; i < rows; ++i) { t = c * a(i, src); a(i, dst) += t; }
        for (std::size_t i = 0; i < cols; ++i) { t = c * v(i, src); v(i, dst) += t; }
    };
    auto row_swap = [&](std::size_t i, std::size_t j) {
        if (i == j) return;
        for (std::size_t k = 0; k < cols; ++k) std::swap(a(i, k), a(j, k));
        for (std::size_t k = 0; k < rows; ++k) std::swap(u(i, k), u(j, k));
    };
    auto col_swap = [&](std::size_t i, std::size_t j) {
        if (i == j) return;
        for (std::size_t k = 0; k < rows; ++k) std::swap(a(k, i), a(k, j));
        for (std::size_t k = 0; k < cols; ++k) std::swap(v(k, i), v(k, j));
    };

    std::size_t n = std::min(rows, cols);
    for (std::size_t k = 0; k < n; ++k) {
        while (true) {
            // find entry of minimal absolute value in the remaining block
            std::size_t pi = rows, pj = cols;
            for (std::size_t i = k; i < rows; ++i)
                for (std::size_t j = k; j < cols; ++j)
                    if (a(i, j) != 0 &&
                        (pi == rows ||
                         mpz_cmpabs(a(i, j).get_mpz_t(), a(pi, pj).get_mpz_t()) < 0)) {
                        pi = i; pj = j;
                    }
            if (pi == rows) { n = k; break; }  // rest is zero
            row_swap(k, pi);
            col_swap(k, pj);
            if (a(k, k) < 0) {
                for (std::size_t j = k; j < cols; ++j) a(k, j) = -a(k, j);
                for (std::size_t j = 0; j < rows; ++j) u(k, j) = -u(k, j);
            }
            bool again = false;
            for (std::size_t i = k + 1; i < rows; ++i) {
                if (a(i, k) == 0) continue;
                mpz_fdiv_q(q.get_mpz_t(), a(i, k).get_mpz_t(), a(k, k).get_mpz_t());
                row_addmul(i, k, Int(-q));
                if (a(i, k) != 0) again = true;
            }
            if (again) continue;
            for (std::size_t j = k + 1; j < cols; ++j) {
                if (a(k, j) == 0) continue;
                mpz_fdiv_q(q.get_mpz_t(), a(k, j).get_mpz_t(), a(k, k).get_mpz_t());
                col_addmul(j, k, Int(-q));
                if (a(k, j) != 0) again = true;
            }
            if (again) continue;
            // divisibility: a(k,k) must divide every remaining entry
            bool fixed = true;
            for (std::size_t i = k + 1; i < rows && fixed; ++i)
                for (std::size_t j = k + 1; j < cols && fixed; ++j)
                    if (a(i, j) % a(k, k) != 0) {
                        row_addmul(k, i, Int(1));
                        fixed = false;
                    }
            if (fixed) break;
        }
        if (n == k) break;
    }
    std::vector<Int> diag(std::min(rows, cols));
    for (std::size_t k = 0; k < diag.size(); ++k) diag[k] = a(k, k);
    return {std::move(u), std::move(diag), std::move(v)};
}

// Solve y * b == target (mod modulus) for a row vector y; the stacked-HNF
// route decides solvability exactly for any modulus.
inline std::optional<std::vector<Int>> solve_row_mod(const IntMat& b,
                                                     const std::vector<Int>& target,
                                                     const Int& modulus) {
    std::size_t c = b.rows(), r = b.cols();
    assert(target.size() == r);
    IntMat s(c + r, r + c);
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < r; ++j) s(i, j) = b(i, j);
        s(i, r + i) = 1;
    }
    for (std::size_t j = 0; j < r; ++j) s(c + j, j) = modulus;
    auto [h, pivots] = hermite_normal_form_full(s);

    std::vector<Int> acc(r + c);
    for (std::size_t j = 0; j < r; ++j) acc[j] = target[j];
    Int q, t;
    for (std::size_t i = 0; i < pivots.size(); ++i) {
        std::size_t col = pivots[i];
        if (col >= r) break;
        if (acc[col] == 0) continue;
        if (acc[col] % h(i, col) != 0) return std::nullopt;
        q = acc[col] / h(i, col);
        for (std::size_t j = 0; j < r + c; ++j) { t = q * h(i, j); acc[j] -= t; }
    }
    for (std::size_t j = 0; j < r; ++j)
        if (acc[j] % modulus != 0) return std::nullopt;
    std::vector<Int> y(c);
    for (std::size_t j = 0; j < c; ++j) {
        y[j] = ((-acc[r + j]) % modulus + modulus) % modulus;
    }
    return y;
}

// Solve m * x == target (mod modulus) for a column vector x.
inline std::optional<std::vector<Int>> solve_mod(const IntMat& m,
                                                 const std::vector<Int>& target,
                                                 const Int& modulus) {
    return solve_row_mod(m.transpose(), target, modulus);
}

}  // namespace ssk3
