#pragma once

#include "qgroups/numeric.hpp"

#include <optional>
#include <vector>

namespace qgroups::lattice {

using Row = std::vector<Int>;
using Matrix = std::vector<Row>;

// ---------------------------------------------------------------------------
// Row-style Hermite normal form over Z with unimodular transform.
//
// Output: nonzero rows first, pivot columns strictly increasing, pivots
// positive, entries above each pivot reduced into [0, pivot). All arithmetic
// exact; row ops are mirrored on U so that H = U * M with |det U| = 1.
// ---------------------------------------------------------------------------

struct HnfResult {
    Matrix H;
    Matrix U;
    std::size_t rank = 0;
    int det_sign = 1;

    std::size_t rows() const { return H.size(); }
    std::size_t cols() const { return H.empty() ? 0 : H[0].size(); }
};

inline HnfResult hermite_normal_form(Matrix M) {
    const std::size_t m = M.size();
    const std::size_t n = m == 0 ? 0 : M[0].size();
    HnfResult res;
    res.U.assign(m, Row(m, 0));
    for (std::size_t i = 0; i < m; ++i) res.U[i][i] = 1;

    auto row_op_sub = [&](std::size_t dst, std::size_t src, const Int& k) {
        if (k == 0) return;
        for (std::size_t j = 0; j < n; ++j) M[dst][j] -= k * M[src][j];
        for (std::size_t j = 0; j < m; ++j) res.U[dst][j] -= k * res.U[src][j];
    };
    auto row_swap = [&](std::size_t a, std::size_t b) {
        if (a == b) return;
        std::swap(M[a], M[b]);
        std::swap(res.U[a], res.U[b]);
        res.det_sign = -res.det_sign;
    };
    auto row_negate = [&](std::size_t r) {
        for (std::size_t j = 0; j < n; ++j) M[r][j] = -M[r][j];
        for (std::size_t j = 0; j < m; ++j) res.U[r][j] = -res.U[r][j];
        res.det_sign = -res.det_sign;
    };

    std::size_t row = 0;
    for (std::size_t col = 0; col < n && row < m; ++col) {
        // gcd-reduce the column below `row` until one nonzero entry remains
        while (true) {
            std::size_t best = m;
            for (std::size_t r = row; r < m; ++r) {
                if (M[r][col] == 0) continue;
                if (best == m || abs_int(M[r][col]) < abs_int(M[best][col])) best = r;
            }
            if (best == m) break;  // column is zero below
            row_swap(row, best);
            bool cleared = true;
            for (std::size_t r = row + 1; r < m; ++r) {
                if (M[r][col] == 0) continue;
                Int k = M[r][col] / M[row][col];
                row_op_sub(r, row, k);
                if (M[r][col] != 0) cleared = false;
            }
            if (cleared) break;
        }
        if (M[row][col] == 0) continue;
        if (M[row][col] < 0) row_negate(row);
        const Int& pivot = M[row][col];
        for (std::size_t r = 0; r < row; ++r) {
            // floor division keeps entries above the pivot in [0, pivot)
            Int k;
            if (M[r][col] >= 0)
                k = M[r][col] / pivot;
            else
                k = -((pivot - 1 - M[r][col]) / pivot);
            row_op_sub(r, row, k);
        }
        ++row;
    }
    res.rank = row;
    res.H = std::move(M);
    return res;
}

inline std::vector<std::size_t> pivot_columns(const HnfResult& hnf) {
    std::vector<std::size_t> cols;
    for (std::size_t r = 0; r < hnf.rank; ++r) {
        std::size_t c = 0;
        while (c < hnf.cols() && hnf.H[r][c] == 0) ++c;
        cols.push_back(c);
    }
    return cols;
}

/// Membership-only reduction against an HNF basis (no coefficient recovery).
inline bool reduces_to_zero(const HnfResult& hnf, Row v) {
    const std::size_t n = hnf.cols();
    if (v.size() != n) throw std::invalid_argument("reduces_to_zero: dimension mismatch");
    auto pivots = pivot_columns(hnf);
    std::size_t r = 0;
    for (std::size_t col = 0; col < n; ++col) {
        if (r < hnf.rank && pivots[r] == col) {
            if (mod_floor(v[col], hnf.H[r][col]) != 0) return false;
            Int k = v[col] / hnf.H[r][col];
            if (k != 0)
                for (std::size_t j = col; j < n; ++j) v[j] -= k * hnf.H[r][j];
            ++r;
        } else if (v[col] != 0) {
            return false;
        }
    }
    return true;
}

/// Coefficients on the ORIGINAL rows expressing v, or nullopt if v is outside
/// the row lattice.
inline std::optional<Row> solve_membership(const Matrix& original, const HnfResult& hnf, Row v) {
    const std::size_t n = hnf.cols();
    if (v.size() != n) throw std::invalid_argument("solve_membership: dimension mismatch");
    auto pivots = pivot_columns(hnf);
    Row c_h(hnf.rows(), 0);
    std::size_t r = 0;
    for (std::size_t col = 0; col < n; ++col) {
        if (r < hnf.rank && pivots[r] == col) {
            if (mod_floor(v[col], hnf.H[r][col]) != 0) return std::nullopt;
            Int k = v[col] / hnf.H[r][col];
            if (k != 0)
                for (std::size_t j = 0; j < n; ++j) v[j] -= k * hnf.H[r][j];
            c_h[r] = k;
            ++r;
        } else if (v[col] != 0) {
            return std::nullopt;
        }
    }
    // map back through the transform: v = (c_h * U) * original
    Row coeffs(original.size(), 0);
    for (std::size_t i = 0; i < hnf.rows(); ++i) {
        if (c_h[i] == 0) continue;
        for (std::size_t j = 0; j < original.size(); ++j) coeffs[j] += c_h[i] * hnf.U[i][j];
    }
    return coeffs;
}

inline bool member(const Matrix& M, const Row& v) {
    HnfResult hnf = hermite_normal_form(M);
    return solve_membership(M, hnf, v).has_value();
}

inline bool same_row_lattice(const Matrix& A, const Matrix& B) {
    HnfResult ha = hermite_normal_form(A), hb = hermite_normal_form(B);
    for (const Row& r : A)
        if (!solve_membership(B, hb, r)) return false;
    for (const Row& r : B)
        if (!solve_membership(A, ha, r)) return false;
    return true;
}

/// Basis of the left kernel: rows w with w * M = 0.
inline Matrix left_kernel(const Matrix& M) {
    HnfResult hnf = hermite_normal_form(M);
    Matrix kernel;
    for (std::size_t r = hnf.rank; r < hnf.rows(); ++r) kernel.push_back(hnf.U[r]);
    return kernel;
}

/// Basis (in HNF) of the intersection of the two row lattices.
inline Matrix lattice_intersection(const Matrix& A, const Matrix& B) {
    if (A.empty() || B.empty()) return {};
    Matrix stacked = A;
    stacked.insert(stacked.end(), B.begin(), B.end());
    Matrix inter;
    for (const Row& w : left_kernel(stacked)) {
        Row v(A[0].size(), 0);
        for (std::size_t i = 0; i < A.size(); ++i)
            for (std::size_t j = 0; j < v.size(); ++j) v[j] += w[i] * A[i][j];
        inter.push_back(std::move(v));
    }
    HnfResult h = hermite_normal_form(std::move(inter));
    h.H.resize(h.rank);
    return h.H;
}

// ---------------------------------------------------------------------------
// Rational generator rows reduced to an integer lattice by per-column scaling.
// Column scales come from the generators alone; a query vector whose
// denominators are not absorbed by them cannot be in the lattice.
// ---------------------------------------------------------------------------

class RationalLattice {
public:
    static RationalLattice from_rows(std::vector<std::vector<Rat>> rows, std::size_t n_cols) {
        RationalLattice lat;
        lat.n_ = n_cols;
        lat.rational_rows_ = std::move(rows);
        lat.scale_.assign(n_cols, Int(1));
        for (const auto& row : lat.rational_rows_) {
            if (row.size() != n_cols)
                throw std::invalid_argument("RationalLattice: ragged rows");
            for (std::size_t j = 0; j < n_cols; ++j)
                lat.scale_[j] = lcm(lat.scale_[j], Int(denominator(row[j])));
        }
        for (const auto& row : lat.rational_rows_) {
            Row scaled(n_cols);
            for (std::size_t j = 0; j < n_cols; ++j)
                scaled[j] = Int(numerator(row[j])) * (lat.scale_[j] / Int(denominator(row[j])));
            lat.int_rows_.push_back(std::move(scaled));
        }
        lat.hnf_ = hermite_normal_form(lat.int_rows_);
        return lat;
    }

    struct MemberResult {
        bool member = false;
        Row coeffs;  // Z-combination over the generator rows when member
    };

    /// Membership without certificate recovery; much cheaper on wide bases.
    bool contains(const std::vector<Rat>& v) const {
        Row scaled;
        if (!scale_query(v, scaled)) return false;
        return reduces_to_zero(hnf_, std::move(scaled));
    }

    MemberResult member(const std::vector<Rat>& v) const {
        Row scaled;
        if (!scale_query(v, scaled)) return {};
        auto coeffs = solve_membership(int_rows_, hnf_, std::move(scaled));
        if (!coeffs) return {};
        // re-verify the combination exactly over the rationals
        std::vector<Rat> sum(n_, Rat(0));
        for (std::size_t i = 0; i < rational_rows_.size(); ++i) {
            if ((*coeffs)[i] == 0) continue;
            for (std::size_t j = 0; j < n_; ++j)
                sum[j] += Rat((*coeffs)[i]) * rational_rows_[i][j];
        }
        for (std::size_t j = 0; j < n_; ++j)
            if (sum[j] != v[j]) throw std::logic_error("RationalLattice: combination audit failed");
        return {true, std::move(*coeffs)};
    }

    const Matrix& integer_rows() const { return int_rows_; }
    const std::vector<Int>& column_scales() const { return scale_; }
    const HnfResult& hnf() const { return hnf_; }
    std::size_t rank() const { return hnf_.rank; }

private:
    bool scale_query(const std::vector<Rat>& v, Row& out) const {
        if (v.size() != n_) throw std::invalid_argument("RationalLattice: query dimension");
        out.assign(n_, Int(0));
        for (std::size_t j = 0; j < n_; ++j) {
            Rat s = v[j] * scale_[j];
            if (denominator(s) != 1) return false;  // denominator outside the lattice's support
            out[j] = Int(numerator(s));
        }
        return true;
    }

    std::size_t n_ = 0;
    std::vector<std::vector<Rat>> rational_rows_;
    Matrix int_rows_;
    std::vector<Int> scale_;
    HnfResult hnf_;
};

}  // namespace qgroups::lattice
