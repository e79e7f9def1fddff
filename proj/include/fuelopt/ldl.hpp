#pragma once

// Sparse LDL' for symmetric quasidefinite matrices.
//
// Up-looking factorization on the elimination tree with an AMD fill-reducing
// ordering. Each pivot has a prescribed sign; a pivot that comes out with the
// wrong sign or too close to zero is replaced by sign*delta, so the factors
// always exist and iterative refinement against the true matrix recovers the
// accuracy lost there.

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/OrderingMethods>
#include <Eigen/Sparse>

namespace fuelopt::socp::detail {

class QuasiDefiniteLdl {
public:
    using Vec = Eigen::VectorXd;
    using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

    double pivot_eps = 1e-13;
    double pivot_delta = 2e-7;

    /// `lower` holds the lower triangle in compressed form; its pattern must
    /// stay fixed across later calls to factor().
    void analyze(const SpMat& lower, const std::vector<int>& sign) {
        n_ = static_cast<int>(lower.cols());
        SpMat full = lower.selfadjointView<Eigen::Lower>();
        Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
        Eigen::AMDOrdering<int>()(full, pinv);
        perm_.assign(static_cast<std::size_t>(n_), 0);
        for (int i = 0; i < n_; ++i) perm_[pinv.indices()[i]] = i;

        sign_.assign(static_cast<std::size_t>(n_), 1);
        for (int i = 0; i < n_; ++i) sign_[perm_[i]] = sign[i];

        // Permuted upper triangle in CSC form.
        const int nnz = static_cast<int>(lower.nonZeros());
        std::vector<int> count(static_cast<std::size_t>(n_) + 1, 0);
        std::vector<int> row_of(nnz), col_of(nnz);
        for (int c = 0; c < n_; ++c)
            for (int k = lower.outerIndexPtr()[c]; k < lower.outerIndexPtr()[c + 1]; ++k) {
                const int a = perm_[lower.innerIndexPtr()[k]], b = perm_[c];
                row_of[k] = std::min(a, b);
                col_of[k] = std::max(a, b);
                ++count[col_of[k] + 1];
            }
        ap_.assign(static_cast<std::size_t>(n_) + 1, 0);
        for (int j = 0; j < n_; ++j) ap_[j + 1] = ap_[j] + count[j + 1];
        ai_.assign(nnz, 0);
        ax_.assign(nnz, 0.0);
        map_.assign(nnz, 0);
        std::vector<int> next(ap_.begin(), ap_.end() - 1);
        for (int k = 0; k < nnz; ++k) {
            const int dst = next[col_of[k]]++;
            ai_[dst] = row_of[k];
            map_[k] = dst;
        }

        // Elimination tree and column counts of L.
        etree_.assign(static_cast<std::size_t>(n_), -1);
        std::vector<int> lnz(static_cast<std::size_t>(n_), 0), work(static_cast<std::size_t>(n_), -1);
        for (int j = 0; j < n_; ++j) {
            work[j] = j;
            for (int p = ap_[j]; p < ap_[j + 1]; ++p) {
                int i = ai_[p];
                while (work[i] != j) {
                    if (etree_[i] == -1) etree_[i] = j;
                    ++lnz[i];
                    work[i] = j;
                    i = etree_[i];
                }
            }
        }
        lp_.assign(static_cast<std::size_t>(n_) + 1, 0);
        for (int i = 0; i < n_; ++i) lp_[i + 1] = lp_[i] + lnz[i];
        li_.assign(static_cast<std::size_t>(lp_[n_]), 0);
        lx_.assign(static_cast<std::size_t>(lp_[n_]), 0.0);
        d_.assign(static_cast<std::size_t>(n_), 0.0);
        dinv_.assign(static_cast<std::size_t>(n_), 0.0);
    }

    /// Returns false only when a non-finite value shows up.
    bool factor(const SpMat& lower) {
        const double* values = lower.valuePtr();
        for (std::size_t k = 0; k < map_.size(); ++k) ax_[map_[k]] = values[k];
        const std::size_t n = static_cast<std::size_t>(n_);
        std::vector<double> y(n, 0.0);
        std::vector<char> marked(n, 0);
        std::vector<int> pattern(n), stack(n), fill(lp_.begin(), lp_.end() - 1);
        bumped_ = 0;
        for (int k = 0; k < n_; ++k) {
            d_[k] = 0.0;
            int top = 0;
            for (int p = ap_[k]; p < ap_[k + 1]; ++p) {
                const int i = ai_[p];
                if (i == k) {
                    d_[k] += ax_[p];
                    continue;
                }
                y[i] += ax_[p];
                int len = 0;
                for (int j = i; j != -1 && j < k && !marked[j]; j = etree_[j]) {
                    marked[j] = 1;
                    stack[len++] = j;
                }
                while (len > 0) pattern[top++] = stack[--len];
            }
            for (int t = top - 1; t >= 0; --t) {
                const int c = pattern[t];
                const double yc = y[c];
                for (int p = lp_[c]; p < fill[c]; ++p) y[li_[p]] -= lx_[p] * yc;
                const double l = yc * dinv_[c];
                li_[fill[c]] = k;
                lx_[fill[c]] = l;
                ++fill[c];
                d_[k] -= yc * l;
                y[c] = 0.0;
                marked[c] = 0;
            }
            if (!std::isfinite(d_[k])) return false;
            if (sign_[k] * d_[k] <= pivot_eps) {
                d_[k] = sign_[k] * pivot_delta;
                ++bumped_;
            }
            dinv_[k] = 1.0 / d_[k];
        }
        return true;
    }

    Vec solve(const Vec& b) const {
        Vec x(n_);
        for (int i = 0; i < n_; ++i) x[perm_[i]] = b[i];
        for (int i = 0; i < n_; ++i)
            for (int p = lp_[i]; p < lp_[i + 1]; ++p) x[li_[p]] -= lx_[p] * x[i];
        for (int i = 0; i < n_; ++i) x[i] *= dinv_[i];
        for (int i = n_ - 1; i >= 0; --i)
            for (int p = lp_[i]; p < lp_[i + 1]; ++p) x[i] -= lx_[p] * x[li_[p]];
        Vec out(n_);
        for (int i = 0; i < n_; ++i) out[i] = x[perm_[i]];
        return out;
    }

    /// Pivots replaced during the last factorization.
    int bumped() const { return bumped_; }

private:
    int n_ = 0;
    std::vector<int> perm_, sign_, ap_, ai_, map_, etree_, lp_, li_;
    std::vector<double> ax_, lx_, d_, dinv_;
    int bumped_ = 0;
};

}  // namespace fuelopt::socp::detail
