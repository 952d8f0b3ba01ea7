#include "kou2d/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace kou2d {

std::size_t SparseMatrix::find(std::size_t r, std::size_t c) const {
    auto first = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
    auto last = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
    auto it = std::lower_bound(first, last, c);
    if (it == last || *it != c) return npos;
    return static_cast<std::size_t>(it - col.begin());
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
    std::size_t p = find(r, c);
    return p == npos ? 0.0 : val[p];
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    SparseMatrix I;
    I.rows = I.cols = n;
    I.row_ptr.resize(n + 1);
    I.col.resize(n);
    I.val.assign(n, 1.0);
    for (std::size_t i = 0; i <= n; ++i) I.row_ptr[i] = i;
    for (std::size_t i = 0; i < n; ++i) I.col[i] = i;
    return I;
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
    for (const auto& t : entries) {
        if (t.row >= rows || t.col >= cols) {
            throw std::out_of_range("from_triplets: entry outside matrix bounds");
        }
    }
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix A;
    A.rows = rows;
    A.cols = cols;
    A.row_ptr.assign(rows + 1, 0);
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto& t = entries[k];
        if (!A.col.empty() && k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col) {
            A.val.back() += t.value;
            continue;
        }
        A.col.push_back(t.col);
        A.val.push_back(t.value);
        A.row_ptr[t.row + 1]++;
    }
    for (std::size_t r = 0; r < rows; ++r) A.row_ptr[r + 1] += A.row_ptr[r];
    return A;
}

namespace {

void check_dims(const SparseMatrix& A, std::span<const double> x, std::span<double> y) {
    if (x.size() != A.cols || y.size() != A.rows) {
        throw std::invalid_argument("spmv: dimension mismatch");
    }
}

}  // namespace

void spmv(const SparseMatrix& A, std::span<const double> x, std::span<double> y) {
    check_dims(A, x, y);
    const auto n = static_cast<std::ptrdiff_t>(A.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
        double acc = 0.0;
        for (std::size_t p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p) {
            acc += A.val[p] * x[A.col[p]];
        }
        y[r] = acc;
    }
}

std::vector<double> spmv(const SparseMatrix& A, std::span<const double> x) {
    std::vector<double> y(A.rows);
    spmv(A, x, y);
    return y;
}

namespace serial {

void spmv(const SparseMatrix& A, std::span<const double> x, std::span<double> y) {
    check_dims(A, x, y);
    for (std::size_t r = 0; r < A.rows; ++r) {
        double acc = 0.0;
        for (std::size_t p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p) {
            acc += A.val[p] * x[A.col[p]];
        }
        y[r] = acc;
    }
}

}  // namespace serial

void write_matrix_market(std::ostream& out, const SparseMatrix& A) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << A.rows << ' ' << A.cols << ' ' << A.nnz() << '\n';
    char buf[96];
    for (std::size_t r = 0; r < A.rows; ++r) {
        for (std::size_t p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p) {
            std::snprintf(buf, sizeof buf, "%zu %zu %.17g\n", r + 1, A.col[p] + 1, A.val[p]);
            out << buf;
        }
    }
}

Ilu0Factors::Ilu0Factors(const SparseMatrix& A) : lu_(A), diag_(A.rows) {
    if (A.rows != A.cols) throw std::invalid_argument("ilu0: matrix must be square");
    const std::size_t n = A.rows;
    for (std::size_t i = 0; i < n; ++i) {
        diag_[i] = lu_.find(i, i);
        if (diag_[i] == SparseMatrix::npos) {
            throw std::runtime_error("ilu0: missing diagonal entry in row " + std::to_string(i));
        }
    }

    // IKJ variant; position map of the current row for O(1) pattern lookups.
    std::vector<std::size_t> pos(n, SparseMatrix::npos);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t begin = lu_.row_ptr[i];
        const std::size_t end = lu_.row_ptr[i + 1];
        for (std::size_t p = begin; p < end; ++p) pos[lu_.col[p]] = p;

        for (std::size_t p = begin; p < end && lu_.col[p] < i; ++p) {
            const std::size_t k = lu_.col[p];
            const double pivot = lu_.val[diag_[k]];
            lu_.val[p] /= pivot;
            const double lik = lu_.val[p];
            for (std::size_t q = diag_[k] + 1; q < lu_.row_ptr[k + 1]; ++q) {
                const std::size_t target = pos[lu_.col[q]];
                if (target != SparseMatrix::npos) lu_.val[target] -= lik * lu_.val[q];
            }
        }
        if (lu_.val[diag_[i]] == 0.0 || !std::isfinite(lu_.val[diag_[i]])) {
            throw std::runtime_error("ilu0: zero pivot in row " + std::to_string(i));
        }
        for (std::size_t p = begin; p < end; ++p) pos[lu_.col[p]] = SparseMatrix::npos;
    }
}

void Ilu0Factors::solve(std::span<const double> in, std::span<double> out) const {
    const std::size_t n = lu_.rows;
    if (in.size() != n || out.size() != n) throw std::invalid_argument("ilu0 solve: dimension mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        double acc = in[i];
        for (std::size_t p = lu_.row_ptr[i]; p < diag_[i]; ++p) acc -= lu_.val[p] * out[lu_.col[p]];
        out[i] = acc;
    }
    for (std::size_t i = n; i-- > 0;) {
        double acc = out[i];
        for (std::size_t p = diag_[i] + 1; p < lu_.row_ptr[i + 1]; ++p) acc -= lu_.val[p] * out[lu_.col[p]];
        out[i] = acc / lu_.val[diag_[i]];
    }
}

Ilu0Factors ilu0(const SparseMatrix& A) { return Ilu0Factors(A); }

double dot(std::span<const double> a, std::span<const double> b) {
    const auto n = static_cast<std::ptrdiff_t>(a.size());
    double acc = 0.0;
#pragma omp parallel for reduction(+ : acc) schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

void apply_precond(const Ilu0Factors* M, std::span<const double> in, std::span<double> out) {
    if (M) {
        M->solve(in, out);
    } else {
        std::copy(in.begin(), in.end(), out.begin());
    }
}

void residual(const SparseMatrix& A, std::span<const double> b, std::span<const double> x,
              std::span<double> r) {
    spmv(A, x, r);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
}

}  // namespace

SolveReport bicgstab(const SparseMatrix& A, std::span<const double> b, std::span<double> x,
                     const Ilu0Factors* precond, const SolverOptions& opts) {
    if (A.rows != A.cols || b.size() != A.rows || x.size() != A.rows) {
        throw std::invalid_argument("bicgstab: dimension mismatch");
    }
    if (!(opts.rel_tol > 0.0)) throw std::invalid_argument("bicgstab: rel_tol must be > 0");

    const std::size_t n = A.rows;
    SolveReport report;
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        report.converged = true;
        return report;
    }
    const double target = opts.rel_tol * bnorm;

    std::vector<double> r(n), rhat(n), p(n), v(n), s(n), t(n), phat(n), shat(n);
    residual(A, b, x, r);
    double rnorm = norm2(r);
    if (rnorm <= target) {
        report.converged = true;
        report.relative_residual = rnorm / bnorm;
        return report;
    }

    constexpr double tiny = std::numeric_limits<double>::min() * 1e10;
    auto restart = [&]() {
        rhat = r;
        std::fill(p.begin(), p.end(), 0.0);
        std::fill(v.begin(), v.end(), 0.0);
    };
    restart();
    double rho = 1.0;
    double alpha = 1.0;
    double omega = 1.0;
    std::size_t breakdowns = 0;

    auto on_breakdown = [&](const char* what) {
        if (++breakdowns > 1) {
            throw std::runtime_error(std::string("bicgstab: breakdown (") + what + ") after restart");
        }
        ++report.restarts;
        residual(A, b, x, r);
        restart();
        rho = alpha = omega = 1.0;
    };

    while (report.iterations < opts.max_iter) {
        const double rho_new = dot(rhat, r);
        if (std::abs(rho_new) < tiny * bnorm * bnorm) {
            on_breakdown("rho");
            continue;
        }
        ++report.iterations;
        const double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        apply_precond(precond, p, phat);
        spmv(A, phat, v);
        const double rv = dot(rhat, v);
        if (rv == 0.0) {
            on_breakdown("rhat.v");
            continue;
        }
        alpha = rho / rv;
        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (norm2(s) <= target) {
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * phat[i];
            residual(A, b, x, r);
            rnorm = norm2(r);
            if (rnorm <= target) {
                report.converged = true;
                break;
            }
            restart();
            rho = alpha = omega = 1.0;
            continue;
        }
        apply_precond(precond, s, shat);
        spmv(A, shat, t);
        const double tt = dot(t, t);
        if (tt == 0.0) {
            on_breakdown("t.t");
            continue;
        }
        omega = dot(t, s) / tt;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        rnorm = norm2(r);
        if (rnorm <= target) {
            residual(A, b, x, r);
            rnorm = norm2(r);
            if (rnorm <= target) {
                report.converged = true;
                break;
            }
            restart();
            rho = alpha = omega = 1.0;
            continue;
        }
        if (std::abs(omega) < tiny) {
            on_breakdown("omega");
        }
    }

    report.relative_residual = rnorm / bnorm;
    if (!report.converged) {
        throw std::runtime_error("bicgstab: no convergence after " + std::to_string(report.iterations) +
                                 " iterations (relative residual " +
                                 std::to_string(report.relative_residual) + ")");
    }
    return report;
}

}  // namespace kou2d

namespace kou2d {

SparseMatrix shifted_identity(const SparseMatrix& A, double alpha) {
    if (A.rows != A.cols) throw std::invalid_argument("shifted_identity: matrix must be square");
    SparseMatrix B;
    B.rows = B.cols = A.rows;
    B.row_ptr.assign(A.rows + 1, 0);
    B.col.reserve(A.nnz() + A.rows);
    B.val.reserve(A.nnz() + A.rows);
    for (std::size_t r = 0; r < A.rows; ++r) {
        bool diag_done = false;
        for (std::size_t p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p) {
            const std::size_t c = A.col[p];
            if (!diag_done && c > r) {
                B.col.push_back(r);
                B.val.push_back(1.0);
                diag_done = true;
            }
            B.col.push_back(c);
            B.val.push_back(alpha * A.val[p] + (c == r ? 1.0 : 0.0));
            if (c == r) diag_done = true;
        }
        if (!diag_done) {
            B.col.push_back(r);
            B.val.push_back(1.0);
        }
        B.row_ptr[r + 1] = B.col.size();
    }
    return B;
}

}  // namespace kou2d
