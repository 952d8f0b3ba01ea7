#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace kou2d {

/// Compressed sparse row matrix. Column indices are strictly increasing per row.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr;  // rows + 1 entries
    std::vector<std::size_t> col;
    std::vector<double> val;

    std::size_t nnz() const { return val.size(); }

    /// Position of (r, c) in col/val, or npos when not stored.
    std::size_t find(std::size_t r, std::size_t c) const;
    double at(std::size_t r, std::size_t c) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    static SparseMatrix identity(std::size_t n);
    /// From (row, col, value) triplets; duplicates are summed, zeros are kept.
    struct Triplet {
        std::size_t row;
        std::size_t col;
        double value;
    };
    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);
};

/// y = A x, rows distributed over OpenMP threads.
void spmv(const SparseMatrix& A, std::span<const double> x, std::span<double> y);
std::vector<double> spmv(const SparseMatrix& A, std::span<const double> x);

namespace serial {
/// Single-threaded reference for spmv.
void spmv(const SparseMatrix& A, std::span<const double> x, std::span<double> y);
}  // namespace serial

/// Matrix Market coordinate (real general) dump, 1-based indices.
void write_matrix_market(std::ostream& out, const SparseMatrix& A);

/// Zero-fill incomplete LU on the pattern of A. L has an implicit unit diagonal.
class Ilu0Factors {
public:
    explicit Ilu0Factors(const SparseMatrix& A);

    /// out = (LU)^{-1} in
    void solve(std::span<const double> in, std::span<double> out) const;

    const SparseMatrix& factors() const { return lu_; }

private:
    SparseMatrix lu_;
    std::vector<std::size_t> diag_;
};

Ilu0Factors ilu0(const SparseMatrix& A);

struct SolverOptions {
    double rel_tol = 1e-10;
    std::size_t max_iter = 400;
};

struct SolveReport {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    std::size_t restarts = 0;
};

/// Right-preconditioned BiCGSTAB. x holds the initial guess on entry and the
/// solution on exit. precond may be null. Throws std::runtime_error on
/// non-convergence or on a breakdown that persists after one restart.
SolveReport bicgstab(const SparseMatrix& A, std::span<const double> b, std::span<double> x,
                     const Ilu0Factors* precond, const SolverOptions& opts = {});

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace kou2d

namespace kou2d {

/// I + alpha * A, with a diagonal entry present in every row.
SparseMatrix shifted_identity(const SparseMatrix& A, double alpha);

}  // namespace kou2d
