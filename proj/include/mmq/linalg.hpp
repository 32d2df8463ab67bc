#pragma once

#include <vector>

namespace mmq {

using Vec = std::vector<double>;

/// Dense row-major matrix. Sized for the small symmetric systems that show up
/// in multi-asset quoting (d of a few tens at most); no view/expression
/// machinery on purpose.
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols, double fill = 0.0);

    static Mat identity(int n);
    static Mat diag(const Vec& d);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

    Mat transpose() const;
    Vec diagonal() const;

    Mat operator+(const Mat& o) const;
    Mat operator-(const Mat& o) const;
    Mat operator*(const Mat& o) const;
    Mat operator*(double s) const;
    Vec operator*(const Vec& v) const;

    bool operator==(const Mat& o) const = default;

    const double* data() const { return a_.data(); }
    double* data() { return a_.data(); }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

double dot(const Vec& a, const Vec& b);
Vec operator+(const Vec& a, const Vec& b);
Vec operator-(const Vec& a, const Vec& b);
Vec operator*(double s, const Vec& a);

/// Frobenius norm.
double norm_fro(const Mat& m);
double norm2(const Vec& v);

/// Largest |off-diagonal asymmetry| relative to the Frobenius norm.
double relative_asymmetry(const Mat& m);

/// Eigendecomposition of a symmetric matrix, M = P diag(lambda) P^T.
/// Eigenvalues are sorted ascending; eigenvectors are the matching columns of P.
struct SymSpectrum {
    Vec eigenvalues;
    Mat eigenvectors;

    Mat reconstruct() const;
    /// P diag(f(lambda_i)) P^T for an already-mapped set of diagonal values.
    Mat apply_diag(const Vec& mapped) const;
};

/// Cyclic Jacobi diagonalization. Input must be symmetric within 1e-10
/// relative asymmetry; throws ValidationError otherwise. Deterministic:
/// identical input bits give identical output bits.
SymSpectrum sym_eig(const Mat& m);

/// Symmetric PSD square root via the spectral decomposition. Eigenvalues in
/// [-1e-10*||M||, 0) are clamped to zero (rounding noise in user-assembled
/// correlation matrices); anything more negative throws NumericalError.
Mat sym_sqrt(const Mat& m);

/// Moore-Penrose pseudo-inverse from a spectrum. Eigenvalues with
/// |lambda| <= rank_tol are treated as exactly zero. rank_tol < 0 selects the
/// default 1e-12 * max|lambda|.
Mat pseudo_inverse(const SymSpectrum& s, double rank_tol = -1.0);

/// Lower-triangular Cholesky factor of a positive definite matrix.
/// Throws NumericalError when a pivot is not strictly positive.
Mat cholesky(const Mat& m);

} // namespace mmq
