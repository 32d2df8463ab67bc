#include "mmq/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmq/errors.hpp"

namespace mmq {

Mat::Mat(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, fill) {}

Mat Mat::identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Mat Mat::diag(const Vec& d) {
    Mat m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return m;
}

Mat Mat::transpose() const {
    Mat t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Vec Mat::diagonal() const {
    Vec d(std::min(rows_, cols_));
    for (size_t i = 0; i < d.size(); ++i) d[i] = (*this)(static_cast<int>(i), static_cast<int>(i));
    return d;
}

Mat Mat::operator+(const Mat& o) const {
    Mat r = *this;
    for (size_t i = 0; i < a_.size(); ++i) r.a_[i] += o.a_[i];
    return r;
}

Mat Mat::operator-(const Mat& o) const {
    Mat r = *this;
    for (size_t i = 0; i < a_.size(); ++i) r.a_[i] -= o.a_[i];
    return r;
}

Mat Mat::operator*(const Mat& o) const {
    Mat r(rows_, o.cols_);
    for (int i = 0; i < rows_; ++i) {
        for (int k = 0; k < cols_; ++k) {
            const double v = (*this)(i, k);
            if (v == 0.0) continue;
            for (int j = 0; j < o.cols_; ++j) r(i, j) += v * o(k, j);
        }
    }
    return r;
}

Mat Mat::operator*(double s) const {
    Mat r = *this;
    for (double& x : r.a_) x *= s;
    return r;
}

Vec Mat::operator*(const Vec& v) const {
    Vec r(rows_, 0.0);
    for (int i = 0; i < rows_; ++i) {
        double acc = 0.0;
        for (int j = 0; j < cols_; ++j) acc += (*this)(i, j) * v[j];
        r[i] = acc;
    }
    return r;
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Vec operator+(const Vec& a, const Vec& b) {
    Vec r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

Vec operator-(const Vec& a, const Vec& b) {
    Vec r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

Vec operator*(double s, const Vec& a) {
    Vec r = a;
    for (double& x : r) x *= s;
    return r;
}

double norm_fro(const Mat& m) {
    double s = 0.0;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
}

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

double relative_asymmetry(const Mat& m) {
    const double scale = norm_fro(m);
    if (scale == 0.0) return 0.0;
    double worst = 0.0;
    for (int i = 0; i < m.rows(); ++i)
        for (int j = i + 1; j < m.cols(); ++j)
            worst = std::max(worst, std::fabs(m(i, j) - m(j, i)));
    return worst / scale;
}

Mat SymSpectrum::reconstruct() const { return apply_diag(eigenvalues); }

Mat SymSpectrum::apply_diag(const Vec& mapped) const {
    const int n = eigenvectors.rows();
    Mat r(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += eigenvectors(i, k) * mapped[k] * eigenvectors(j, k);
            r(i, j) = acc;
            r(j, i) = acc;
        }
    }
    return r;
}

SymSpectrum sym_eig(const Mat& m) {
    if (m.rows() != m.cols()) throw ValidationError("sym_eig: matrix is not square");
    if (relative_asymmetry(m) > 1e-10)
        throw ValidationError("sym_eig: matrix is not symmetric within tolerance");

    const int n = m.rows();
    // Work on the symmetrized copy so the tiny asymmetry we tolerated above
    // cannot leak into the result.
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));
    Mat p = Mat::identity(n);

    const double scale = norm_fro(a);
    const double stop = 1e-14 * (scale > 0.0 ? scale : 1.0);

    auto off_norm = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    // Cyclic sweeps; for the sizes at hand convergence takes a handful.
    const int max_sweeps = 128;
    for (int sweep = 0; sweep < max_sweeps && off_norm() > stop; ++sweep) {
        for (int ip = 0; ip < n - 1; ++ip) {
            for (int iq = ip + 1; iq < n; ++iq) {
                const double apq = a(ip, iq);
                if (apq == 0.0) continue;
                const double app = a(ip, ip);
                const double aqq = a(iq, iq);
                const double phi = 0.5 * std::atan2(2.0 * apq, aqq - app);
                const double c = std::cos(phi);
                const double s = std::sin(phi);

                const double new_pp = c * c * app + s * s * aqq - 2.0 * s * c * apq;
                const double new_qq = s * s * app + c * c * aqq + 2.0 * s * c * apq;
                a(ip, ip) = new_pp;
                a(iq, iq) = new_qq;
                a(ip, iq) = 0.0;
                a(iq, ip) = 0.0;
                for (int r = 0; r < n; ++r) {
                    if (r != ip && r != iq) {
                        const double arp = a(r, ip);
                        const double arq = a(r, iq);
                        a(r, ip) = c * arp - s * arq;
                        a(ip, r) = a(r, ip);
                        a(r, iq) = s * arp + c * arq;
                        a(iq, r) = a(r, iq);
                    }
                    const double prp = p(r, ip);
                    const double prq = p(r, iq);
                    p(r, ip) = c * prp - s * prq;
                    p(r, iq) = s * prp + c * prq;
                }
            }
        }
    }

    // Ascending eigenvalue order keeps downstream spectral formulas
    // reproducible bit-for-bit.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        if (a(x, x) != a(y, y)) return a(x, x) < a(y, y);
        return x < y;
    });

    SymSpectrum out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Mat(n, n);
    for (int k = 0; k < n; ++k) {
        out.eigenvalues[k] = a(order[k], order[k]);
        for (int r = 0; r < n; ++r) out.eigenvectors(r, k) = p(r, order[k]);
    }
    return out;
}

Mat sym_sqrt(const Mat& m) {
    SymSpectrum s = sym_eig(m);
    const double scale = norm_fro(m);
    const double tol = 1e-10 * (scale > 0.0 ? scale : 1.0);
    Vec roots(s.eigenvalues.size());
    for (size_t i = 0; i < roots.size(); ++i) {
        double lam = s.eigenvalues[i];
        if (lam < -tol)
            throw NumericalError("sym_sqrt: matrix is not positive semi-definite (eigenvalue " +
                                 std::to_string(lam) + ")");
        roots[i] = lam > 0.0 ? std::sqrt(lam) : 0.0;
    }
    return s.apply_diag(roots);
}

Mat pseudo_inverse(const SymSpectrum& s, double rank_tol) {
    double max_abs = 0.0;
    for (double lam : s.eigenvalues) max_abs = std::max(max_abs, std::fabs(lam));
    if (rank_tol < 0.0) rank_tol = 1e-12 * max_abs;
    Vec inv(s.eigenvalues.size());
    for (size_t i = 0; i < inv.size(); ++i) {
        const double lam = s.eigenvalues[i];
        inv[i] = std::fabs(lam) > rank_tol ? 1.0 / lam : 0.0;
    }
    return s.apply_diag(inv);
}

Mat cholesky(const Mat& m) {
    if (m.rows() != m.cols()) throw ValidationError("cholesky: matrix is not square");
    const int n = m.rows();
    Mat l(n, n);
    for (int j = 0; j < n; ++j) {
        double d = m(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= 0.0)
            throw NumericalError("cholesky: matrix is not positive definite (pivot " +
                                 std::to_string(j) + ")");
        l(j, j) = std::sqrt(d);
        for (int i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

} // namespace mmq
