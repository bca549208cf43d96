#pragma once

// Small dense kernels shared by the modules. Templated on the scalar type so
// they can be reused with extended precision in tests.

#include <Eigen/Dense>

namespace thinlim {

template <typename Scalar>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVecX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Result of an inf over lambda of a sup over mu.
template <typename Scalar>
struct InfSup {
    Scalar value{};
    int lambda = 0;
    int mu = 0;
};

/// min over l < nL of max over m < nM of term(l, m). Strict comparisons, so
/// ties resolve to the lowest index on both levels.
template <typename Scalar, typename Term>
InfSup<Scalar> infSup(int nL, int nM, Term&& term) {
    InfSup<Scalar> best;
    for (int l = 0; l < nL; ++l) {
        Scalar sup{};
        int arg = 0;
        for (int m = 0; m < nM; ++m) {
            Scalar v = term(l, m);
            if (m == 0 || v > sup) {
                sup = v;
                arg = m;
            }
        }
        if (l == 0 || sup < best.value) {
            best.value = sup;
            best.lambda = l;
            best.mu = arg;
        }
    }
    return best;
}

/// A = sigma^T sigma, symmetrized.
template <typename Derived>
MatX<typename Derived::Scalar> diffusionOf(const Eigen::MatrixBase<Derived>& sigma) {
    MatX<typename Derived::Scalar> a = sigma.transpose() * sigma;
    return (a + a.transpose()) / 2;
}

/// v A v^T for a row vector v.
template <typename DV, typename DA>
typename DV::Scalar quadForm(const Eigen::MatrixBase<DV>& v, const Eigen::MatrixBase<DA>& a) {
    return (v * a * v.transpose())(0, 0);
}

/// -tr(A X) - b.p + c r - f, the affine operator of one control.
template <typename Scalar>
Scalar affineOperator(const MatX<Scalar>& a, const VecX<Scalar>& b, Scalar c, Scalar f,
                      const MatX<Scalar>& x, const VecX<Scalar>& p, Scalar r) {
    return -(a.cwiseProduct(x)).sum() - b.dot(p) + c * r - f;
}

/// J = (I_N, -gamma0^T), an N x (N+1) matrix.
template <typename Scalar>
MatX<Scalar> reductionMatrix(const VecX<Scalar>& gamma0) {
    const int n = static_cast<int>(gamma0.size());
    MatX<Scalar> j = MatX<Scalar>::Zero(n, n + 1);
    j.leftCols(n).setIdentity();
    j.col(n) = -gamma0;
    return j;
}

/// (N+1) x (N+1) matrix [[0, v], [v^T, corner]] with v a column of length N.
template <typename Scalar>
MatX<Scalar> bordered(const VecX<Scalar>& v, Scalar corner) {
    const int n = static_cast<int>(v.size());
    MatX<Scalar> m = MatX<Scalar>::Zero(n + 1, n + 1);
    m.block(0, n, n, 1) = v;
    m.block(n, 0, 1, n) = v.transpose();
    m(n, n) = corner;
    return m;
}

/// R = [[(I + y Dg)^{-1}, -(I + y Dg)^{-1} g^T], [0, 1]] where Dg_ij = d_j g_i.
/// Returns false when I + y Dg is numerically singular.
template <typename Scalar>
bool distortionR(const VecX<Scalar>& gamma, const MatX<Scalar>& dGamma, Scalar y,
                 MatX<Scalar>& out) {
    const int n = static_cast<int>(gamma.size());
    MatX<Scalar> m = MatX<Scalar>::Identity(n, n) + y * dGamma;
    Eigen::FullPivLU<MatX<Scalar>> lu(m);
    if (!lu.isInvertible()) return false;
    MatX<Scalar> inv = lu.inverse();
    out = MatX<Scalar>::Zero(n + 1, n + 1);
    out.topLeftCorner(n, n) = inv;
    out.block(0, n, n, 1) = -inv * gamma;
    out(n, n) = Scalar(1);
    return true;
}

/// Smallest eigenvalue of a symmetric matrix.
template <typename Derived>
typename Derived::Scalar minEigenvalue(const Eigen::MatrixBase<Derived>& a) {
    using S = typename Derived::Scalar;
    if (a.rows() == 0) return S(0);
    MatX<S> sym = (a + a.transpose()) / 2;
    Eigen::SelfAdjointEigenSolver<MatX<S>> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

}  // namespace thinlim
