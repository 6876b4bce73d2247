#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "linalg.hpp"

namespace shgb {

/// Parameters of a Gaussian beam
///
///   G(x) = A exp( -(x-X)^T (M + iN) (x-X) / (2 eps) + i P^T (x-X) / eps + i S / eps )
///
/// M is symmetric positive definite (width), N symmetric (phase curvature).
/// Use make() to get a checked instance; the integrator re-validates after
/// every step.
struct GaussianBeam {
    Mat M;
    Mat N;
    Vec X;
    Vec P;
    double S = 0.0;
    cplx A = 0.0;

    [[nodiscard]] Eigen::Index dim() const { return X.size(); }

    /// Symmetrizes M and N from their upper triangles and validates.
    static GaussianBeam make(Mat M, Mat N, Vec X, Vec P, double S, cplx A)
    {
        symmetrize_upper(M);
        symmetrize_upper(N);
        GaussianBeam b{std::move(M), std::move(N), std::move(X), std::move(P), S, A};
        b.validate();
        return b;
    }

    /// Isotropic beam with M = width*I, N = 0.
    static GaussianBeam isotropic(const Vec& X, double width, cplx A, const Vec& P = Vec(),
                                  double S = 0.0)
    {
        const auto m = X.size();
        return make(width * Mat::Identity(m, m), Mat::Zero(m, m), X,
                    P.size() == 0 ? Vec::Zero(m) : P, S, A);
    }

    void validate() const
    {
        const auto m = X.size();
        if (m == 0)
            throw std::invalid_argument("GaussianBeam: empty center");
        if (P.size() != m || M.rows() != m || M.cols() != m || N.rows() != m || N.cols() != m)
            throw std::invalid_argument("GaussianBeam: inconsistent parameter dimensions");
        if (!X.allFinite() || !P.allFinite() || !M.allFinite() || !N.allFinite() ||
            !std::isfinite(S) || !std::isfinite(A.real()) || !std::isfinite(A.imag()))
            throw NumericalError("GaussianBeam: non-finite parameter");
        if (!is_positive_definite(M)) {
            std::ostringstream os;
            os << "GaussianBeam: width matrix M is not positive definite:\n" << M;
            throw NumericalError(os.str());
        }
    }
};

/// Complex exponent of the beam at x, excluding the amplitude.
inline cplx beam_exponent(const GaussianBeam& b, double epsilon, const Vec& x)
{
    const Vec d = x - b.X;
    const double quad_re = d.dot(b.M * d);
    const double quad_im = d.dot(b.N * d);
    const double lin = b.P.dot(d);
    return cplx(-quad_re / (2.0 * epsilon), (-0.5 * quad_im + lin + b.S) / epsilon);
}

inline cplx eval_beam(const GaussianBeam& b, double epsilon, const Vec& x)
{
    if (!(epsilon > 0.0))
        throw std::invalid_argument("eval_beam: epsilon must be positive");
    if (x.size() != b.dim())
        throw std::invalid_argument("eval_beam: point/beam dimension mismatch");
    if (!x.allFinite())
        throw std::invalid_argument("eval_beam: non-finite evaluation point");
    return b.A * std::exp(beam_exponent(b, epsilon, x));
}

/// Analytic L2 norm |A| (pi eps)^{m/4} det(M)^{-1/4}.
inline double beam_l2_norm(const GaussianBeam& b, double epsilon)
{
    const double m = static_cast<double>(b.dim());
    const double det = Eigen::LLT<Mat>(b.M).matrixL().determinant();
    // det(L)^2 = det(M)
    return std::abs(b.A) * std::pow(kPi * epsilon, m / 4.0) / std::sqrt(det);
}

} // namespace shgb
