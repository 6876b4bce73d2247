#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace shgb {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

/// Raised when a numerical invariant breaks (loss of positive definiteness,
/// non-finite values).  Carries a human readable diagnostic.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mirror the upper triangle onto the lower one.
inline void symmetrize_upper(Mat& a)
{
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = j + 1; i < a.rows(); ++i)
            a(i, j) = a(j, i);
}

inline bool all_finite(const Mat& a) { return a.allFinite(); }

/// Attempted Cholesky factorization; true iff `a` is numerically SPD.
inline bool is_positive_definite(const Mat& a)
{
    if (a.rows() != a.cols() || a.rows() == 0 || !a.allFinite())
        return false;
    Eigen::LLT<Mat> llt(a);
    return llt.info() == Eigen::Success;
}

inline double max_asymmetry(const Mat& a)
{
    return (a - a.transpose()).cwiseAbs().maxCoeff();
}

} // namespace shgb
