#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include "eig.hpp"

#include <lapacke.h>

#include <vector>

namespace rwz::detail {

bool hessenberg_eigenvalues(Eigen::MatrixXcd& h, bool balance, Points& out) {
  const lapack_int n = static_cast<lapack_int>(h.rows());
  out.resize(n);
  if (n == 0) return true;
  lapack_int ilo = 1, ihi = n;
  if (balance) {
    std::vector<double> scale(n);
    if (LAPACKE_zgebal(LAPACK_COL_MAJOR, 'S', n, h.data(), n, &ilo, &ihi, scale.data()) != 0)
      return false;
  }
  lapack_int info = LAPACKE_zhseqr(LAPACK_COL_MAJOR, 'E', 'N', n, ilo, ihi, h.data(), n,
                                   out.data(), nullptr, n);
  return info == 0;
}

}  // namespace rwz::detail
