#pragma once

#include "rwz/core.hpp"

namespace rwz::detail {

// Eigenvalues of an upper Hessenberg matrix (overwritten). Returns false when
// the QR iteration fails to converge. `balance` applies diagonal scaling only,
// which keeps the Hessenberg structure.
bool hessenberg_eigenvalues(Eigen::MatrixXcd& h, bool balance, Points& out);

}  // namespace rwz::detail
