#pragma once

#include <sgca/linalg.hpp>
#include <sgca/rng.hpp>

#include <cstdlib>
#include <string>

#include <unistd.h>

extern "C" void openblas_set_num_threads(int);

namespace sgca::backend {

/// Decomposes a fixed random symmetric matrix large enough to exercise the
/// blocked LAPACK code paths and checks the reconstruction.
inline bool lapack_self_check(Index dim = 160)
{
    Rng rng(0x5eedULL);
    Matrix a(dim, dim);
    for (Index j = 0; j < dim; ++j)
        for (Index i = 0; i < dim; ++i) a(i, j) = rng.normal();
    const linalg::SymMatrix m = linalg::SymMatrix::symmetrized(a + a.transpose());
    try {
        const linalg::EigenPairs e = linalg::sym_eig(m);
        const double recon =
            (e.vectors * e.values.asDiagonal() * e.vectors.transpose() - m.mat()).norm();
        const double orth =
            (e.vectors.transpose() * e.vectors - Matrix::Identity(dim, dim)).norm();
        const linalg::EigenPairs top = linalg::sym_eig_top(m, 5);
        const double top_err = (top.values - e.values.head(5)).norm();
        return recon < 1e-9 * m.mat().norm() && orth < 1e-9 && top_err < 1e-9 * m.mat().norm();
    } catch (const numerical_error&) {
        return false;
    }
}

/// OpenBLAS picks its kernels when it is loaded. On some hosts the chosen
/// AVX-512 kernels return wrong eigendecompositions; when that happens and
/// OPENBLAS_CORETYPE is unset, re-run the program with a conservative core
/// type. Returns false if the backend is still broken.
inline bool ensure_working_lapack(char** argv)
{
    openblas_set_num_threads(1);
    if (lapack_self_check()) return true;
    if (std::getenv("OPENBLAS_CORETYPE") == nullptr) {
        ::setenv("OPENBLAS_CORETYPE", "Haswell", 1);
        ::execv("/proc/self/exe", argv);
    }
    return false;
}

} // namespace sgca::backend
