#pragma once

#include "mjls/grid.hpp"
#include "mjls/matrix_field.hpp"

#include <stdexcept>
#include <utility>

namespace mjls {

/// The jump system x(k+1) = A x + B v, y = C x + D v with coefficients
/// sampled on a shared grid. Requires C'D = 0 at every node.
struct MjlsSystem {
    GridPtr grid;
    KernelPtr kernel;
    MatrixField A, B, C, D;

    MjlsSystem(KernelPtr kernel_, MatrixField A_, MatrixField B_, MatrixField C_, MatrixField D_)
        : grid(kernel_->grid()),
          kernel(std::move(kernel_)),
          A(std::move(A_)),
          B(std::move(B_)),
          C(std::move(C_)),
          D(std::move(D_)) {
        if (A.grid() != grid || B.grid() != grid || C.grid() != grid || D.grid() != grid)
            throw std::invalid_argument("system: coefficient fields must share the kernel grid");
        if (A.rows() != A.cols()) throw std::invalid_argument("system: A must be square");
        const long n = A.rows(), r = B.cols(), m = C.rows();
        if (B.rows() != n || C.cols() != n || D.rows() != m || D.cols() != r)
            throw std::invalid_argument("system: coefficient shapes do not compose");
        for (long i = 0; i < grid->size(); ++i) {
            if ((C[i].transpose() * D[i]).cwiseAbs().maxCoeff() > 1e-10)
                throw std::invalid_argument("system: C'D != 0 at node " + std::to_string(i));
        }
    }

    long n() const { return A.rows(); }
    long r() const { return B.cols(); }
    long m() const { return C.rows(); }
};

}  // namespace mjls
