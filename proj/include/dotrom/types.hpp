#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace dotrom {

using Index = Eigen::Index;
using Complex = std::complex<double>;

using VecR = Eigen::VectorXd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using MatC = Eigen::MatrixXcd;
using SparseR = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Diagonal matrix stored by its nonzero entries, indices strictly increasing.
struct SparseDiagonal {
    std::vector<Index> index;
    std::vector<double> value;

    std::size_t size() const { return index.size(); }
    bool empty() const { return index.empty(); }
};

}  // namespace dotrom
