#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace qres {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Dims = std::vector<int>;

// Bad input or an operation outside its domain (unphysical matrix, wrong dims, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The truncated Fock space is too small for the requested accuracy.
class TruncationError : public DomainError {
 public:
  using DomainError::DomainError;
};

inline long long product(const Dims& dims) {
  long long p = 1;
  for (int d : dims) p *= d;
  return p;
}

}  // namespace qres
