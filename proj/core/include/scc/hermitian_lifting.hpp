#pragma once

#include <span>

#include <Eigen/Dense>

#include "scc/system_model.hpp"

namespace scc {

/// Real symmetric embedding [Re -Im; Im Re] of a Hermitian matrix. PSD-ness,
/// eigenvalues (each doubled) and products are preserved.
Eigen::MatrixXd lift_hermitian(const CMatrix& h);

/// Inverse of lift_hermitian. Averages the redundant blocks, so it also
/// projects a perturbed embedding back onto the embedded subspace.
CMatrix unlift_hermitian(const Eigen::MatrixXd& s);

/// Real coordinates of an n x n Hermitian matrix: the n diagonal entries,
/// then (Re, Im) of each strictly upper entry in row-major order.
constexpr int hermitian_param_count(int dim) { return dim * dim; }

CMatrix hermitian_from_params(std::span<const double> params, int dim);
void hermitian_to_params(const CMatrix& h, std::span<double> params);

/// Coordinates c such that Re tr(C V) = c . params(V) for Hermitian C.
Eigen::VectorXd hermitian_linear_coeffs(const CMatrix& c);

/// Hermitian basis matrix E_p of coordinate p.
CMatrix hermitian_basis(int p, int dim);

}  // namespace scc
