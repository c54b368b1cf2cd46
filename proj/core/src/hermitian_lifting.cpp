#include "scc/hermitian_lifting.hpp"

#include "scc/errors.hpp"

namespace scc {

Eigen::MatrixXd lift_hermitian(const CMatrix& h) {
  const auto n = h.rows();
  Eigen::MatrixXd s(2 * n, 2 * n);
  s.topLeftCorner(n, n) = h.real();
  s.bottomRightCorner(n, n) = h.real();
  s.topRightCorner(n, n) = -h.imag();
  s.bottomLeftCorner(n, n) = h.imag();
  return s;
}

CMatrix unlift_hermitian(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols() || s.rows() % 2 != 0) {
    throw ContractError("unlift_hermitian: expected a square matrix of even order");
  }
  const auto n = s.rows() / 2;
  const Eigen::MatrixXd re = 0.5 * (s.topLeftCorner(n, n) + s.bottomRightCorner(n, n));
  const Eigen::MatrixXd im = 0.5 * (s.bottomLeftCorner(n, n) - s.topRightCorner(n, n));
  CMatrix h(n, n);
  h.real() = re;
  h.imag() = im;
  return h;
}

CMatrix hermitian_from_params(std::span<const double> params, int dim) {
  if (params.size() < static_cast<std::size_t>(hermitian_param_count(dim))) {
    throw ContractError("hermitian_from_params: too few coordinates");
  }
  CMatrix h(dim, dim);
  std::size_t p = 0;
  for (int a = 0; a < dim; ++a) h(a, a) = params[p++];
  for (int a = 0; a < dim; ++a) {
    for (int b = a + 1; b < dim; ++b) {
      const cplx z(params[p], params[p + 1]);
      p += 2;
      h(a, b) = z;
      h(b, a) = std::conj(z);
    }
  }
  return h;
}

void hermitian_to_params(const CMatrix& h, std::span<double> params) {
  const int dim = static_cast<int>(h.rows());
  if (params.size() < static_cast<std::size_t>(hermitian_param_count(dim))) {
    throw ContractError("hermitian_to_params: output too short");
  }
  std::size_t p = 0;
  for (int a = 0; a < dim; ++a) params[p++] = h(a, a).real();
  for (int a = 0; a < dim; ++a) {
    for (int b = a + 1; b < dim; ++b) {
      const cplx z = 0.5 * (h(a, b) + std::conj(h(b, a)));
      params[p++] = z.real();
      params[p++] = z.imag();
    }
  }
}

Eigen::VectorXd hermitian_linear_coeffs(const CMatrix& c) {
  const int dim = static_cast<int>(c.rows());
  Eigen::VectorXd out(hermitian_param_count(dim));
  Eigen::Index p = 0;
  for (int a = 0; a < dim; ++a) out(p++) = c(a, a).real();
  for (int a = 0; a < dim; ++a) {
    for (int b = a + 1; b < dim; ++b) {
      // Re tr(C E) for E = e_a e_b^T + e_b e_a^T and E = i e_a e_b^T - i e_b e_a^T.
      out(p++) = (c(b, a) + c(a, b)).real();
      out(p++) = (cplx(0.0, 1.0) * (c(b, a) - c(a, b))).real();
    }
  }
  return out;
}

CMatrix hermitian_basis(int p, int dim) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(hermitian_param_count(dim));
  e(p) = 1.0;
  return hermitian_from_params(std::span<const double>(e.data(), static_cast<std::size_t>(e.size())), dim);
}

}  // namespace scc
