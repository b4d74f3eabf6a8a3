#pragma once

#include "sigdr/streams.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace sigdr {

enum class GramKind { mmd_sq, kernel };

// Symmetric matrix of group-level kernel evaluations, either squared
// expected-signature MMDs or the Gaussian-type kernel exp(-sigma^2 mmd^2).
struct GramMatrix {
  Eigen::MatrixXd entries;
  GramKind kind = GramKind::mmd_sq;
  double sigma = 0.0;
  int refinement = 0;
};

// Signature kernel <S(x), S(y)> as the corner value of the Goursat PDE
//   u_st = (dx/ds . dy/dt) u,  u(a,.) = u(.,a) = 1,
// solved by the explicit first-order scheme
//   U[i+1,j+1] = U[i,j+1] + U[i+1,j] + (dx.dy - 1) U[i,j]
// on the dyadic grid that splits every data interval into 2^refinement
// steps. Only knot increments enter, so the result is invariant to
// reparametrization of either argument.
double pde_solve(const TimeSeries& x, const TimeSeries& y, int refinement);

// Squared expected-signature MMD E_aa + E_bb - 2 E_ab, each block the mean
// of pairwise signature-kernel evaluations.
double mmd_sq(const EmpiricalMeasure& a, const EmpiricalMeasure& b, int refinement);

// All pairwise squared MMDs between groups (kind = mmd_sq, zero diagonal).
// Within-group kernel blocks are computed once and shared across pairs.
GramMatrix mmd_gram(const std::vector<EmpiricalMeasure>& groups, int refinement);

// Rectangular squared-MMD matrix between two group lists.
Eigen::MatrixXd mmd_cross(const std::vector<EmpiricalMeasure>& rows,
                          const std::vector<EmpiricalMeasure>& cols, int refinement);

// Gaussian-type universal kernel entries exp(-sigma^2 mmd_sq). A squared
// MMD below -1e-6 aborts with the offending pair; smaller negatives are
// clamped to zero.
GramMatrix kes_gram(const GramMatrix& mmd, double sigma);
GramMatrix kes_gram(const std::vector<EmpiricalMeasure>& groups, double sigma, int refinement);

// Gram CSV: one header line `kind,sigma,refinement,size` followed by the
// M x M entries, allowing model fits without recomputation.
void save_gram_csv(const GramMatrix& gram, const std::string& path);
GramMatrix load_gram_csv(const std::string& path);

}  // namespace sigdr
