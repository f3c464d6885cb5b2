// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>
#include <vector>

#include "nsa/birman_schwinger.hpp"

namespace nsa {

struct Chain {
  int k = 0;
  std::vector<CVec> psi;  // psi[j-1] = psi_{j,k}; N psi_{j,k} = psi_{j-1,k}
};

struct JordanBasis {
  int K = 0;
  std::vector<int> L;         // L[k-1] = number of chains of length k
  std::vector<Chain> chains;  // ordered by k, then by chain index
  CMat form;                  // B(u, v) = u^T form v (coefficient bases)
  CMat gram;                  // pairing certificate in stacked order
  GridPtr grid;               // set when vectors are grid samples; B = bilinear_pair

  int dim() const;
  CMat stacked() const;  // columns (chain, j) in order
  cd pair(const CVec& u, const CVec& v) const;
};

struct BasisCertificate {
  double chain_residual = 0.0;  // max |N psi_j - psi_{j-1}| (psi_0 := 0), relative to max |psi|
  double pairing_error = 0.0;   // max |gram - pattern|
  double prop54_error = 0.0;    // max |pair| over j1 + j2 <= max(k1, k2)
  int dim_expected = 0;
  int dim_found = 0;
  bool dim_ok() const { return dim_expected == dim_found; }
};

// pattern: 1 iff same chain and j1 + j2 = k + 1
CMat pairing_pattern(const JordanBasis& b);
BasisCertificate certify(const JordanBasis& b, const CMat& N, int space_dim);

struct JordanOptions {
  double tol_rank = 1e-8;  // relative to scale^k for ranks of N^k
  double scale = 0.0;      // 0: use max(1, ||N||_2)
  double tol_sym = 1e-8;
};

// self-dual Jordan basis of a nilpotent N, symmetric for B(u,v) = u^T G v
JordanBasis jordan_dual_basis(const CMat& N, const CMat& G, const JordanOptions& opt = {});
// grid operator version, B = bilinear_pair
JordanBasis jordan_dual_basis(const DenseOperator& N, const JordanOptions& opt = {});

// complex symmetric nilpotent with the given Jordan block sizes, conjugated by a
// random complex-orthogonal matrix exp(S), S skew with entries of size mix
CMat make_symmetric_nilpotent(const std::vector<int>& blocks, std::mt19937_64& rng, double mix = 0.4);

// zero-energy machinery on a grid

struct NullPair {
  CVec g;    // (I + V R0(0)) g = 0, unit 2-norm
  CVec Psi;  // R0(0) g
};

std::vector<NullPair> nullspace_X1(const PotentialSpec& V, GridPtr grid, double tol_rank = 1e-8);

enum class Verdict { EIGENVALUE, RESONANCE };
const char* verdict_name(Verdict v);

struct StateClass {
  Verdict verdict = Verdict::EIGENVALUE;
  double c0 = 0.0, c1 = 0.0;
  double inner_scale = 0.0;
  double l1 = 0.0, l2 = 0.0, linf = 0.0;
};

// profile psi(r) (set reduced = true to pass u = r psi)
StateClass classify_state(const GridFunction& Psi, double tol_res = 1e-2, bool reduced = false);

struct Filtration {
  std::vector<CMat> spaces;  // orthonormal bases of X_1 ⊂ X_2 ⊂ ... ⊂ X_K
  std::vector<int> dims;
  int K() const { return static_cast<int>(spaces.size()); }
};

Filtration build_filtration(const PotentialSpec& V, GridPtr grid, double tol_rank = 1e-8, int max_levels = 0);

// discretized H = A + V (MATRIX)
CMat hamiltonian_matrix(const PotentialSpec& V);

JordanBasis build_threshold_basis(const PotentialSpec& V, GridPtr grid, double tol_rank = 1e-8);

DenseOperator build_P0(const JordanBasis& b);
DenseOperator build_Ptilde0(const JordanBasis& b);
DenseOperator build_Qtilde0(const JordanBasis& b);

struct ThresholdReport {
  std::vector<int> dims;
  std::vector<Verdict> verdicts;
  std::vector<double> c0;
  double tol_rank = 1e-8, tol_res = 1e-2;
  GridMode mode = GridMode::RADIAL_SWAVE;
  double L = 0.0;
  int M = 0;
};

ThresholdReport threshold_report(const PotentialSpec& V, GridPtr grid, double tol_rank = 1e-8,
                                 double tol_res = 1e-2);

struct PppOptions {
  double delta_edge = -1.0;   // < 0: 3x lowest free-grid eigenvalue
  double tol_imag = 0.25;     // |Im| above this counts as point spectrum
  double tol_cluster = 1e-6;  // relative clustering tolerance
  double tol_rank = 1e-8;
  bool include_zero = true;   // add P0 when the threshold space is nontrivial
};

struct PppResult {
  DenseOperator P;
  std::vector<cd> centers;           // cluster centres (zero last, if present)
  std::vector<DenseOperator> parts;  // one projector per cluster
};

PppResult build_Ppp(const PotentialSpec& V, GridPtr grid, const PppOptions& opt = {});

struct ChainFixture {
  PotentialSpec V;  // values = 0, extra = F
  CMat Y;           // prescribed chain vectors
  std::vector<int> L;
};

// H_fix = A + F with F finite-rank complex symmetric and ker structure L (L[k-1] chains of length k)
ChainFixture build_chain_fixture(GridPtr grid, const std::vector<int>& L, std::uint64_t seed = 1);

// dims of ker H^k for k = 1..kmax
std::vector<int> kernel_staircase(const CMat& H, int kmax, double tol_rank = 1e-8);

}  // namespace nsa
