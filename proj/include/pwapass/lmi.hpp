#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pwapass/matrix.hpp"

namespace pwapass::lmi {

// ---------------------------------------------------------------------------
// Matrix utilities shared by the theorem modules.

// Largest singular value (induced 2-norm), relative accuracy ~1e-12.
double spectral_norm(const Mat& m);

// Smallest eigenvalue of a symmetric matrix. Throws std::invalid_argument if
// the input is asymmetric beyond 1e-12 (relative to its magnitude).
double min_eigenvalue(const Mat& s);

// For blocks [[A, B], [B^T, C]] with C > 0: checks the block matrix PSD via
// two routes (direct eigenvalues, and the Schur complement A - B C^-1 B^T)
// and requires them to agree. Throws if C is not positive definite or the
// routes disagree beyond tolerance.
bool schur_psd_check(const Mat& a, const Mat& b, const Mat& c, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Block-structured LMI feasibility problems.

enum class VarKind { kSymmetric, kRectangular, kScalar };

struct MatrixVariable {
  std::string name;
  VarKind kind = VarKind::kScalar;
  std::size_t rows = 1, cols = 1;
  int base = 0;             // first scalar index
  std::size_t count = 0;    // number of free scalars
  bool elementwise_positive = false;
  // For symmetric variables with a fixed zero pattern: active_dim < rows means
  // entries outside the leading active_dim x active_dim block are fixed zero
  // (the diag{P, 0} structure of the theorems).
  std::size_t active_dim = 0;
};

enum class Sense { kPsd, kNsd, kPsdStrict };

// t-shifted sign-adjusted margin semantics:
//   kPsd        F(x) >= 0       margin = lambda_min(F)
//   kNsd        F(x) <= 0       margin = lambda_min(-F)
//   kPsdStrict  F(x) >= tau I   margin = lambda_min(F), pass at >= tau - tol
struct Block {
  std::size_t dim = 0;
  Sense sense = Sense::kPsd;
  std::string label;
  Mat constant;
  struct Term {
    std::uint16_t r, c;  // r <= c; stands for both (r,c) and (c,r)
    std::int32_t var;    // scalar index
    double coef;
  };
  std::vector<Term> terms;

  void add_const(std::size_t r, std::size_t c, double v);
  void add_term(std::size_t r, std::size_t c, int scalar_id, double coef);
};

class LmiProblem {
 public:
  int add_symmetric(const std::string& name, std::size_t dim,
                    bool elementwise_positive = false);
  // Symmetric with the trailing rows/cols fixed to zero (diag{P,0} pattern).
  int add_symmetric_corner(const std::string& name, std::size_t dim,
                           std::size_t active_dim);
  int add_rectangular(const std::string& name, std::size_t rows, std::size_t cols);
  int add_scalar(const std::string& name);

  // Scalar index for entry (i,j) of variable v; -1 when the entry is fixed 0.
  int entry(int v, std::size_t i, std::size_t j) const;

  Block& add_block(std::size_t dim, Sense sense, std::string label);

  const std::vector<MatrixVariable>& variables() const { return vars_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  std::size_t num_scalars() const { return next_; }

  Mat block_value(const Block& b, const Vec& x) const;
  // Sign-adjusted margin of one block under assignment x (by eigensolve).
  double block_margin(const Block& b, const Vec& x) const;

  Mat value(int var, const Vec& x) const;

 private:
  std::vector<MatrixVariable> vars_;
  std::vector<Block> blocks_;
  std::size_t next_ = 0;
};

enum class SolveStatus { kFeasible, kInfeasibleCertified, kInconclusive };

struct SolveOptions {
  double tau = 1e-6;        // strictness margin for kPsdStrict blocks
  double tolerance = 1e-7;  // verification tolerance on achieved margins
  double eta_pos = 1e-8;    // floor for elementwise-positive variables
  double box = 1e6;         // |x_p| bound imposed during the search
  double mu0 = 1.0;
  double mu_growth = 10.0;
  double mu_max = 1e12;
  int max_newton_per_stage = 60;
  int max_newton_total = 4000;
  std::uint64_t jitter_seed = 0;  // nonzero: perturb the initial point
};

struct LmiSolution {
  SolveStatus status = SolveStatus::kInconclusive;
  Vec assignment;
  // Per original block, recomputed by direct eigenvalue evaluation (never
  // taken from solver state).
  std::vector<double> margins;
  double worst_violation = 0.0;  // max over blocks of (required - achieved), >= 0
  double t_final = 0.0;
  int newton_iterations = 0;
  std::string detail;

  bool feasible() const { return status == SolveStatus::kFeasible; }
};

// Phase-1 feasibility: minimize t subject to every (sense-normalized) block
// plus t*I being PSD, by a log-barrier interior-point method; the returned
// margins are re-verified eigenvalues of the original blocks.
LmiSolution solve_feasibility(const LmiProblem& p, const SolveOptions& opts = {});

}  // namespace pwapass::lmi
