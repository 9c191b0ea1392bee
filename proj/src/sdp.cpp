#include "cran/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace cran {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalLimit: return "numerical_limit";
  }
  return "unknown";
}

int ConicProgram::add_psd_block(std::string name, int dim) {
  if (dim <= 0) throw std::invalid_argument("add_psd_block: dimension must be positive");
  blocks_.push_back({std::move(name), dim});
  return static_cast<int>(blocks_.size()) - 1;
}

int ConicProgram::add_scalar(std::string name, ScalarSign sign) {
  scalars_.push_back({std::move(name), sign});
  return static_cast<int>(scalars_.size()) - 1;
}

int ConicProgram::add_constraint(LinearConstraint c) {
  constraints_.push_back(std::move(c));
  return static_cast<int>(constraints_.size()) - 1;
}

void ConicProgram::set_objective(Sense sense, std::vector<BlockTerm> blocks, std::vector<ScalarTerm> scalars) {
  sense_ = sense;
  obj_blocks_ = std::move(blocks);
  obj_scalars_ = std::move(scalars);
}

namespace {

void check_terms(const ConicProgram& p, const std::vector<BlockTerm>& bt, const std::vector<ScalarTerm>& st,
                 const std::string& where) {
  for (const auto& t : bt) {
    if (t.block < 0 || t.block >= static_cast<int>(p.blocks().size())) {
      throw std::invalid_argument(where + ": block index out of range");
    }
    if (t.coeff.dim() != p.blocks()[t.block].dim) {
      throw std::invalid_argument(where + ": coefficient dimension does not match block '" +
                                  p.blocks()[t.block].name + "'");
    }
    if (!t.coeff.allFinite()) throw std::invalid_argument(where + ": non-finite block coefficient");
  }
  for (const auto& t : st) {
    if (t.var < 0 || t.var >= static_cast<int>(p.scalars().size())) {
      throw std::invalid_argument(where + ": scalar index out of range");
    }
    if (!std::isfinite(t.coeff)) throw std::invalid_argument(where + ": non-finite scalar coefficient");
  }
}

}  // namespace

void ConicProgram::validate() const {
  check_terms(*this, obj_blocks_, obj_scalars_, "objective");
  for (std::size_t c = 0; c < constraints_.size(); ++c) {
    const auto& con = constraints_[c];
    const std::string where = "constraint " + std::to_string(c) + " '" + con.name + "'";
    check_terms(*this, con.blocks, con.scalars, where);
    if (!std::isfinite(con.rhs)) throw std::invalid_argument(where + ": non-finite right-hand side");
    double nrm = 0.0;
    for (const auto& t : con.blocks) nrm += t.coeff.matrix().squaredNorm();
    for (const auto& t : con.scalars) nrm += t.coeff * t.coeff;
    if (nrm == 0.0) throw std::invalid_argument(where + ": all coefficients are zero");
  }
  for (std::size_t s = 0; s < scalars_.size(); ++s) {
    if (scalars_[s].sign != ScalarSign::Free) continue;
    bool used = false;
    for (const auto& con : constraints_) {
      for (const auto& t : con.scalars) used = used || (t.var == static_cast<int>(s) && t.coeff != 0.0);
    }
    if (!used) throw std::invalid_argument("free scalar '" + scalars_[s].name + "' appears in no constraint");
  }
}

double ConicProgram::objective(const std::vector<HermitianMatrixXd>& xb, const std::vector<double>& xs) const {
  double v = 0.0;
  for (const auto& t : obj_blocks_) v += trace_inner(t.coeff, xb.at(t.block));
  for (const auto& t : obj_scalars_) v += t.coeff * xs.at(t.var);
  return v;
}

double ConicProgram::lhs(std::size_t c, const std::vector<HermitianMatrixXd>& xb,
                         const std::vector<double>& xs) const {
  const auto& con = constraints_.at(c);
  double v = 0.0;
  for (const auto& t : con.blocks) v += trace_inner(t.coeff, xb.at(t.block));
  for (const auto& t : con.scalars) v += t.coeff * xs.at(t.var);
  return v;
}

void ConicProgram::dump(std::ostream& os) const {
  os.precision(17);
  os << "conic-program v1\n";
  os << "blocks " << blocks_.size() << "\n";
  for (const auto& b : blocks_) os << "  block " << b.name << " " << b.dim << "\n";
  os << "scalars " << scalars_.size() << "\n";
  for (const auto& s : scalars_) {
    os << "  scalar " << s.name << " " << (s.sign == ScalarSign::Free ? "free" : "nonneg") << "\n";
  }
  auto dump_terms = [&](const std::vector<BlockTerm>& bt, const std::vector<ScalarTerm>& st) {
    for (const auto& t : bt) {
      os << "    term block " << blocks_[t.block].name << "\n";
      const auto& m = t.coeff.matrix();
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << "     ";
        for (Eigen::Index j = 0; j < m.cols(); ++j) os << " " << m(i, j).real() << "," << m(i, j).imag();
        os << "\n";
      }
    }
    for (const auto& t : st) os << "    term scalar " << scalars_[t.var].name << " " << t.coeff << "\n";
  };
  os << "objective " << (sense_ == Sense::Minimize ? "min" : "max") << "\n";
  dump_terms(obj_blocks_, obj_scalars_);
  os << "constraints " << constraints_.size() << "\n";
  for (const auto& c : constraints_) {
    const char* rel = c.relation == Relation::LessEqual ? "<=" : c.relation == Relation::GreaterEqual ? ">=" : "=";
    os << "  constraint " << c.name << " " << rel << " " << c.rhs << "\n";
    dump_terms(c.blocks, c.scalars);
  }
}

std::vector<HermitianMatrixXd> assemble_dual_slacks(const ConicProgram& program, const std::vector<double>& duals) {
  if (duals.size() != program.constraints().size()) {
    throw std::invalid_argument("assemble_dual_slacks: dual vector length does not match constraint count");
  }
  const double sigma = program.sense() == Sense::Minimize ? 1.0 : -1.0;
  std::vector<HermitianMatrixXd> slacks;
  for (const auto& b : program.blocks()) slacks.push_back(HermitianMatrixXd::Zero(b.dim));
  for (const auto& t : program.objective_blocks()) slacks[t.block] += sigma * t.coeff;
  for (std::size_t c = 0; c < duals.size(); ++c) {
    for (const auto& t : program.constraints()[c].blocks) slacks[t.block] += (-duals[c]) * t.coeff;
  }
  return slacks;
}

// ---------------------------------------------------------------------------
// Interior-point core.
//
// The user program is
//     min  <C, X> + c_n' x_n + c_f' x_f
//     s.t. A(X) + A_n x_n + A_f x_f = r,   X psd, x_n >= 0
// (inequalities get a nonnegative slack). It is solved as the *dual* of the
// cone LP
//     min  -r' u   s.t.  G u + s = h,  A u = b,  s in K,
// whose dual reads  max -h' z - b' y  s.t.  G' z + A' y - r = 0, z in K.
// Matching terms: z = (x_n, slacks, T(X)), y = x_f, h = (c_n, 0, T(C)/2),
// b = c_f, and G' = [A_n, +-1, A/2 on embedded blocks]. The multipliers u
// are the user's dual variables and s = h - G u is the user's dual slack.
// The cone LP is solved through a homogeneous self-dual embedding with
// Nesterov-Todd scaling and a Mehrotra predictor-corrector.
// ---------------------------------------------------------------------------
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Element of the product cone R^l_+ x S^{n_1}_+ x ... (real symmetric blocks).
struct ConeVec {
  VectorXd l;
  std::vector<MatrixXd> s;

  double dot(const ConeVec& o) const {
    double v = l.dot(o.l);
    for (std::size_t b = 0; b < s.size(); ++b) v += (s[b].array() * o.s[b].array()).sum();
    return v;
  }
  double norm() const { return std::sqrt(dot(*this)); }
  void axpy(double a, const ConeVec& o) {
    l += a * o.l;
    for (std::size_t b = 0; b < s.size(); ++b) s[b] += a * o.s[b];
  }
  ConeVec scaled(double a) const {
    ConeVec r = *this;
    r.l *= a;
    for (auto& m : r.s) m *= a;
    return r;
  }
};

ConeVec zeros_like(const ConeVec& v) {
  ConeVec r;
  r.l = VectorXd::Zero(v.l.size());
  for (const auto& m : v.s) r.s.push_back(MatrixXd::Zero(m.rows(), m.cols()));
  return r;
}

Eigen::Map<const VectorXd> flatten(const MatrixXd& m) { return {m.data(), m.size()}; }

MatrixXd unflatten(const VectorXd& v, Index n) { return Eigen::Map<const MatrixXd>(v.data(), n, n); }

ConeVec identity_like(const ConeVec& v) {
  ConeVec r;
  r.l = VectorXd::Ones(v.l.size());
  for (const auto& m : v.s) r.s.push_back(MatrixXd::Identity(m.rows(), m.cols()));
  return r;
}

/// Symmetrize and project onto the complex-embedding structure
/// [[R, -I], [I, R]] with R symmetric, I skew.
void project_embedding(MatrixXd& m) {
  const Index n = m.rows() / 2;
  const MatrixXd sym = (m + m.transpose()) / 2.0;
  const MatrixXd re = (sym.topLeftCorner(n, n) + sym.bottomRightCorner(n, n)) / 2.0;
  const MatrixXd im = (sym.bottomLeftCorner(n, n) - sym.topRightCorner(n, n)) / 2.0;
  m.topLeftCorner(n, n) = re;
  m.bottomRightCorner(n, n) = re;
  m.bottomLeftCorner(n, n) = im;
  m.topRightCorner(n, n) = -im;
}

/// Largest t with  v + t e  on the boundary, i.e.  -lambda_min(v).
double max_shift(const ConeVec& v) {
  double t = -std::numeric_limits<double>::infinity();
  if (v.l.size() > 0) t = std::max(t, -v.l.minCoeff());
  for (const auto& m : v.s) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    t = std::max(t, -es.eigenvalues()(0));
  }
  return t;
}

/// Nesterov-Todd scaling W with  W z = W^{-T} s = lambda.
///   nonnegative part:  W = diag(d), d = sqrt(s / z)
///   block part:        W z = r' z r,  W^{-T} s = rti' s rti,  rti = r^{-T}
struct NtScaling {
  VectorXd d;
  VectorXd lam_l;
  std::vector<MatrixXd> r, rti;
  std::vector<VectorXd> lam_s;  // lambda is diagonal on blocks

  // W^{-T} v
  ConeVec apply_inv_t(const ConeVec& v) const {
    ConeVec o;
    o.l = v.l.cwiseQuotient(d);
    for (std::size_t b = 0; b < v.s.size(); ++b) o.s.push_back(rti[b].transpose() * v.s[b] * rti[b]);
    return o;
  }
  // W' v
  ConeVec apply_t(const ConeVec& v) const {
    ConeVec o;
    o.l = v.l.cwiseProduct(d);
    for (std::size_t b = 0; b < v.s.size(); ++b) o.s.push_back(r[b] * v.s[b] * r[b].transpose());
    return o;
  }
  // W^{-1} v
  ConeVec apply_inv(const ConeVec& v) const {
    ConeVec o;
    o.l = v.l.cwiseQuotient(d);
    for (std::size_t b = 0; b < v.s.size(); ++b) o.s.push_back(rti[b] * v.s[b] * rti[b].transpose());
    return o;
  }
  ConeVec lambda() const {
    ConeVec o;
    o.l = lam_l;
    for (const auto& lv : lam_s) o.s.push_back(lv.asDiagonal());
    return o;
  }
};

bool compute_scaling(const ConeVec& s, const ConeVec& z, NtScaling& w) {
  if ((s.l.array() <= 0).any() || (z.l.array() <= 0).any()) return false;
  w.d = (s.l.array() / z.l.array()).sqrt();
  w.lam_l = (s.l.array() * z.l.array()).sqrt();
  w.r.clear();
  w.rti.clear();
  w.lam_s.clear();
  for (std::size_t b = 0; b < s.s.size(); ++b) {
    Eigen::LLT<MatrixXd> ls(s.s[b]), lz(z.s[b]);
    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
    const MatrixXd Ls = ls.matrixL();
    const MatrixXd Lz = lz.matrixL();
    const MatrixXd prod = Lz.transpose() * Ls;
    // prod = U diag(lam) V'. Near the central path all lam_i are close, so
    // the eigendecomposition of prod prod' is as accurate as an SVD and much
    // cheaper; fall back to the SVD when the spread is large.
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(prod * prod.transpose());
    VectorXd lam2 = es.eigenvalues();
    MatrixXd U, V;
    VectorXd lam;
    if (es.info() == Eigen::Success && lam2.minCoeff() > 1e-8 * lam2.maxCoeff()) {
      lam = lam2.cwiseSqrt();
      U = es.eigenvectors();
      V = prod.transpose() * U * lam.cwiseInverse().asDiagonal();
    } else {
      Eigen::JacobiSVD<MatrixXd> svd(prod, Eigen::ComputeFullU | Eigen::ComputeFullV);
      lam = svd.singularValues();
      U = svd.matrixU();
      V = svd.matrixV();
    }
    if (!(lam.array() > 0).all()) return false;
    const VectorXd isq = lam.array().rsqrt();
    w.r.push_back(Ls * V * isq.asDiagonal());
    w.rti.push_back(Lz * U * isq.asDiagonal());
    w.lam_s.push_back(lam);
  }
  return true;
}

// lambda o v (symmetrized product with diagonal lambda)
ConeVec lam_prod(const NtScaling& w, const ConeVec& v) {
  ConeVec o;
  o.l = w.lam_l.cwiseProduct(v.l);
  for (std::size_t b = 0; b < v.s.size(); ++b) {
    const VectorXd& lv = w.lam_s[b];
    MatrixXd m = v.s[b];
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i) m(i, j) *= (lv(i) + lv(j)) / 2.0;
    o.s.push_back(std::move(m));
  }
  return o;
}

// (lambda o)^{-1} v
ConeVec lam_solve(const NtScaling& w, const ConeVec& v) {
  ConeVec o;
  o.l = v.l.cwiseQuotient(w.lam_l);
  for (std::size_t b = 0; b < v.s.size(); ++b) {
    const VectorXd& lv = w.lam_s[b];
    MatrixXd m = v.s[b];
    for (Index j = 0; j < m.cols(); ++j)
      for (Index i = 0; i < m.rows(); ++i) m(i, j) *= 2.0 / (lv(i) + lv(j));
    o.s.push_back(std::move(m));
  }
  return o;
}

// a o b for general (unscaled) symmetric blocks
ConeVec circ(const ConeVec& a, const ConeVec& b) {
  ConeVec o;
  o.l = a.l.cwiseProduct(b.l);
  for (std::size_t k = 0; k < a.s.size(); ++k) o.s.push_back((a.s[k] * b.s[k] + b.s[k] * a.s[k]) / 2.0);
  return o;
}

/// Largest alpha <= inf with lambda + alpha * v in the cone.
double max_step_scaled(const NtScaling& w, const ConeVec& v) {
  double alpha = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < v.l.size(); ++i) {
    if (v.l(i) < 0) alpha = std::min(alpha, -w.lam_l(i) / v.l(i));
  }
  for (std::size_t b = 0; b < v.s.size(); ++b) {
    const VectorXd isq = w.lam_s[b].array().rsqrt();
    MatrixXd m = isq.asDiagonal() * v.s[b] * isq.asDiagonal();
    m = (m + m.transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double mn = es.eigenvalues()(0);
    if (mn < 0) alpha = std::min(alpha, -1.0 / mn);
  }
  return alpha;
}

/// Internal cone LP in the layout described above.
struct ConeLp {
  Index m = 0;   // constraints of the user program (= dimension of u)
  Index p = 0;   // free user scalars
  VectorXd c;    // -r (scaled rows)
  MatrixXd A;    // p x m
  VectorXd b;    // p
  ConeVec h;
  MatrixXd Gl;                            // n_l x m
  std::vector<std::vector<MatrixXd>> Gs;  // Gs[block][row]
  std::vector<MatrixXd> Gs_flat;          // column k of block b is vec(Gs[b][k])
  std::vector<bool> block_is_embedded;
  VectorXd row_scale;
  Index degree = 0;

  ConeVec G(const VectorXd& u) const {
    ConeVec o;
    o.l = Gl * u;
    for (std::size_t b = 0; b < Gs.size(); ++b) o.s.push_back(unflatten(Gs_flat[b] * u, Gs[b][0].rows()));
    return o;
  }
  VectorXd Gt(const ConeVec& z) const {
    VectorXd o = Gl.transpose() * z.l;
    for (std::size_t b = 0; b < Gs.size(); ++b) o.noalias() += Gs_flat[b].transpose() * flatten(z.s[b]);
    return o;
  }
};

struct Layout {
  std::vector<int> nonneg_pos;   // user scalar -> index in l part (or -1)
  std::vector<int> free_pos;     // user scalar -> index in y (or -1)
  std::vector<int> slack_pos;    // constraint -> index in l part (or -1)
};

ConeLp build_cone_lp(const ConicProgram& prog, Layout& layout) {
  ConeLp lp;
  const double sigma = prog.sense() == Sense::Minimize ? 1.0 : -1.0;
  const auto& cons = prog.constraints();
  lp.m = static_cast<Index>(cons.size());

  Index nl = 0;
  layout.nonneg_pos.assign(prog.scalars().size(), -1);
  layout.free_pos.assign(prog.scalars().size(), -1);
  for (std::size_t s = 0; s < prog.scalars().size(); ++s) {
    if (prog.scalars()[s].sign == ScalarSign::Nonnegative) {
      layout.nonneg_pos[s] = static_cast<int>(nl++);
    } else {
      layout.free_pos[s] = static_cast<int>(lp.p++);
    }
  }
  layout.slack_pos.assign(cons.size(), -1);
  for (std::size_t c = 0; c < cons.size(); ++c) {
    if (cons[c].relation != Relation::Equal) layout.slack_pos[c] = static_cast<int>(nl++);
  }

  // Row equilibration: unit Euclidean norm of each row's coefficients
  // (embedded blocks measured in the user's trace inner product).
  lp.row_scale.resize(lp.m);
  for (Index c = 0; c < lp.m; ++c) {
    double nrm = 0.0;
    for (const auto& t : cons[c].blocks) nrm += t.coeff.matrix().squaredNorm();
    for (const auto& t : cons[c].scalars) nrm += t.coeff * t.coeff;
    lp.row_scale(c) = 1.0 / std::sqrt(nrm);
  }

  lp.c.resize(lp.m);
  for (Index c = 0; c < lp.m; ++c) lp.c(c) = -cons[c].rhs * lp.row_scale(c);

  lp.A = MatrixXd::Zero(lp.p, lp.m);
  lp.b = VectorXd::Zero(lp.p);
  lp.Gl = MatrixXd::Zero(nl, lp.m);
  lp.h.l = VectorXd::Zero(nl);
  for (Index c = 0; c < lp.m; ++c) {
    for (const auto& t : cons[c].scalars) {
      const double a = t.coeff * lp.row_scale(c);
      if (layout.nonneg_pos[t.var] >= 0) {
        lp.Gl(layout.nonneg_pos[t.var], c) += a;
      } else {
        lp.A(layout.free_pos[t.var], c) += a;
      }
    }
    if (layout.slack_pos[c] >= 0) {
      lp.Gl(layout.slack_pos[c], c) = cons[c].relation == Relation::LessEqual ? 1.0 : -1.0;
    }
  }
  for (const auto& t : prog.objective_scalars()) {
    if (layout.nonneg_pos[t.var] >= 0) {
      lp.h.l(layout.nonneg_pos[t.var]) += sigma * t.coeff;
    } else {
      lp.b(layout.free_pos[t.var]) += sigma * t.coeff;
    }
  }

  for (const auto& blk : prog.blocks()) {
    const Index n2 = 2 * blk.dim;
    lp.Gs.emplace_back(lp.m, MatrixXd::Zero(n2, n2));
    lp.h.s.push_back(MatrixXd::Zero(n2, n2));
  }
  for (Index c = 0; c < lp.m; ++c) {
    for (const auto& t : cons[c].blocks) {
      lp.Gs[t.block][c] += (0.5 * lp.row_scale(c)) * real_embed(t.coeff);
    }
  }
  for (const auto& t : prog.objective_blocks()) lp.h.s[t.block] += (0.5 * sigma) * real_embed(t.coeff);

  for (const auto& cols : lp.Gs) {
    const Index n2 = cols[0].rows();
    MatrixXd flat(n2 * n2, lp.m);
    for (Index k = 0; k < lp.m; ++k) flat.col(k) = flatten(cols[k]);
    lp.Gs_flat.push_back(std::move(flat));
  }

  lp.degree = nl;
  for (const auto& blk : prog.blocks()) lp.degree += 2 * blk.dim;
  return lp;
}

/// Solves
///   [ 0  A'  G'   ] [ux]   [b1]
///   [ A  0   0    ] [uy] = [b2]
///   [ G  0  -W'W  ] [uz]   [b3]
/// returning ux, uy and the scaled  W uz = W^{-T}(G ux - b3).
class KktSolver {
 public:
  KktSolver(const ConeLp& lp, const NtScaling& w, int refinement_steps = 1)
      : lp_(lp), w_(w), refinement_steps_(refinement_steps) {
    const Index m = lp.m, p = lp.p;
    // Scaled columns  W^{-T} G_k.
    gl_scaled_ = w.d.cwiseInverse().asDiagonal() * lp.Gl;
    MatrixXd H = gl_scaled_.transpose() * gl_scaled_;
    gs_scaled_.resize(lp.Gs.size());
    for (std::size_t b = 0; b < lp.Gs.size(); ++b) {
      const MatrixXd& rti = w.rti[b];
      const Index n2 = rti.rows();
      MatrixXd& flat = gs_scaled_[b];
      flat.resize(n2 * n2, m);
      MatrixXd tmp(n2, n2);
      for (Index k = 0; k < m; ++k) {
        tmp.noalias() = lp.Gs[b][k] * rti;
        Eigen::Map<MatrixXd>(flat.col(k).data(), n2, n2).noalias() = rti.transpose() * tmp;
      }
      H.selfadjointView<Eigen::Lower>().rankUpdate(flat.transpose());
    }
    H = H.selfadjointView<Eigen::Lower>();
    kkt_ = MatrixXd::Zero(m + p, m + p);
    kkt_.topLeftCorner(m, m) = H;
    kkt_.topRightCorner(m, p) = lp.A.transpose();
    kkt_.bottomLeftCorner(p, m) = lp.A;
    lu_.compute(kkt_);
  }

  bool ok() const { return std::isfinite(lu_.rcond()) && lu_.rcond() > 0; }

  void solve(const VectorXd& b1, const VectorXd& b2, const ConeVec& b3, VectorXd& ux, VectorXd& uy,
             ConeVec& uz_scaled) const {
    reduced_solve(b1, b2, b3, ux, uy, uz_scaled);
    // Iterative refinement against the full system; the reduced matrix is
    // a normal-equations product and loses accuracy near the boundary.
    for (int it = 0; it < refinement_steps_; ++it) {
      const ConeVec uz = w_.apply_inv(uz_scaled);
      const VectorXd r1 = b1 - lp_.A.transpose() * uy - lp_.Gt(uz);
      const VectorXd r2 = b2 - lp_.A * ux;
      ConeVec r3 = b3;
      r3.axpy(-1.0, lp_.G(ux));
      r3.axpy(1.0, w_.apply_t(uz_scaled));
      VectorXd cx, cy;
      ConeVec cz;
      reduced_solve(r1, r2, r3, cx, cy, cz);
      ux += cx;
      uy += cy;
      uz_scaled.axpy(1.0, cz);
    }
  }

 private:
  void reduced_solve(const VectorXd& b1, const VectorXd& b2, const ConeVec& b3, VectorXd& ux, VectorXd& uy,
                     ConeVec& uz_scaled) const {
    const Index m = lp_.m, p = lp_.p;
    const ConeVec b3s = w_.apply_inv_t(b3);
    VectorXd rhs(m + p);
    rhs.head(m) = b1 + scaled_gt(b3s);
    rhs.tail(p) = b2;
    const VectorXd sol = lu_.solve(rhs);
    ux = sol.head(m);
    uy = sol.tail(p);
    uz_scaled = scaled_g(ux);
    uz_scaled.axpy(-1.0, b3s);
  }

  // (W^{-T} G)' v
  VectorXd scaled_gt(const ConeVec& v) const {
    VectorXd o = gl_scaled_.transpose() * v.l;
    for (std::size_t b = 0; b < gs_scaled_.size(); ++b) o.noalias() += gs_scaled_[b].transpose() * flatten(v.s[b]);
    return o;
  }
  // W^{-T} G u
  ConeVec scaled_g(const VectorXd& u) const {
    ConeVec o;
    o.l = gl_scaled_ * u;
    for (std::size_t b = 0; b < gs_scaled_.size(); ++b) o.s.push_back(unflatten(gs_scaled_[b] * u, w_.rti[b].rows()));
    return o;
  }

  const ConeLp& lp_;
  const NtScaling& w_;
  int refinement_steps_;
  MatrixXd gl_scaled_;
  std::vector<MatrixXd> gs_scaled_;  // vec(W^{-T} G_k) as columns, per block
  MatrixXd kkt_;
  Eigen::PartialPivLU<MatrixXd> lu_;
};

void enforce_structure(ConeVec& v) {
  for (auto& m : v.s) project_embedding(m);
}

}  // namespace

ConicSolution solve(const ConicProgram& program, const IpmOptions& opt) {
  program.validate();
  Layout layout;
  const ConeLp lp = build_cone_lp(program, layout);
  const Index m = lp.m, p = lp.p;

  ConicSolution out;
  out.blocks.reserve(program.blocks().size());

  // Degenerate: no constraints. Optimal iff the objective is bounded on the cone.
  if (m == 0) {
    bool bounded = (lp.h.l.array() >= 0).all() && lp.b.size() == 0;
    for (const auto& hs : lp.h.s) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(hs, Eigen::EigenvaluesOnly);
      bounded = bounded && es.eigenvalues()(0) >= 0;
    }
    out.status = bounded ? SolveStatus::Optimal : SolveStatus::Unbounded;
    for (const auto& b : program.blocks()) out.blocks.push_back(HermitianMatrixXd::Zero(b.dim));
    out.scalars.assign(program.scalars().size(), 0.0);
    return out;
  }

  const double resx0 = std::max(1.0, lp.c.norm());
  const double resy0 = std::max(1.0, lp.b.norm());
  const double resz0 = std::max(1.0, lp.h.norm());

  // Starting point: least-norm primal and dual solutions with identity
  // scaling, shifted into the cone interior.
  ConeVec unit = identity_like(lp.h);
  NtScaling ident;
  ident.d = VectorXd::Ones(lp.h.l.size());
  ident.lam_l = VectorXd::Ones(lp.h.l.size());
  for (const auto& hs : lp.h.s) {
    ident.r.push_back(MatrixXd::Identity(hs.rows(), hs.cols()));
    ident.rti.push_back(MatrixXd::Identity(hs.rows(), hs.cols()));
    ident.lam_s.push_back(VectorXd::Ones(hs.rows()));
  }
  VectorXd x, y;
  ConeVec s, z;
  {
    KktSolver k0(lp, ident);
    if (!k0.ok()) {
      out.status = SolveStatus::NumericalLimit;
      out.certificate = "singular KKT system at the starting point (dependent constraints?)";
      return out;
    }
    ConeVec zs;
    k0.solve(VectorXd::Zero(m), lp.b, lp.h, x, y, zs);
    s = zs.scaled(-1.0);
    VectorXd x2, y2;
    k0.solve(-lp.c, VectorXd::Zero(p), zeros_like(lp.h), x2, y2, z);
    y = y2;
    const double ts = max_shift(s);
    if (ts >= -1e-8 * std::max(s.norm(), 1.0)) s.axpy(1.0 + ts, unit);
    const double tz = max_shift(z);
    if (tz >= -1e-8 * std::max(z.norm(), 1.0)) z.axpy(1.0 + tz, unit);
    enforce_structure(s);
    enforce_structure(z);
  }
  double tau = 1.0, kappa = 1.0;

  NtScaling w;
  for (int iter = 0;; ++iter) {
    // Residuals of the homogeneous embedding.
    const VectorXd f1 = lp.A.transpose() * y + lp.Gt(z) + lp.c * tau;
    const VectorXd f2 = -lp.A * x + lp.b * tau;
    ConeVec f3 = s;
    f3.axpy(1.0, lp.G(x));
    f3.axpy(-tau, lp.h);
    const double cx = lp.c.dot(x), by = lp.b.dot(y), hz = lp.h.dot(z);
    const double f4 = kappa + cx + by + hz;

    const double pcost = cx / tau;
    const double dcost = -(by + hz) / tau;
    const double gap = s.dot(z) / (tau * tau);
    const double pres = std::max(f2.norm() / tau / resy0, f3.norm() / tau / resz0);
    const double dres = f1.norm() / tau / resx0;
    const double relgap = gap / (1.0 + std::min(std::abs(pcost), std::abs(dcost)));

    double user_unbounded = std::numeric_limits<double>::infinity();
    if (hz + by < 0) user_unbounded = (lp.A.transpose() * y + lp.Gt(z)).norm() / resx0 / (-(hz + by));
    double user_infeasible = std::numeric_limits<double>::infinity();
    if (cx < 0) {
      ConeVec gs = s;
      gs.axpy(1.0, lp.G(x));
      user_infeasible = std::max((lp.A * x).norm() / resy0, gs.norm() / resz0) / (-cx);
    }

    if (opt.verbose) {
      std::printf("%3d  pcost % .9e  dcost % .9e  gap %.2e  pres %.2e  dres %.2e  tau %.2e  kappa %.2e\n", iter,
                  pcost, dcost, gap, pres, dres, tau, kappa);
    }

    out.iterations = iter;
    out.gap = relgap;
    out.primal_residual = pres;
    out.dual_residual = dres;

    if (pres <= opt.feas_tol && dres <= opt.feas_tol && relgap <= opt.gap_tol) {
      out.status = SolveStatus::Optimal;
      break;
    }
    if (user_infeasible <= opt.feas_tol) {
      out.status = SolveStatus::Infeasible;
      const double scale = -cx;
      ConeVec gs = s;
      gs.axpy(1.0, lp.G(x));
      std::ostringstream cert;
      cert.precision(3);
      cert << "farkas ray: r'y = 1, |A_free' y| = " << (lp.A * x).norm() / scale
           << ", dual-cone residual = " << gs.norm() / scale << ", iterations = " << iter;
      out.certificate = cert.str();
      return out;
    }
    if (user_unbounded <= opt.feas_tol) {
      out.status = SolveStatus::Unbounded;
      std::ostringstream cert;
      cert.precision(3);
      cert << "improving ray: objective = -1, equality residual = "
           << (lp.A.transpose() * y + lp.Gt(z)).norm() / (-(hz + by));
      out.certificate = cert.str();
      return out;
    }
    if (iter >= opt.max_iterations) {
      out.status = SolveStatus::NumericalLimit;
      out.certificate = "iteration limit reached";
      break;
    }

    if (!compute_scaling(s, z, w)) {
      out.status = SolveStatus::NumericalLimit;
      out.certificate = "lost positive definiteness of the iterates";
      break;
    }
    // Refinement only pays off once the iterates approach the boundary.
    const KktSolver kkt(lp, w, std::min(relgap, std::max(pres, dres)) < 1e-4 ? 1 : 0);
    if (!kkt.ok()) {
      out.status = SolveStatus::NumericalLimit;
      out.certificate = "singular KKT system";
      break;
    }
    const double mu = (s.dot(z) + tau * kappa) / static_cast<double>(lp.degree + 1);
    const ConeVec lam = w.lambda();
    const ConeVec lamsq = lam_prod(w, lam);
    const ConeVec h_scaled = w.apply_inv_t(lp.h);

    // Direction for dtau:  K [vx; vy; vz] = [-c; b; h].
    VectorXd vx, vy;
    ConeVec vz;
    kkt.solve(-lp.c, lp.b, lp.h, vx, vy, vz);
    const double denom = -kappa / tau - vz.dot(vz);

    VectorXd dx, dy;
    ConeVec dz, ds;
    double dtau = 0.0, dkappa = 0.0;
    double sigma = 0.0;
    ConeVec ds_aff, dz_aff;
    double dtau_aff = 0.0, dkappa_aff = 0.0;
    double alpha = 0.0;

    for (int pass = 0; pass < 2; ++pass) {
      const double eta = pass == 0 ? 0.0 : sigma;
      const VectorXd r1 = -(1.0 - eta) * f1;
      const VectorXd r2 = -(1.0 - eta) * f2;
      const ConeVec r3 = f3.scaled(-(1.0 - eta));
      const double r4 = -(1.0 - eta) * f4;

      ConeVec rc = lamsq.scaled(-1.0);
      rc.axpy(sigma * mu, unit);
      double rt = -tau * kappa + sigma * mu;
      if (pass == 1) {
        rc.axpy(-1.0, circ(ds_aff, dz_aff));
        rt -= dtau_aff * dkappa_aff;
      }
      const ConeVec q = lam_solve(w, rc);
      ConeVec b3 = r3;
      b3.axpy(-1.0, w.apply_t(q));

      VectorXd ux, uy;
      ConeVec uz;
      kkt.solve(r1, -r2, b3, ux, uy, uz);
      dtau = (r4 - rt / tau - lp.c.dot(ux) - lp.b.dot(uy) - h_scaled.dot(uz)) / denom;
      dx = ux + dtau * vx;
      dy = uy + dtau * vy;
      dz = uz;
      dz.axpy(dtau, vz);
      ds = q;
      ds.axpy(-1.0, dz);
      dkappa = (rt - kappa * dtau) / tau;

      double amax = std::min(max_step_scaled(w, ds), max_step_scaled(w, dz));
      if (dtau < 0) amax = std::min(amax, -tau / dtau);
      if (dkappa < 0) amax = std::min(amax, -kappa / dkappa);

      if (pass == 0) {
        ds_aff = ds;
        dz_aff = dz;
        dtau_aff = dtau;
        dkappa_aff = dkappa;
        sigma = std::pow(std::max(0.0, 1.0 - std::min(1.0, amax)), 3);
      } else {
        alpha = std::min(1.0, opt.step_fraction * amax);
      }
    }

    // Back to unscaled coordinates and take the step.
    const ConeVec ds_u = w.apply_t(ds);
    const ConeVec dz_u = w.apply_inv(dz);
    x += alpha * dx;
    y += alpha * dy;
    s.axpy(alpha, ds_u);
    z.axpy(alpha, dz_u);
    tau += alpha * dtau;
    kappa += alpha * dkappa;
    enforce_structure(s);
    enforce_structure(z);
    if (!(tau > 0) || !(kappa > 0) || !std::isfinite(tau) || !std::isfinite(kappa)) {
      out.status = SolveStatus::NumericalLimit;
      out.certificate = "embedding variables left the cone";
      break;
    }
  }

  // Recover the user's primal/dual point (best effort for NumericalLimit).
  const double inv_tau = 1.0 / tau;
  for (std::size_t b = 0; b < program.blocks().size(); ++b) {
    out.blocks.push_back(from_real_embedding<double>(z.s[b] * inv_tau));
  }
  out.scalars.assign(program.scalars().size(), 0.0);
  for (std::size_t v = 0; v < program.scalars().size(); ++v) {
    if (layout.nonneg_pos[v] >= 0) {
      out.scalars[v] = z.l(layout.nonneg_pos[v]) * inv_tau;
    } else {
      out.scalars[v] = y(layout.free_pos[v]) * inv_tau;
    }
  }
  out.duals.resize(m);
  for (Index c = 0; c < m; ++c) out.duals[c] = x(c) * inv_tau * lp.row_scale(c);
  out.objective_value = program.objective(out.blocks, out.scalars);
  return out;
}

}  // namespace cran
