#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <string>
#include <vector>

#include "geodiff/distance_jet.hpp"
#include "geodiff/geodesic.hpp"

namespace geodiff {

// Optimization state: embedded points plus the current host vertex positions.
struct State {
  std::vector<SurfacePoint> points;
  std::vector<Vec3> host;
};

// Full coordinates: 3 barycentric weights per point, then 3 coordinates per
// host vertex. A Local is a dense contribution over a few of them.
struct Local {
  std::vector<int> idx;
  double value = 0.0;
  VecX grad;
  MatX hess;
};

inline int point_index(int i, int c) { return 3 * i + c; }
inline int host_index(int np, int v, int d) { return 3 * np + 3 * v + d; }

// Distance jet between points i and j as a Local (host blocks included when
// the jet has them).
Local local_from_jet(const DistanceJet& jet, int i, int j, int np);
// phi(q_1..q_k) chained through the Locals q_e: grad sum f_e dq_e, Hessian
// sum f_e d2q_e + sum f_ee' dq_e dq_e'^T.
Local chain(const std::vector<Local>& q, double f, const VecX& df, const MatX& ddf, int order);

struct EvalContext {
  const TriangleMesh& mesh;  // host at the current state
  const GeodesicEngine& engine;
  const State& state;
  const Mollifier& mol;
  bool host = false;  // host vertices are unknowns
  int order = 2;
};

class EnergyTerm {
 public:
  virtual ~EnergyTerm() = default;
  virtual std::string name() const = 0;
  // Locals whose value is +inf signal an inadmissible state (inverted element).
  virtual std::vector<Local> evaluate(const EvalContext& ctx) const = 0;
};

// Which coordinates move. Each free point has 2 tangent DOFs (a,b) with
// dw = B (a,b); each free host vertex has 3.
class DofLayout {
 public:
  DofLayout() = default;
  DofLayout(int np, int nv, std::vector<char> point_fixed, std::vector<char> host_fixed, bool host_free);

  int size() const { return n_; }
  int full_size() const { return 3 * np_ + 3 * nv_; }
  int num_points() const { return np_; }
  int num_host() const { return nv_; }
  int point_offset(int i) const { return point_off_[i]; }  // -1 when fixed
  int host_offset(int v) const { return host_off_.empty() ? -1 : host_off_[v]; }
  bool host_free() const { return host_free_; }
  // full x reduced map
  const Eigen::SparseMatrix<double>& projection() const { return P_; }

 private:
  int np_ = 0, nv_ = 0, n_ = 0;
  bool host_free_ = false;
  std::vector<int> point_off_, host_off_;
  Eigen::SparseMatrix<double> P_;
};

struct Evaluation {
  double value = 0.0;
  bool finite = true;
  std::vector<std::pair<std::string, double>> terms;  // value per term
  VecX grad;                                          // reduced
  Eigen::SparseMatrix<double> hess;                   // reduced
};

class EnergyProblem {
 public:
  EnergyProblem(TriangleMesh host, GeodesicOptions geo = {});

  void add(std::shared_ptr<const EnergyTerm> term) { terms_.push_back(std::move(term)); }
  const std::vector<std::shared_ptr<const EnergyTerm>>& terms() const { return terms_; }

  // Call after the number of points is known.
  void set_layout(int num_points, std::vector<char> point_fixed, bool host_free = false,
                  std::vector<char> host_fixed = {});
  const DofLayout& layout() const { return layout_; }

  const TriangleMesh& base_mesh() const { return base_; }
  const GeodesicOptions& geodesic_options() const { return geo_; }
  State initial_state(std::vector<SurfacePoint> points) const;
  TriangleMesh mesh_at(const State& s) const;

  // order 0: value only; 1: + gradient; 2: + Hessian (reduced coordinates).
  Evaluation evaluate(const State& s, int order) const;
  // Same, in full coordinates (for finite-difference checks).
  Evaluation evaluate_full(const State& s, int order) const;

 private:
  Evaluation run(const State& s, int order, bool reduce) const;

  TriangleMesh base_;
  GeodesicOptions geo_;
  std::shared_ptr<GeodesicEngine> rigid_;
  std::vector<std::shared_ptr<const EnergyTerm>> terms_;
  DofLayout layout_;
};

// ---------------------------------------------------------------------------
// Spring networks and the Karcher mean

struct Spring {
  int i = 0, j = 0;
  double rest = 0.0;
  double stiffness = 1.0;
};

// E = sum k (g - rest)^2 with geodesic g, or the straight chord when euclidean.
class SpringNetwork : public EnergyTerm {
 public:
  explicit SpringNetwork(std::vector<Spring> springs, bool euclidean = false);
  std::string name() const override { return euclidean_ ? "euclidean_springs" : "springs"; }
  std::vector<Local> evaluate(const EvalContext& ctx) const override;
  const std::vector<Spring>& springs() const { return springs_; }

 private:
  std::vector<Spring> springs_;
  bool euclidean_;
};

// 1/(2N) sum g(p, x_i)^2 for a free point p (index 0) and anchors 1..N.
std::shared_ptr<SpringNetwork> karcher_term(int num_anchors);

// ---------------------------------------------------------------------------
// Membranes

struct Material {
  double mu = 1.0;
  double lambda = 1.0;
};

// Right Cauchy-Green tensor (C11, C12, C22) from rest edges and squared lengths.
// Throws EnergyError for a degenerate rest triangle.
Vec3 cauchy_green(const std::array<Vec2, 3>& rest_edges, const Vec3& squared_lengths);
// The linear map behind it: c = A * squared_lengths.
Mat3 cauchy_green_inverse(const std::array<Vec2, 3>& rest_edges);
// Neo-Hookean density over c = (C11, C12, C22): value, gradient, Hessian.
// Returns +inf when det C <= 0.
double neo_hookean(const Vec3& c, const Material& m, Vec3* grad = nullptr, Mat3* hess = nullptr);

struct MembraneElement {
  std::array<int, 3> v{};          // point indices
  std::array<Vec2, 3> rest_edges;  // e01, e12, e20
  double rest_area = 0.0;
};

MembraneElement make_element(std::array<int, 3> v, const std::array<Vec2, 3>& rest_positions);
// Rest layout from the current edge lengths (intrinsic flattening).
MembraneElement element_from_lengths(std::array<int, 3> v, double l01, double l12, double l20);

// sum rest_area * Psi(C) over triangles whose edges are geodesics.
class GeodesicMembrane : public EnergyTerm {
 public:
  GeodesicMembrane(std::vector<MembraneElement> elements, Material mat);
  std::string name() const override { return "membrane"; }
  std::vector<Local> evaluate(const EvalContext& ctx) const override;
  const std::vector<MembraneElement>& elements() const { return elements_; }
  // Per-element density at a state (for reports).
  std::vector<double> densities(const EvalContext& ctx) const;

 private:
  std::vector<MembraneElement> elements_;
  Material mat_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> element_edges_;
};

// ---------------------------------------------------------------------------
// Host model: constant strain membrane on host faces plus an enclosed-volume
// penalty. Only meaningful when host vertices are unknowns.

struct HostModel {
  std::vector<Vec3> rest;  // rest vertex positions
  Material material;
  double volume_weight = 0.0;
  double rest_volume = 0.0;
};

double enclosed_volume(const TriangleMesh& mesh);

class HostEnergy : public EnergyTerm {
 public:
  HostEnergy(const TriangleMesh& topology, HostModel model);
  std::string name() const override { return "host"; }
  std::vector<Local> evaluate(const EvalContext& ctx) const override;

 private:
  HostModel model_;
  std::vector<std::array<Vec2, 3>> rest_edges_;
  std::vector<double> rest_area_;
};

}  // namespace geodiff
