#pragma once

#include "nsdd/dofmap.hpp"
#include "nsdd/linalg.hpp"

#include <array>
#include <vector>

namespace nsdd::fem {

using mesh::DofMap;
using mesh::Mesh;
using mesh::Vec2;

/// Symmetric quadrature on the reference triangle; barycentric points with
/// weights summing to one (scale by the physical triangle area).
struct TriangleRule {
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
};
/// Six-point rule, exact for degree 4 (products of P2 shapes).
const TriangleRule& triangle_rule_deg4();
/// Seven-point rule, exact for degree 5 (trilinear convection integrand).
const TriangleRule& triangle_rule_deg5();

/// Gauss-Legendre abscissae/weights on [-1, 1].
struct LineRule {
    std::vector<double> points;
    std::vector<double> weights;
};
const LineRule& line_rule_3();  // exact for degree 5

/// Constant geometric data of one triangle: positive area and the gradients
/// of the barycentric coordinates.
struct TriangleGeometry {
    double area = 0.0;
    std::array<Vec2, 3> grad_lambda;
};
TriangleGeometry triangle_geometry(const Vec2& a, const Vec2& b, const Vec2& c);

/// P2 shape values at a barycentric point; local node order matches
/// DofMap::tri_vnodes: (v0, v1, v2, mid12, mid20, mid01).
std::array<double, 6> p2_values(const std::array<double, 3>& l);
std::array<Vec2, 6> p2_gradients(const std::array<double, 3>& l,
                                 const std::array<Vec2, 3>& grad_lambda);

/// Time-independent sparse operators of the variational forms on one mesh.
///
/// M is the vector-velocity mass (form m), A the viscous stiffness nu*(grad
/// u, grad v) (form a), B the divergence coupling -(div v, q) (form b) of
/// shape n_pres x n_vel. T_gamma maps interface trace coefficients g in X_h
/// to the velocity load (g, v)_{Gamma_0} (n_vel x n_trace) and M_gamma is
/// the trace mass on X_h; both are empty on meshes without interface edges.
struct AssembledOperators {
    linalg::SparseMatrix M;
    linalg::SparseMatrix A;
    linalg::SparseMatrix B;
    linalg::SparseMatrix T_gamma;
    linalg::SparseMatrix M_gamma;
    double nu = 0.0;
};

AssembledOperators assemble_constant_ops(const Mesh& m, const DofMap& d, double nu);

/// Interface operators alone (1D Gauss rule, exact for the P2 products).
void assemble_interface_ops(const DofMap& d, linalg::SparseMatrix& T_gamma,
                            linalg::SparseMatrix& M_gamma);

/// Velocity H1 inner-product matrix (mass plus unit-viscosity stiffness).
linalg::SparseMatrix velocity_h1_matrix(const Mesh& m, const DofMap& d);
/// Pressure L2 mass matrix.
linalg::SparseMatrix pressure_mass_matrix(const Mesh& m, const DofMap& d);

/// C holds c(w, ., .) (advection by the frozen field w); Jc is the Gateaux
/// derivative of u -> c(u, u, .) at w, i.e. c(delta, w, .) + c(w, delta, .).
struct ConvectionMatrices {
    linalg::SparseMatrix C;
    linalg::SparseMatrix Jc;
};

/// Assembles the trilinear form c(u, w, v) = ((u.grad) w, v) for a frozen
/// velocity field. Element quadrature data (shape values/gradients at the
/// degree-5 points) is precomputed once; assemble() is pure and reusable.
class ConvectionAssembler {
  public:
    ConvectionAssembler(const Mesh& m, const DofMap& d);

    ConvectionMatrices assemble(const linalg::Vector& w) const;
    /// Load vector with entries c(w, w, v_i) (the nonlinear residual term).
    linalg::Vector apply(const linalg::Vector& w) const;

  private:
    int n_vel_;
    std::vector<std::array<int, 6>> nodes_;     // per triangle
    std::vector<double> scaled_weights_;        // area * rule weight, per (tri, qp)
    std::vector<std::array<double, 6>> values_;       // shared across triangles, per qp
    std::vector<std::array<Vec2, 6>> gradients_;      // per (tri, qp)
};

/// Prescribed velocity values on the Dirichlet boundary (inlet + walls),
/// stored as a sorted dof list with matching values.
struct DirichletData {
    std::vector<int> dofs;   // strictly increasing velocity dofs
    linalg::Vector values;

    /// Overwrites the constrained entries of a state vector.
    void impose(linalg::Vector& state) const;
    /// Zeroes the constrained entries (residuals, homogeneous problems).
    void clear_rows(linalg::Vector& r) const;
    /// Membership mask over n entries.
    std::vector<char> mask(int n) const;
};

/// Parabolic inlet u_x = Ubar * 4/9 * (y-2)(5-y) on inlet nodes, zero on
/// walls; valid for the step geometry and any of its submeshes.
DirichletData bfs_dirichlet(const DofMap& d, double Ubar);
/// Parabolic inlet u_x = 4 U y (Ly - y) / Ly^2, zero walls, for rectangles.
DirichletData rect_dirichlet(const DofMap& d, double Ly, double U);
/// Homogeneous data on inlet + walls.
DirichletData zero_dirichlet(const DofMap& d);

/// Appends the entries of src shifted by (row_offset, col_offset), dropping
/// any row or column whose (unshifted) index is constrained — the triplet
/// half of symmetric Dirichlet elimination. Pass empty masks to keep all.
void append_eliminated(std::vector<linalg::Triplet>& dst, const linalg::SparseMatrix& src,
                       const std::vector<char>& row_constrained,
                       const std::vector<char>& col_constrained, int row_offset, int col_offset,
                       bool transpose = false, double scale = 1.0);

}  // namespace nsdd::fem
