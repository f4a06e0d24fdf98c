#include "nsdd/rom.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nsdd::rom {

SnapshotSet collect_snapshots(const std::vector<std::array<double, 2>>& training, int n_steps,
                              const solvers::DdDiscretisation& dd, const FffRunner& run) {
    if (training.empty() || n_steps < 1)
        throw std::invalid_argument("collect_snapshots: empty training plan");
    SnapshotSet s;
    s.mus = training;
    s.steps_per_mu = n_steps;
    const int nv1 = dd.sub1.dofs().n_vel(), np1 = dd.sub1.dofs().n_pres();
    const int nv2 = dd.sub2.dofs().n_vel(), np2 = dd.sub2.dofs().n_pres();
    const int cols = s.columns();
    s.u1.resize(nv1, cols);
    s.p1.resize(np1, cols);
    s.u2.resize(nv2, cols);
    s.p2.resize(np2, cols);
    s.g.resize(dd.n_trace(), cols);
    for (size_t i = 0; i < training.size(); ++i) {
        Trajectory t = run(training[i][0], training[i][1]);
        if (static_cast<int>(t.states1.size()) != n_steps ||
            static_cast<int>(t.states2.size()) != n_steps ||
            static_cast<int>(t.controls.size()) != n_steps)
            throw std::runtime_error("collect_snapshots: trajectory has wrong step count");
        for (int k = 0; k < n_steps; ++k) {
            const int c = s.column(static_cast<int>(i), k);
            s.u1.col(c) = t.states1[k].head(nv1);
            s.p1.col(c) = t.states1[k].tail(np1);
            s.u2.col(c) = t.states2[k].head(nv2);
            s.p2.col(c) = t.states2[k].tail(np2);
            s.g.col(c) = t.controls[k];
        }
    }
    return s;
}

Vector unit_lifting(const mesh::Mesh& m, const mesh::DofMap& d,
                    const fem::DirichletData& unit_data) {
    solvers::FlowProblem stokes(m, d, unit_data, 1.0, 1.0, 0.0);
    const Vector zero = Vector::Zero(d.n_state());
    auto r = stokes.solve_state(zero, Vector(), false, true);
    return r.state.head(d.n_vel());
}

PodResult pod_basis(const DenseMatrix& S, int N, const linalg::SparseMatrix& X) {
    if (S.cols() < 1 || N < 1) throw std::invalid_argument("pod_basis: empty snapshot set");
    linalg::CholeskyFactor chol(X);
    const DenseMatrix W = chol.apply_lt(S);
    linalg::SvdResult sv = linalg::svd(W);
    const double tol = sv.singular_values.size() ? 1e-12 * sv.singular_values[0] : 0.0;
    int rank = 0;
    while (rank < sv.singular_values.size() && sv.singular_values[rank] > tol) ++rank;
    if (N > rank) {
        std::ostringstream os;
        os << "pod_basis: requested " << N << " modes but the snapshot matrix has numerical rank "
           << rank;
        throw std::invalid_argument(os.str());
    }
    PodResult out;
    out.modes = chol.solve_lt(DenseMatrix(sv.U.leftCols(N)));
    out.singular_values = sv.singular_values;
    return out;
}

DenseMatrix supremizer_enrich(const linalg::SparseMatrix& Xu, const linalg::SparseMatrix& B,
                              const std::vector<char>& dirichlet_mask, const DenseMatrix& Zp,
                              const DenseMatrix& Zu) {
    const int n = Xu.rows();
    std::vector<linalg::Triplet> trips;
    fem::append_eliminated(trips, Xu, dirichlet_mask, dirichlet_mask, 0, 0);
    for (int i = 0; i < n; ++i)
        if (!dirichlet_mask.empty() && dirichlet_mask[i]) trips.emplace_back(i, i, 1.0);
    linalg::CholeskyFactor chol(linalg::SparseMatrix::from_triplets(n, n, trips));

    std::vector<Vector> accepted;
    for (int j = 0; j < Zp.cols(); ++j) {
        Vector rhs = B.apply_transpose(Zp.col(j));
        for (int i = 0; i < n; ++i)
            if (!dirichlet_mask.empty() && dirichlet_mask[i]) rhs[i] = 0.0;
        Vector s = chol.solve(rhs);
        const double norm0 = std::sqrt(std::max(0.0, s.dot(Xu.apply(s))));
        for (int pass = 0; pass < 2; ++pass) {
            Vector Xs = Xu.apply(s);
            if (Zu.cols() > 0) s -= Zu * (Zu.transpose() * Xs);
            Xs = Xu.apply(s);
            for (const Vector& a : accepted) s -= a.dot(Xs) * a;
        }
        const double norm = std::sqrt(std::max(0.0, s.dot(Xu.apply(s))));
        if (norm > 1e-10 * std::max(norm0, 1e-300)) accepted.push_back(s / norm);
    }
    DenseMatrix out(n, static_cast<int>(accepted.size()));
    for (size_t k = 0; k < accepted.size(); ++k) out.col(static_cast<int>(k)) = accepted[k];
    return out;
}

namespace {

void project_side_operators(const mesh::Mesh& m, const solvers::FlowProblem& fp,
                            const DenseMatrix& Zg, ReducedSide& s) {
    const mesh::DofMap& d = fp.dofs();
    const int Nu = s.n_u();
    DenseMatrix Zt(d.n_vel(), Nu + 1);
    Zt.leftCols(Nu) = s.Zu;
    Zt.col(Nu) = s.l_unit;

    const linalg::SparseMatrix K = fem::assemble_constant_ops(m, d, 1.0).A;
    s.Mt = s.Zu.transpose() * (fp.ops().M.eigen() * Zt);
    s.Kt = s.Zu.transpose() * (K.eigen() * Zt);
    s.Bt = s.Zp.transpose() * (fp.ops().B.eigen() * Zt);
    s.Tg_fem = s.Zu.transpose() * DenseMatrix(fp.ops().T_gamma.eigen());
    s.Tg_rom = s.Tg_fem * Zg;

    const auto& tv = d.trace_vnodes;
    s.Gtrace.resize(2 * static_cast<int>(tv.size()), Nu + 1);
    for (size_t k = 0; k < tv.size(); ++k)
        for (int c = 0; c < 2; ++c)
            s.Gtrace.row(2 * static_cast<int>(k) + c) = Zt.row(mesh::DofMap::vdof(tv[k], c));

    s.conv.assign(Nu, DenseMatrix::Zero(Nu + 1, Nu + 1));
    for (int b = 0; b < Nu + 1; ++b) {
        const fem::ConvectionMatrices cm = fp.convection().assemble(Zt.col(b));
        const DenseMatrix D = s.Zu.transpose() * (cm.C.eigen() * Zt);
        for (int a = 0; a < Nu; ++a) s.conv[a].row(b) = D.row(a);
    }
}

ReducedSide build_side(const solvers::DdDiscretisation& dd, int which, const DenseMatrix& Uh,
                       const DenseMatrix& P, int n_u, int n_p, const DenseMatrix& Zg,
                       const Vector& l_unit) {
    const solvers::FlowProblem& fp = dd.sub(which);
    const mesh::Mesh& m = which == 1 ? dd.parts.omega1 : dd.parts.omega2;
    const mesh::DofMap& d = fp.dofs();
    const linalg::SparseMatrix Xu = fem::velocity_h1_matrix(m, d);
    const linalg::SparseMatrix Xp = fem::pressure_mass_matrix(m, d);

    ReducedSide s;
    PodResult pu = pod_basis(Uh, n_u, Xu);
    PodResult pp = pod_basis(P, n_p, Xp);
    s.n_pod = n_u;
    s.Zp = std::move(pp.modes);
    const DenseMatrix sup = supremizer_enrich(Xu, fp.ops().B, fp.dirichlet().mask(d.n_vel()),
                                              s.Zp, pu.modes);
    s.Zu.resize(d.n_vel(), n_u + sup.cols());
    s.Zu.leftCols(n_u) = pu.modes;
    s.Zu.rightCols(sup.cols()) = sup;
    s.l_unit = l_unit;
    project_side_operators(m, fp, Zg, s);
    return s;
}

}  // namespace

ReducedBasis build_reduced_basis(const solvers::DdDiscretisation& dd, const SnapshotSet& snaps,
                                 const ModeCounts& counts, std::uint64_t training_seed) {
    const mesh::DofMap& d1 = dd.sub1.dofs();
    const mesh::DofMap& d2 = dd.sub2.dofs();

    const Vector l1 = unit_lifting(dd.parts.omega1, d1, dd.unit_dirichlet(d1));
    const Vector l2 = unit_lifting(dd.parts.omega2, d2, dd.unit_dirichlet(d2));

    // Homogenise: subtract the parameter-scaled lifting, then clear the
    // Dirichlet rows exactly (they are analytically zero).
    DenseMatrix U1 = snaps.u1, U2 = snaps.u2;
    for (size_t i = 0; i < snaps.mus.size(); ++i) {
        for (int k = 0; k < snaps.steps_per_mu; ++k) {
            const int c = snaps.column(static_cast<int>(i), k);
            U1.col(c) -= snaps.mus[i][0] * l1;
            U2.col(c) -= snaps.mus[i][0] * l2;
        }
    }
    for (int dof : dd.sub1.dirichlet().dofs) U1.row(dof).setZero();
    for (int dof : dd.sub2.dirichlet().dofs) U2.row(dof).setZero();

    ReducedBasis basis;
    basis.mesh_fingerprint = dd.mesh.fingerprint();
    basis.training_seed = training_seed;
    PodResult pg = pod_basis(snaps.g, counts.g, dd.sub1.ops().M_gamma);
    basis.Zg = std::move(pg.modes);
    basis.side1 = build_side(dd, 1, U1, snaps.p1, counts.u1, counts.p, basis.Zg, l1);
    basis.side2 = build_side(dd, 2, U2, snaps.p2, counts.u2, counts.p, basis.Zg, l2);
    return basis;
}

Vector project_velocity(const ReducedSide& side, const linalg::SparseMatrix& Xu, const Vector& u,
                        double amp) {
    return side.Zu.transpose() * Xu.apply(u - amp * side.l_unit);
}

Vector lift_velocity(const ReducedSide& side, const Vector& c, double amp) {
    return side.Zu * c + amp * side.l_unit;
}

ReducedProblem::ReducedProblem(const ReducedSide& side, double Ubar, double nu, double dt)
    : side_(side), Ubar_(Ubar), nu_(nu), dt_(dt) {
    if (!(dt > 0.0) || !(nu > 0.0))
        throw std::invalid_argument("ReducedProblem: need positive dt and nu");
}

Vector ReducedProblem::initial_ctilde() const { return Vector::Zero(side_.n_u() + 1); }

Vector ReducedProblem::residual(const Vector& z, const Vector& ctilde_prev, const Vector& load,
                                bool stokes) const {
    const int Nu = side_.n_u(), Np = side_.n_p();
    Vector ct(Nu + 1);
    ct.head(Nu) = z.head(Nu);
    ct[Nu] = Ubar_;
    Vector rv = load - (1.0 / dt_) * (side_.Mt * (ct - ctilde_prev)) - nu_ * (side_.Kt * ct) -
                side_.Bt.leftCols(Nu).transpose() * z.tail(Np);
    if (!stokes)
        for (int a = 0; a < Nu; ++a) rv[a] -= ct.dot(side_.conv[a] * ct);
    Vector r(Nu + Np);
    r.head(Nu) = rv;
    r.tail(Np) = -(side_.Bt * ct);
    return r;
}

DenseMatrix ReducedProblem::jacobian(const Vector& z, bool stokes) const {
    const int Nu = side_.n_u(), Np = side_.n_p();
    Vector ct(Nu + 1);
    ct.head(Nu) = z.head(Nu);
    ct[Nu] = Ubar_;
    DenseMatrix J = DenseMatrix::Zero(Nu + Np, Nu + Np);
    J.topLeftCorner(Nu, Nu) =
        (1.0 / dt_) * side_.Mt.leftCols(Nu) + nu_ * side_.Kt.leftCols(Nu);
    if (!stokes) {
        for (int a = 0; a < Nu; ++a) {
            const Vector dca = side_.conv[a] * ct + side_.conv[a].transpose() * ct;
            J.row(a).head(Nu) += dca.head(Nu).transpose();
        }
    }
    J.topRightCorner(Nu, Np) = side_.Bt.leftCols(Nu).transpose();
    J.bottomLeftCorner(Np, Nu) = side_.Bt.leftCols(Nu);
    return J;
}

ReducedProblem::Result ReducedProblem::solve_state(const Vector& ctilde_prev,
                                                   const Vector& momentum_load,
                                                   bool stokes) const {
    const int Nu = side_.n_u(), Np = side_.n_p();
    if (ctilde_prev.size() != Nu + 1)
        throw std::invalid_argument("reduced solve_state: bad previous-state dimension");
    if (momentum_load.size() != Nu)
        throw std::invalid_argument("reduced solve_state: bad load dimension");
    Vector z(Nu + Np);
    z.head(Nu) = ctilde_prev.head(Nu);
    z.tail(Np).setZero();

    constexpr int kMax = 50;
    double r0 = 0.0, prev = 0.0;
    bool converged = false;
    int iters = 0;
    for (int k = 0; k <= kMax; ++k) {
        const Vector r = residual(z, ctilde_prev, momentum_load, stokes);
        const double rn = r.lpNorm<Eigen::Infinity>();
        if (k == 0) r0 = rn;
        if (rn <= 1e-13 + 1e-14 * r0 ||
            (k >= 2 && rn <= 1e-10 + 1e-12 * r0 && rn >= 0.5 * prev)) {
            converged = true;
            iters = k;
            break;
        }
        if (k == kMax) break;
        linalg::DenseLuSolver lu(jacobian(z, stokes));
        z += lu.solve(r);
        prev = rn;
    }
    if (!converged)
        throw linalg::ConvergenceError("reduced Newton failed to converge", kMax);

    Result out;
    out.z = std::move(z);
    out.ctilde.resize(Nu + 1);
    out.ctilde.head(Nu) = out.z.head(Nu);
    out.ctilde[Nu] = Ubar_;
    out.iterations = iters;
    out.jacobian = std::make_shared<linalg::DenseLuSolver>(jacobian(out.z, stokes));
    return out;
}

Vector ReducedProblem::solve_adjoint(const Result& state, const Vector& load) const {
    const int Nu = side_.n_u(), Np = side_.n_p();
    if (load.size() != Nu) throw std::invalid_argument("reduced solve_adjoint: bad load");
    Vector rhs = Vector::Zero(Nu + Np);
    rhs.head(Nu) = load;
    return state.jacobian->solve_transposed(rhs);
}

namespace {

constexpr char kMagic[8] = {'N', 'S', 'D', 'D', 'R', 'B', '0', '1'};
constexpr std::uint32_t kVersion = 1;

void put_bytes(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
template <typename T>
void put(std::ostream& os, T v) {
    put_bytes(os, &v, sizeof(T));
}
void put_matrix(std::ostream& os, const DenseMatrix& m) {
    put_bytes(os, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
}
void put_vector(std::ostream& os, const Vector& v) {
    put_bytes(os, v.data(), sizeof(double) * static_cast<size_t>(v.size()));
}

void get_bytes(std::istream& is, void* p, size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is) throw std::runtime_error("basis container: truncated file");
}
template <typename T>
T get(std::istream& is) {
    T v;
    get_bytes(is, &v, sizeof(T));
    return v;
}
DenseMatrix get_matrix(std::istream& is, int rows, int cols) {
    DenseMatrix m(rows, cols);
    get_bytes(is, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
    return m;
}
Vector get_vector(std::istream& is, int n) {
    Vector v(n);
    get_bytes(is, v.data(), sizeof(double) * static_cast<size_t>(v.size()));
    return v;
}

void put_side(std::ostream& os, const ReducedSide& s) {
    put<std::int32_t>(os, static_cast<std::int32_t>(s.Zu.rows()));
    put<std::int32_t>(os, s.n_u());
    put<std::int32_t>(os, s.n_pod);
    put<std::int32_t>(os, static_cast<std::int32_t>(s.Zp.rows()));
    put<std::int32_t>(os, s.n_p());
    put_matrix(os, s.Zu);
    put_matrix(os, s.Zp);
    put_vector(os, s.l_unit);
    put_matrix(os, s.Mt);
    put_matrix(os, s.Kt);
    put_matrix(os, s.Bt);
    for (const auto& c : s.conv) put_matrix(os, c);
    put_matrix(os, s.Tg_fem);
    put_matrix(os, s.Tg_rom);
    put_matrix(os, s.Gtrace);
}

ReducedSide get_side(std::istream& is, int n_trace, int n_g) {
    const int nvel = get<std::int32_t>(is);
    const int nu = get<std::int32_t>(is);
    const int npod = get<std::int32_t>(is);
    const int npres = get<std::int32_t>(is);
    const int np = get<std::int32_t>(is);
    ReducedSide s;
    s.n_pod = npod;
    s.Zu = get_matrix(is, nvel, nu);
    s.Zp = get_matrix(is, npres, np);
    s.l_unit = get_vector(is, nvel);
    s.Mt = get_matrix(is, nu, nu + 1);
    s.Kt = get_matrix(is, nu, nu + 1);
    s.Bt = get_matrix(is, np, nu + 1);
    s.conv.resize(nu);
    for (int a = 0; a < nu; ++a) s.conv[a] = get_matrix(is, nu + 1, nu + 1);
    s.Tg_fem = get_matrix(is, nu, n_trace);
    s.Tg_rom = get_matrix(is, nu, n_g);
    s.Gtrace = get_matrix(is, n_trace, nu + 1);
    return s;
}

void write_manifest(const ReducedBasis& b, const std::string& path) {
    std::ofstream os(path);
    os << "reduced basis container\n";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(b.mesh_fingerprint));
    os << "mesh_fingerprint: " << buf << "\n";
    os << "training_seed: " << b.training_seed << "\n";
    os << "interface_trace_dofs: " << b.Zg.rows() << "\n";
    os << "control_modes: " << b.n_g() << " (inner product: interface L2)\n";
    const ReducedSide* sides[2] = {&b.side1, &b.side2};
    for (int i = 0; i < 2; ++i) {
        os << "side " << i + 1 << ": velocity modes " << sides[i]->n_pod << " + supremizers "
           << sides[i]->n_sup() << " (inner product: H1), pressure modes " << sides[i]->n_p()
           << " (inner product: L2)\n";
    }
}

}  // namespace

void save_basis(const ReducedBasis& basis, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("save_basis: cannot open " + path);
    put_bytes(os, kMagic, sizeof kMagic);
    put<std::uint32_t>(os, kVersion);
    put<std::uint64_t>(os, basis.mesh_fingerprint);
    put<std::uint64_t>(os, basis.training_seed);
    put<std::int32_t>(os, static_cast<std::int32_t>(basis.Zg.rows()));
    put<std::int32_t>(os, basis.n_g());
    put_matrix(os, basis.Zg);
    put_side(os, basis.side1);
    put_side(os, basis.side2);
    if (!os) throw std::runtime_error("save_basis: write failed for " + path);
    os.close();
    write_manifest(basis, path + ".manifest.txt");
}

namespace {
constexpr char kTrajMagic[8] = {'N', 'S', 'D', 'D', 'T', 'J', '0', '1'};
}

void save_trajectory(const Trajectory& t, const std::array<double, 2>& mu,
                     std::uint64_t mesh_fingerprint, const std::string& path) {
    if (t.states1.size() != t.states2.size() || t.states1.size() != t.controls.size())
        throw std::invalid_argument("save_trajectory: ragged trajectory");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("save_trajectory: cannot open " + path);
    put_bytes(os, kTrajMagic, sizeof kTrajMagic);
    put<std::uint32_t>(os, kVersion);
    put<std::uint64_t>(os, mesh_fingerprint);
    put<double>(os, mu[0]);
    put<double>(os, mu[1]);
    const int steps = static_cast<int>(t.states1.size());
    put<std::int32_t>(os, steps);
    put<std::int32_t>(os, steps ? static_cast<std::int32_t>(t.states1[0].size()) : 0);
    put<std::int32_t>(os, steps ? static_cast<std::int32_t>(t.states2[0].size()) : 0);
    put<std::int32_t>(os, steps ? static_cast<std::int32_t>(t.controls[0].size()) : 0);
    for (int k = 0; k < steps; ++k) {
        put_vector(os, t.states1[k]);
        put_vector(os, t.states2[k]);
        put_vector(os, t.controls[k]);
    }
    if (!os) throw std::runtime_error("save_trajectory: write failed for " + path);
}

LoadedTrajectory load_trajectory(const std::string& path, std::uint64_t expected_fingerprint) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_trajectory: cannot open " + path);
    char magic[8];
    get_bytes(is, magic, sizeof magic);
    if (std::memcmp(magic, kTrajMagic, sizeof kTrajMagic) != 0)
        throw std::runtime_error("load_trajectory: bad magic in " + path);
    if (get<std::uint32_t>(is) != kVersion)
        throw std::runtime_error("load_trajectory: unsupported container version in " + path);
    LoadedTrajectory out;
    const std::uint64_t fp = get<std::uint64_t>(is);
    if (fp != expected_fingerprint)
        throw std::runtime_error("load_trajectory: mesh fingerprint mismatch in " + path);
    out.mu[0] = get<double>(is);
    out.mu[1] = get<double>(is);
    const int steps = get<std::int32_t>(is);
    const int n1 = get<std::int32_t>(is);
    const int n2 = get<std::int32_t>(is);
    const int ng = get<std::int32_t>(is);
    if (steps < 0 || n1 < 0 || n2 < 0 || ng < 0)
        throw std::runtime_error("load_trajectory: corrupt header in " + path);
    for (int k = 0; k < steps; ++k) {
        out.traj.states1.push_back(get_vector(is, n1));
        out.traj.states2.push_back(get_vector(is, n2));
        out.traj.controls.push_back(get_vector(is, ng));
    }
    return out;
}

ReducedBasis load_basis(const std::string& path, std::uint64_t expected_fingerprint) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_basis: cannot open " + path);
    char magic[8];
    get_bytes(is, magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("load_basis: bad magic in " + path);
    if (get<std::uint32_t>(is) != kVersion)
        throw std::runtime_error("load_basis: unsupported container version in " + path);
    ReducedBasis b;
    b.mesh_fingerprint = get<std::uint64_t>(is);
    b.training_seed = get<std::uint64_t>(is);
    if (b.mesh_fingerprint != expected_fingerprint)
        throw std::runtime_error(
            "load_basis: mesh fingerprint mismatch (basis was built for a different "
            "mesh/configuration); rerun the offline stage");
    const int n_trace = get<std::int32_t>(is);
    const int n_g = get<std::int32_t>(is);
    b.Zg = get_matrix(is, n_trace, n_g);
    b.side1 = get_side(is, n_trace, n_g);
    b.side2 = get_side(is, n_trace, n_g);
    return b;
}

}  // namespace nsdd::rom
