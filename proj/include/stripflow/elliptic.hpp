#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stripflow/fourier.hpp"
#include "stripflow/parallel.hpp"
#include "stripflow/grid.hpp"
#include "stripflow/profile.hpp"
#include "stripflow/strip.hpp"

namespace stripflow {

/// Curvature of the boundary graph y = rho(x) in the convention where
/// portions convex toward the outward normal are positive:
///   kappa = -(1 + rho_x^2)^{-3/2} * rho_xx.
inline std::vector<double> curvature(const BoundaryProfile& p, const SpectralTables& t) {
    const auto rx = spectral_derivative(p, 1, t);
    const auto rxx = spectral_derivative(p, 2, t);
    std::vector<double> k(static_cast<size_t>(p.grid.nx));
    for (int j = 0; j < p.grid.nx; ++j) {
        const size_t u = static_cast<size_t>(j);
        k[u] = -rxx[u] / std::pow(1.0 + rx[u] * rx[u], 1.5);
    }
    return k;
}

inline std::vector<double> curvature(const BoundaryProfile& p) {
    return curvature(p, SpectralTables(p.grid));
}

namespace detail {

/// LU factorization of a block-tridiagonal system with dense nx-by-nx blocks,
/// one block row per y-level m = 0..ny. Stores the inverted pivots, so a
/// solve is matrix-vector sweeps only. Immutable once built; safe to share
/// across threads for concurrent solves.
class BlockTridiagFactor {
  public:
    BlockTridiagFactor() = default;

    /// build(m, A, B, C) fills the sub-, main- and super-diagonal blocks of
    /// row m (A unused at m = 0, C unused at m = ny).
    template <class BlockBuilder>
    void factor(int nx, int ny, BlockBuilder&& build) {
        nx_ = nx;
        ny_ = ny;
        binv_.resize(static_cast<size_t>(ny) + 1);
        low_.resize(static_cast<size_t>(ny) + 1);
        up_.resize(static_cast<size_t>(ny) + 1);
        Eigen::MatrixXd A(nx, nx), B(nx, nx), C(nx, nx);
        for (int m = 0; m <= ny; ++m) {
            build(m, A, B, C);
            if (m > 0) {
                low_[static_cast<size_t>(m)].noalias() = A * binv_[static_cast<size_t>(m - 1)];
                B.noalias() -= low_[static_cast<size_t>(m)] * up_[static_cast<size_t>(m - 1)];
            }
            binv_[static_cast<size_t>(m)] = invert(B);
            if (m < ny) up_[static_cast<size_t>(m)] = C;
        }
    }

    /// In-place solve; rhs is y-major with nx entries per level.
    void solve_inplace(std::vector<double>& rhs) const {
        Eigen::VectorXd tmp(nx_);
        for (int m = 1; m <= ny_; ++m) {
            Eigen::Map<Eigen::VectorXd> zm(rhs.data() + static_cast<size_t>(m) * nx_, nx_);
            Eigen::Map<const Eigen::VectorXd> zp(rhs.data() + static_cast<size_t>(m - 1) * nx_, nx_);
            zm.noalias() -= low_[static_cast<size_t>(m)] * zp;
        }
        {
            Eigen::Map<Eigen::VectorXd> z(rhs.data() + static_cast<size_t>(ny_) * nx_, nx_);
            tmp.noalias() = binv_[static_cast<size_t>(ny_)] * z;
            z = tmp;
        }
        for (int m = ny_ - 1; m >= 0; --m) {
            Eigen::Map<Eigen::VectorXd> z(rhs.data() + static_cast<size_t>(m) * nx_, nx_);
            Eigen::Map<const Eigen::VectorXd> zn(rhs.data() + static_cast<size_t>(m + 1) * nx_, nx_);
            tmp.noalias() = z - up_[static_cast<size_t>(m)] * zn;
            z.noalias() = binv_[static_cast<size_t>(m)] * tmp;
        }
    }

  private:
    static Eigen::MatrixXd invert(const Eigen::MatrixXd& B) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
        const auto du = lu.matrixLU().diagonal().cwiseAbs();
        if (!(du.minCoeff() > du.maxCoeff() * 1e-15))
            throw SingularSystem("block pivot is numerically singular");
        Eigen::MatrixXd inv = lu.inverse();
        if (!inv.allFinite()) throw SingularSystem("block inverse is not finite");
        return inv;
    }

    int nx_ = 0, ny_ = 0;
    std::vector<Eigen::MatrixXd> binv_, low_, up_;
};

}  // namespace detail

/// The pulled-back Laplacian on the reference strip for a boundary profile
/// rho, discretized spectrally in x' and with second-order centered
/// differences in y':
///   A(rho) v = v_x'x' + cxy v_x'y' + cyy v_y'y' + cy v_y',
///   cxy = -2 y' rho_x / rho,  cyy = (1 + y'^2 rho_x^2) / rho^2,
///   cy  = -y' (rho_xx rho - 2 rho_x^2) / rho^2.
/// Holds one factored system per boundary-row variant: the Dirichlet/
/// Dirichlet shift-by-identity system of the nutrient solve and the ghost-
/// node Neumann / Dirichlet system of the pressure solve. Both are built in
/// the constructor and reused for every right-hand side.
///
/// Profiles with min rho < 1e-6 * mean rho are rejected (PinchOff): the
/// strip map degenerates there.
class TransformedOperator {
  public:
    TransformedOperator(BoundaryProfile profile, int ny, std::shared_ptr<const SpectralTables> tables,
                        bool assemble_solvers = true)
        : profile_(std::move(profile)), ny_(ny), tables_(std::move(tables)) {
        if (!tables_ || tables_->grid() != profile_.grid)
            throw GridMismatch("TransformedOperator: tables grid does not match profile grid");
        if (ny_ < 2) throw DomainError("TransformedOperator: ny must be >= 2");
        if (profile_.min() < 1e-6 * profile_.mean())
            throw PinchOff("TransformedOperator: min rho < 1e-6 * mean rho");
        BoundaryProfile p = profile_;
        rho_x_ = spectral_derivative(p, 1, *tables_);
        rho_xx_ = spectral_derivative(p, 2, *tables_);
        if (assemble_solvers) {
            auto factor_r = [this] {
                fac_r_.factor(grid().nx, ny_, [this](int m, Eigen::MatrixXd& A, Eigen::MatrixXd& B,
                                                     Eigen::MatrixXd& C) { build_row_r(m, A, B, C); });
            };
            auto factor_st = [this] {
                fac_st_.factor(grid().nx, ny_, [this](int m, Eigen::MatrixXd& A, Eigen::MatrixXd& B,
                                                      Eigen::MatrixXd& C) { build_row_st(m, A, B, C); });
            };
            // the two factorizations are independent; overlap them when a
            // second worker is available (results are unaffected)
            if (worker_cap() >= 2) {
                std::exception_ptr err;
                std::thread side([&] {
                    try {
                        factor_r();
                    } catch (...) {
                        err = std::current_exception();
                    }
                });
                factor_st();
                side.join();
                if (err) std::rethrow_exception(err);
            } else {
                factor_r();
                factor_st();
            }
        }
    }

    const BoundaryProfile& profile() const { return profile_; }
    const PeriodicGrid& grid() const { return profile_.grid; }
    int ny() const { return ny_; }
    const SpectralTables& tables() const { return *tables_; }
    const std::vector<double>& rho_x() const { return rho_x_; }
    const std::vector<double>& rho_xx() const { return rho_xx_; }
    double hy() const { return 1.0 / ny_; }

    /// Coefficients of the operator at node (j, y').
    double cxy(int j, double y) const {
        const size_t u = static_cast<size_t>(j);
        return -2.0 * y * rho_x_[u] / profile_.values[u];
    }
    double cyy(int j, double y) const {
        const size_t u = static_cast<size_t>(j);
        const double rho = profile_.values[u];
        return (1.0 + y * y * rho_x_[u] * rho_x_[u]) / (rho * rho);
    }
    double cy(int j, double y) const {
        const size_t u = static_cast<size_t>(j);
        const double rho = profile_.values[u];
        return -y * (rho_xx_[u] * rho - 2.0 * rho_x_[u] * rho_x_[u]) / (rho * rho);
    }

    const detail::BlockTridiagFactor& factor_r() const { return fac_r_; }
    const detail::BlockTridiagFactor& factor_st() const { return fac_st_; }

  private:
    // Interior PDE row m; shift adds shift*I to the diagonal block (the
    // nutrient system folds A tau = tau into the matrix as A - I).
    void fill_interior(int m, double shift, Eigen::MatrixXd& A, Eigen::MatrixXd& B,
                       Eigen::MatrixXd& C) const {
        const int nx = grid().nx;
        const double h = hy();
        const double y = static_cast<double>(m) * h;
        Eigen::VectorXd vxy(nx), vyy(nx), vy(nx);
        for (int j = 0; j < nx; ++j) {
            vxy(j) = cxy(j, y);
            vyy(j) = cyy(j, y);
            vy(j) = cy(j, y);
        }
        const Eigen::MatrixXd& d1 = tables_->d1();
        A.noalias() = (-0.5 / h) * (vxy.asDiagonal() * d1);
        A.diagonal().array() += (vyy.array() / (h * h) - vy.array() * (0.5 / h));
        C.noalias() = (0.5 / h) * (vxy.asDiagonal() * d1);
        C.diagonal().array() += (vyy.array() / (h * h) + vy.array() * (0.5 / h));
        B = tables_->d2();
        B.diagonal().array() += -2.0 * vyy.array() / (h * h) + shift;
    }

    void build_row_r(int m, Eigen::MatrixXd& A, Eigen::MatrixXd& B, Eigen::MatrixXd& C) const {
        const int nx = grid().nx;
        if (m == 0 || m == ny_) {
            A.setZero(nx, nx);
            C.setZero(nx, nx);
            B.setIdentity(nx, nx);
            return;
        }
        fill_interior(m, -1.0, A, B, C);
    }

    void build_row_st(int m, Eigen::MatrixXd& A, Eigen::MatrixXd& B, Eigen::MatrixXd& C) const {
        const int nx = grid().nx;
        if (m == ny_) {
            A.setZero(nx, nx);
            C.setZero(nx, nx);
            B.setIdentity(nx, nx);
            return;
        }
        if (m == 0) {
            // Ghost node eliminated at y' = 0: v_{-1} = v_1, and the y'-factor
            // kills the cxy and cy terms there, so the row is
            // D2 v_0 + cyy(0) (2 v_1 - 2 v_0)/h^2 = f_0.
            A.setZero(nx, nx);
            const double h = hy();
            Eigen::VectorXd vyy(nx);
            for (int j = 0; j < nx; ++j) vyy(j) = cyy(j, 0.0);
            B = tables_->d2();
            B.diagonal().array() += -2.0 * vyy.array() / (h * h);
            C.setZero(nx, nx);
            C.diagonal().array() = 2.0 * vyy.array() / (h * h);
            return;
        }
        fill_interior(m, 0.0, A, B, C);
    }

    BoundaryProfile profile_;
    int ny_;
    std::shared_ptr<const SpectralTables> tables_;
    std::vector<double> rho_x_, rho_xx_;
    detail::BlockTridiagFactor fac_r_, fac_st_;
};

/// Pointwise evaluation of A(rho) v at interior nodes (spectral in x',
/// centered FD in y'); boundary rows of the result are zero.
inline StripField apply_A(const TransformedOperator& op, const StripField& v) {
    if (v.grid_x != op.grid() || v.ny != op.ny())
        throw GridMismatch("apply_A: field grid does not match operator grid");
    const int nx = op.grid().nx, ny = op.ny();
    const double h = op.hy();
    StripField out(op.grid(), ny);
    Eigen::VectorXd vm(nx), dy(nx), xx(nx), xy(nx);
    for (int m = 1; m < ny; ++m) {
        const double y = static_cast<double>(m) * h;
        Eigen::Map<const Eigen::VectorXd> row(v.v.data() + static_cast<size_t>(m) * nx, nx);
        Eigen::Map<const Eigen::VectorXd> rp(v.v.data() + static_cast<size_t>(m + 1) * nx, nx);
        Eigen::Map<const Eigen::VectorXd> rm(v.v.data() + static_cast<size_t>(m - 1) * nx, nx);
        dy = (rp - rm) / (2.0 * h);
        xx.noalias() = op.tables().d2() * row;
        xy.noalias() = op.tables().d1() * dy;
        for (int j = 0; j < nx; ++j) {
            const double yy = (rp(j) - 2.0 * row(j) + rm(j)) / (h * h);
            out.at(j, m) = xx(j) + op.cxy(j, y) * xy(j) + op.cyy(j, y) * yy + op.cy(j, y) * dy(j);
        }
    }
    return out;
}

/// Trace stencils of the co-normal boundary operator at y' = 1. Kept as a
/// separate lightweight object so the functional can be evaluated without
/// assembling solvers.
struct BoundaryFunctional {
    BoundaryProfile profile;
    std::shared_ptr<const SpectralTables> tables;
    std::vector<double> rho_x;

    BoundaryFunctional(BoundaryProfile p, std::shared_ptr<const SpectralTables> t)
        : profile(std::move(p)), tables(std::move(t)) {
        if (!tables || tables->grid() != profile.grid)
            throw GridMismatch("BoundaryFunctional: tables grid does not match profile grid");
        rho_x = spectral_derivative(profile, 1, *tables);
    }
};

/// B(rho) v = (-v_x' + v_y' rho_x / rho)|_{y'=1} rho_x + (1/rho) v_y'|_{y'=1}.
/// The normal (-rho_x, 1) is not normalized, matching rho_t = -dp/dnu.
/// v_y' at the boundary uses the second-order one-sided stencil.
inline std::vector<double> apply_B(const BoundaryFunctional& bf, const StripField& v) {
    if (v.grid_x != bf.profile.grid) throw GridMismatch("apply_B: field grid mismatch");
    const int nx = v.grid_x.nx, ny = v.ny;
    if (ny < 2) throw DomainError("apply_B: need ny >= 2 for the boundary stencil");
    const double h = 1.0 / ny;
    Eigen::Map<const Eigen::VectorXd> top(v.v.data() + static_cast<size_t>(ny) * nx, nx);
    Eigen::VectorXd vx = bf.tables->d1() * top;
    std::vector<double> out(static_cast<size_t>(nx));
    for (int j = 0; j < nx; ++j) {
        const size_t u = static_cast<size_t>(j);
        const double vy =
            (3.0 * v.at(j, ny) - 4.0 * v.at(j, ny - 1) + v.at(j, ny - 2)) / (2.0 * h);
        const double rho = bf.profile.values[u];
        out[u] = (-vx(j) + vy * bf.rho_x[u] / rho) * bf.rho_x[u] + vy / rho;
    }
    return out;
}

/// Nutrient solve tau = R(rho)(sigma_bar_1, sigma_bar_2):
///   A(rho) tau = tau in the strip, tau = sigma_bar_1 at y' = 0,
///   tau = sigma_bar_2 at y' = 1.
inline StripField solve_R(const TransformedOperator& op, double sigma_bar_1, double sigma_bar_2) {
    const int nx = op.grid().nx, ny = op.ny();
    std::vector<double> rhs(static_cast<size_t>(nx) * (static_cast<size_t>(ny) + 1), 0.0);
    for (int j = 0; j < nx; ++j) {
        rhs[static_cast<size_t>(j)] = sigma_bar_1;
        rhs[static_cast<size_t>(ny) * nx + j] = sigma_bar_2;
    }
    op.factor_r().solve_inplace(rhs);
    return StripField(op.grid(), ny, std::move(rhs));
}

/// Pressure-type solve q = S(rho) f + T(rho) k:
///   A(rho) q = f in the strip, q_y' = 0 at y' = 0 (ghost node),
///   q = k_bc at y' = 1. Linear in (f, k_bc) exactly.
inline StripField solve_ST(const TransformedOperator& op, const StripField& f,
                           const std::vector<double>& k_bc) {
    const int nx = op.grid().nx, ny = op.ny();
    if (f.grid_x != op.grid() || f.ny != ny) throw GridMismatch("solve_ST: rhs grid mismatch");
    if (static_cast<int>(k_bc.size()) != nx) throw GridMismatch("solve_ST: k_bc size mismatch");
    std::vector<double> rhs = f.v;
    for (int j = 0; j < nx; ++j) rhs[static_cast<size_t>(ny) * nx + j] = k_bc[static_cast<size_t>(j)];
    op.factor_st().solve_inplace(rhs);
    return StripField(op.grid(), ny, std::move(rhs));
}

namespace detail {

/// Boundary flux used by the evolution and the volume accounting: same
/// continuous functional as apply_B, but the normal-derivative slot uses the
/// compact correction (q_ny - q_{ny-1})/h + (h/2) q_y'y'(1) with q_y'y'
/// recovered from the interior equation at the top row. Second-order like
/// the plain stencil, and on flat profiles it makes the discrete volume
/// identity telescope exactly against the trapezoid strip quadrature.
inline std::vector<double> boundary_flux_compact(const TransformedOperator& op, const StripField& q,
                                                 const std::vector<double>& f_top) {
    const int nx = op.grid().nx, ny = op.ny();
    if (q.grid_x != op.grid() || q.ny != ny)
        throw GridMismatch("boundary_flux_compact: field grid mismatch");
    const double h = op.hy();
    Eigen::Map<const Eigen::VectorXd> top(q.v.data() + static_cast<size_t>(ny) * nx, nx);
    Eigen::VectorXd qx = op.tables().d1() * top;
    Eigen::VectorXd qxx = op.tables().d2() * top;
    Eigen::VectorXd qy(nx);
    for (int j = 0; j < nx; ++j)
        qy(j) = (3.0 * q.at(j, ny) - 4.0 * q.at(j, ny - 1) + q.at(j, ny - 2)) / (2.0 * h);
    Eigen::VectorXd qxy = op.tables().d1() * qy;
    std::vector<double> out(static_cast<size_t>(nx));
    for (int j = 0; j < nx; ++j) {
        const size_t u = static_cast<size_t>(j);
        const double rho = op.profile().values[u];
        const double qyy =
            (f_top[u] - qxx(j) - op.cxy(j, 1.0) * qxy(j) - op.cy(j, 1.0) * qy(j)) / op.cyy(j, 1.0);
        const double dc = (q.at(j, ny) - q.at(j, ny - 1)) / h + 0.5 * h * qyy;
        out[u] = (-qx(j) + qy(j) * op.rho_x()[u] / rho) * op.rho_x()[u] + dc / rho;
    }
    return out;
}

}  // namespace detail

}  // namespace stripflow
