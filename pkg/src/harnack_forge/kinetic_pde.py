"""Finite-difference solver and Harnack verification for the kinetic equation.

The equation is integrated in generator (advective) form,

    rho_t = Delta_v rho - <grad_v U, grad_v rho> - <v, grad_x rho>,

so values are transported along the characteristic field (+v, +grad_v U)
and diffused in velocity.  This form obeys a maximum principle but not
mass conservation (the drift term sources mass at rate int rho
Delta_v U); the evolve ledger accounts for boundary fluxes and the
drift source separately.

Two schemes are provided.  "lie" is the plain first-order splitting:
upwind x-transport, upwind v-drift, implicit backward-Euler velocity
diffusion, under a CFL restriction.  "strang" is a telescoped Strang
splitting whose transport substep is semi-Lagrangian (integer cell
shift plus fractional upwind), unconditionally stable and roughly
second order in practice; it exists because the plain scheme's
numerical diffusion converges too slowly for tight error targets.

Verification compares the estimated Hessian of log rho - U/2 on the
grid against the Riccati bound N evaluated at the absolute snapshot
time; a solution born at t0 from spread-out data dominates the bound
of age t0 already, so absolute time is the correct argument.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.linalg import solve_banded

from .closed_forms import assemble_bound, eval_sfuncs
from .riccati_engine import BlockSym2n, CurvatureBound, bound_N

BOUNDARY_LEAK_WARN = 1e-4
LEDGER_TOL = 1e-10
FLOOR_FRAC_DEFAULT = 1e-12


class CFLError(RuntimeError):
    """Requested step violates the advective CFL restriction."""


class UntestableRegionError(RuntimeError):
    """No grid point passed the density-floor precondition."""


# ---------------------------------------------------------------------------
# potentials


class Potential:
    """Velocity-coupled potential U(x, v) with derivative access.

    Subclasses override value(); gradient and velocity Laplacian fall
    back to central finite differences, so custom potentials only need
    the scalar field.  All methods broadcast over meshgrid arrays.
    """

    fd_step = 1e-6

    def value(self, x, v):
        raise NotImplementedError

    def grad_x(self, x, v):
        e = self.fd_step
        return (self.value(x + e, v) - self.value(x - e, v)) / (2 * e)

    def grad_v(self, x, v):
        e = self.fd_step
        return (self.value(x, v + e) - self.value(x, v - e)) / (2 * e)

    def lap_v(self, x, v):
        e = self.fd_step
        return (
            self.value(x, v + e) - 2 * self.value(x, v) + self.value(x, v - e)
        ) / e**2

    def gradient_check(self, points, tol=1e-5):
        """Max mismatch between analytic and FD gradients at sample points.

        Returns the worst absolute difference; raises if it exceeds tol.
        Useful when a subclass overrides the gradients analytically.
        """
        x = np.asarray([p[0] for p in points], dtype=float)
        v = np.asarray([p[1] for p in points], dtype=float)
        e = self.fd_step
        fd_x = (self.value(x + e, v) - self.value(x - e, v)) / (2 * e)
        fd_v = (self.value(x, v + e) - self.value(x, v - e)) / (2 * e)
        worst = max(
            float(np.abs(self.grad_x(x, v) - fd_x).max()),
            float(np.abs(self.grad_v(x, v) - fd_v).max()),
        )
        if worst > tol:
            raise ValueError(f"gradient check failed: max mismatch {worst:.3e}")
        return worst


class ZeroPotential(Potential):
    """Free equation, U identically zero."""

    def value(self, x, v):
        return np.zeros(np.broadcast(x, v).shape)

    def grad_x(self, x, v):
        return np.zeros(np.broadcast(x, v).shape)

    def grad_v(self, x, v):
        return np.zeros(np.broadcast(x, v).shape)

    def lap_v(self, x, v):
        return np.zeros(np.broadcast(x, v).shape)


class QuadraticPotential(Potential):
    """U = (q_xx x^2 + 2 q_xv x v + q_vv v^2) / 2 with exact derivatives."""

    def __init__(self, q_xx=0.0, q_xv=0.0, q_vv=0.0):
        self.q_xx = float(q_xx)
        self.q_xv = float(q_xv)
        self.q_vv = float(q_vv)

    def value(self, x, v):
        return 0.5 * (
            self.q_xx * np.square(x)
            + 2.0 * self.q_xv * np.asarray(x) * np.asarray(v)
            + self.q_vv * np.square(v)
        )

    def grad_x(self, x, v):
        return self.q_xx * np.asarray(x) + self.q_xv * np.asarray(v)

    def grad_v(self, x, v):
        return self.q_xv * np.asarray(x) + self.q_vv * np.asarray(v)

    def lap_v(self, x, v):
        return np.full(np.broadcast(x, v).shape, self.q_vv)


class CustomPotential(Potential):
    """Potential wrapping user callables; derivatives default to FD."""

    def __init__(self, value, grad_x=None, grad_v=None, lap_v=None):
        self._value = value
        self._gx = grad_x
        self._gv = grad_v
        self._lv = lap_v

    def value(self, x, v):
        return np.asarray(self._value(x, v), dtype=float)

    def grad_x(self, x, v):
        if self._gx is None:
            return super().grad_x(x, v)
        return np.asarray(self._gx(x, v), dtype=float)

    def grad_v(self, x, v):
        if self._gv is None:
            return super().grad_v(x, v)
        return np.asarray(self._gv(x, v), dtype=float)

    def lap_v(self, x, v):
        if self._lv is None:
            return super().lap_v(x, v)
        return np.asarray(self._lv(x, v), dtype=float)


def compute_h(potential, x, v):
    """Curvature function h = -<v, U_x>/2 + Delta_v U / 2 - |U_v|^2 / 4."""
    return (
        -0.5 * np.asarray(v) * potential.grad_x(x, v)
        + 0.5 * potential.lap_v(x, v)
        - 0.25 * np.square(potential.grad_v(x, v))
    )


def _hessian_h(potential, x, v, step=1e-4):
    """Second differences of h at sample points; (hxx, hxv, hvv) arrays."""
    e = step

    def h(a, b):
        return compute_h(potential, a, b)

    hxx = (h(x + e, v) - 2 * h(x, v) + h(x - e, v)) / e**2
    hvv = (h(x, v + e) - 2 * h(x, v) + h(x, v - e)) / e**2
    hxv = (h(x + e, v + e) - h(x + e, v - e) - h(x - e, v + e) + h(x - e, v - e)) / (
        4 * e**2
    )
    return hxx, hxv, hvv


def curvature_of(potential, box=4.0, samples=41, feas_tol=1e-10):
    """Minimal scalar curvature pair (k1, k2) for a potential.

    Finds the lexicographically minimal pair (k2 first, then k1) such
    that Hess h + diag(k1, k2) is positive semidefinite at every sample
    point of [-box, box]^2, via the Schur complement of the (v, v)
    entry.  The minimum over k2 may be an infimum rather than attained;
    feas_tol sets the attainment margin.
    """
    g = np.linspace(-box, box, samples)
    X, V = np.meshgrid(g, g, indexing="ij")
    hxx, hxv, hvv = _hessian_h(potential, X, V)
    hxx, hxv, hvv = hxx.ravel(), hxv.ravel(), hvv.ravel()

    k2 = max(0.0, float(-hvv.min()))
    # points whose (v,v) entry is exactly pinned need zero cross term;
    # otherwise the Schur complement forces k2 strictly above the pin
    cross = np.abs(hxv) > feas_tol
    if np.any(cross):
        k2 = max(k2, float(-(hvv[cross].min())) + feas_tol)
    k2 = max(k2, 0.0)
    denom = hvv + k2
    need = np.where(
        denom > feas_tol, np.square(hxv) / np.maximum(denom, feas_tol) - hxx, -hxx
    )
    k1 = max(0.0, float(need.max()))
    return CurvatureBound(k1=k1, k2=k2, n=1)


# ---------------------------------------------------------------------------
# grid fields


def make_grid(extent, n):
    """Cell-centered symmetric grid on [-extent, extent] with n cells."""
    if n < 8:
        raise ValueError("grid needs at least 8 cells")
    return np.linspace(-extent, extent, n, endpoint=False) + extent / n


class GridField:
    """Nonnegative density on a tensor phase-space grid.

    rho has shape (nx, nv) over cell-centered coordinates xs, vs; t is
    the absolute time of the snapshot and t0 the birth time of the
    run.  boundary_warning is set when more than BOUNDARY_LEAK_WARN of
    the mass sits in the outermost cell ring (the Dirichlet boundary is
    then visibly truncating the solution).
    """

    def __init__(self, xs, vs, rho, t, t0=None):
        self.xs = np.asarray(xs, dtype=float)
        self.vs = np.asarray(vs, dtype=float)
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (self.xs.size, self.vs.size):
            raise ValueError(
                f"rho shape {rho.shape} does not match grid "
                f"({self.xs.size}, {self.vs.size})"
            )
        if float(rho.min()) < -1e-12:
            raise ValueError(f"density has negative entries: min {rho.min():.3e}")
        self.rho = np.maximum(rho, 0.0)
        self.t = float(t)
        self.t0 = float(t0) if t0 is not None else float(t)
        edge = (
            self.rho[0, :].sum()
            + self.rho[-1, :].sum()
            + self.rho[1:-1, 0].sum()
            + self.rho[1:-1, -1].sum()
        )
        total = self.rho.sum()
        self.boundary_fraction = float(edge / total) if total > 0 else 0.0
        self.boundary_warning = self.boundary_fraction > BOUNDARY_LEAK_WARN

    @property
    def dx(self):
        return float(self.xs[1] - self.xs[0])

    @property
    def dv(self):
        return float(self.vs[1] - self.vs[0])

    def mass(self):
        return float(self.rho.sum() * self.dx * self.dv)

    def meshes(self):
        return np.meshgrid(self.xs, self.vs, indexing="ij")


def kernel_field(t, extent=4.0, n=256, x0=0.0, v0=0.0, sigma2=None):
    """Grid sampling of an exact Gaussian state as an initial condition.

    With sigma2 None the state is the fundamental solution of age t;
    otherwise an isotropic Gaussian with covariance sigma2 * I centered
    at (x0, v0), which models spread-out initial data born at time t.
    """
    from .gaussian_kernel import GaussianState, grid_density, kernel_state

    xs = make_grid(extent, n)
    if sigma2 is None:
        state = kernel_state([x0], [v0], t)
    else:
        state = GaussianState.make(
            [x0, v0], float(sigma2) * np.eye(2), t
        )
    rho = grid_density(state, xs, xs)
    return GridField(xs, xs, rho, t=t, t0=t)


# ---------------------------------------------------------------------------
# evolution


@dataclass
class EvolveReport:
    """Mass accounting and step statistics for one evolve call."""

    n_steps: int
    dt: float
    mass_initial: float
    mass_final: float
    x_boundary_loss: float
    diffusion_loss: float
    drift_source: float
    ledger_discrepancy: float
    cfl_x: float
    cfl_v: float
    scheme: str
    substeps: list = dc_field(default_factory=list)


def _upwind_x(rho, vs, dx, dt):
    """First-order upwind transport in x with speed v (columnwise).

    Returns (new_rho, boundary_loss) where the loss is the exact
    telescoped edge flux; zero Dirichlet inflow.
    """
    c = vs * dt / dx  # per-column Courant number
    pos = c > 0
    neg = c < 0
    new = rho.copy()
    left = np.vstack([np.zeros((1, rho.shape[1])), rho[:-1, :]])
    right = np.vstack([rho[1:, :], np.zeros((1, rho.shape[1]))])
    new[:, pos] = rho[:, pos] - c[pos] * (rho[:, pos] - left[:, pos])
    new[:, neg] = rho[:, neg] - c[neg] * (right[:, neg] - rho[:, neg])
    loss = float(np.sum(c[pos] * rho[-1, pos]) + np.sum(-c[neg] * rho[0, neg]))
    return new, loss


def _upwind_v(rho, speed, dv, dt):
    """First-order upwind drift in v with a pointwise speed field."""
    cv = speed * dt / dv
    left = np.pad(rho, ((0, 0), (1, 0)))[:, :-1]
    right = np.pad(rho, ((0, 0), (0, 1)))[:, 1:]
    return np.where(cv > 0, rho - cv * (rho - left), rho - cv * (right - rho))


def _diffuse_v(rho, dv, dt, nsub=1):
    """Implicit backward-Euler velocity diffusion, zero Dirichlet.

    Returns (new_rho, boundary_loss); the loss is the exact telescoped
    edge flux of the tridiagonal solve, accumulated over substeps.
    """
    nv = rho.shape[1]
    r = (dt / nsub) / dv**2
    ab = np.zeros((3, nv))
    ab[0, 1:] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[2, :-1] = -r
    loss = 0.0
    out = rho
    for _ in range(nsub):
        out = solve_banded((1, 1), ab, out.T).T
        loss += r * float(out[:, 0].sum() + out[:, -1].sum())
    return out, loss


def _shift_col(col, k):
    """Shift a column by k cells toward +x, zero fill (no wraparound)."""
    n = col.size
    out = np.zeros_like(col)
    if k == 0:
        return col.copy()
    if abs(k) >= n:
        return out
    if k > 0:
        out[k:] = col[:-k]
    else:
        out[: n + k] = col[-k:]
    return out


def _sl_advect_x(rho, vs, dx, tau):
    """Semi-Lagrangian x-transport: integer shift + fractional upwind.

    Exact for the integer part of the Courant number, first-order
    diffusive only in the fractional remainder; stable for any tau.
    """
    out = np.empty_like(rho)
    for j, v in enumerate(vs):
        c = v * tau / dx
        k = int(np.floor(c))
        a = c - k
        col = rho[:, j]
        shifted = _shift_col(col, k)
        if a > 0.0:
            shifted = (1.0 - a) * shifted + a * _shift_col(col, k + 1)
        out[:, j] = shifted
    return out


def cfl_rates(field, potential):
    """Unit-time Courant rates (|v|/dx max, |U_v|/dv max) on the grid."""
    X, V = field.meshes()
    rate_x = float(np.abs(field.vs).max() / field.dx)
    rate_v = float(np.abs(potential.grad_v(X, V)).max() / field.dv)
    return rate_x, rate_v


def evolve(
    field,
    potential,
    t1,
    scheme="lie",
    cfl_limit=0.9,
    dt=None,
    chunks=2,
    diffusion_substeps=16,
):
    """Advance a grid field to absolute time t1.

    scheme "lie": per step, upwind x-transport, upwind v-drift, one
    implicit diffusion solve; dt is chosen from the CFL limit unless
    given explicitly (an explicit violating dt raises CFLError).

    scheme "strang": telescoped Strang splitting over `chunks` equal
    chunks, semi-Lagrangian transport, `diffusion_substeps` implicit
    substeps per chunk.  Aimed at the free equation; a nonzero drift is
    stepped with upwind inside each chunk and must satisfy CFL at the
    chunk size.

    Returns (GridField at t1, EvolveReport).
    """
    if not t1 > field.t:
        raise ValueError(f"t1={t1} must exceed the field time {field.t}")
    T = t1 - field.t
    X, V = field.meshes()
    speed = potential.grad_v(X, V)
    has_drift = bool(np.abs(speed).max() > 0)
    rate_x, rate_v = cfl_rates(field, potential)
    m0 = field.mass()
    cell = field.dx * field.dv

    x_loss = 0.0
    diff_loss = 0.0
    drift_src = 0.0
    worst_ledger = 0.0

    if scheme == "lie":
        rate = max(rate_x, rate_v)
        if rate <= 0:
            raise ValueError("degenerate grid: zero transport rates")
        dt_max = cfl_limit / rate
        if dt is None:
            n_steps = max(1, int(np.ceil(T / dt_max)))
            dt = T / n_steps
        else:
            n_steps = max(1, int(round(T / dt)))
            if abs(n_steps * dt - T) > 1e-9 * max(T, 1.0):
                raise ValueError("explicit dt must divide the time interval")
            if dt > dt_max * (1 + 1e-12):
                raise CFLError(
                    f"dt={dt:.3e} exceeds CFL limit {dt_max:.3e} "
                    f"(rates: x {rate_x:.3g}, v {rate_v:.3g})"
                )
        rho = field.rho
        for _ in range(n_steps):
            before = rho.sum()
            rho, lx = _upwind_x(rho, field.vs, field.dx, dt)
            gap = abs((before - rho.sum()) - lx)
            worst_ledger = max(worst_ledger, gap / max(before, 1.0))
            x_loss += lx * cell
            if has_drift:
                before = rho.sum()
                rho = _upwind_v(rho, speed, field.dv, dt)
                drift_src += (rho.sum() - before) * cell
            before = rho.sum()
            rho, ld = _diffuse_v(rho, field.dv, dt, nsub=1)
            gap = abs((before - rho.sum()) - ld)
            worst_ledger = max(worst_ledger, gap / max(before, 1.0))
            diff_loss += ld * cell
        report_dt = dt
        cx, cv = rate_x * dt, rate_v * dt
    elif scheme == "strang":
        if chunks < 1:
            raise ValueError("chunks must be >= 1")
        delta = T / chunks
        if has_drift and rate_v * delta > 1.0 + 1e-12:
            raise CFLError(
                f"drift CFL {rate_v * delta:.3g} > 1 at chunk size {delta:.3e}; "
                "increase chunks for potentials with drift"
            )

        def transport(rho, tau):
            nonlocal x_loss, drift_src, worst_ledger
            before = rho.sum()
            rho = _sl_advect_x(rho, field.vs, field.dx, tau)
            x_loss += (before - rho.sum()) * cell
            if has_drift:
                before = rho.sum()
                rho = _upwind_v(rho, speed, field.dv, tau)
                drift_src += (rho.sum() - before) * cell
            return rho

        rho = transport(field.rho, 0.5 * delta)
        for i in range(chunks):
            before = rho.sum()
            rho, ld = _diffuse_v(rho, field.dv, delta, nsub=diffusion_substeps)
            gap = abs((before - rho.sum()) - ld)
            worst_ledger = max(worst_ledger, gap / max(before, 1.0))
            diff_loss += ld * cell
            rho = transport(rho, delta if i < chunks - 1 else 0.5 * delta)
        n_steps = chunks
        report_dt = delta
        cx, cv = rate_x * delta, rate_v * delta
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    out = GridField(field.xs, field.vs, rho, t=t1, t0=field.t0)
    m1 = out.mass()
    # closing identity: every unit of mass change is a recorded flux
    closure = abs((m0 - m1) - (x_loss + diff_loss - drift_src)) / max(m0, 1e-300)
    worst_ledger = max(worst_ledger, 0.0 if closure <= LEDGER_TOL else closure)
    report = EvolveReport(
        n_steps=n_steps,
        dt=report_dt,
        mass_initial=m0,
        mass_final=m1,
        x_boundary_loss=x_loss,
        diffusion_loss=diff_loss,
        drift_source=drift_src,
        ledger_discrepancy=worst_ledger,
        cfl_x=cx,
        cfl_v=cv,
        scheme=scheme,
    )
    if report.ledger_discrepancy > LEDGER_TOL:
        raise RuntimeError(
            f"mass ledger does not close: discrepancy {report.ledger_discrepancy:.3e}"
        )
    return out, report


# ---------------------------------------------------------------------------
# Hessian estimation and Harnack verification


def _log_field(field, potential):
    X, V = field.meshes()
    with np.errstate(divide="ignore"):
        g = np.where(field.rho > 0, np.log(np.maximum(field.rho, 1e-300)), -np.inf)
    return g - 0.5 * potential.value(X, V)


def _stencil_arrays(field, potential, floor_frac):
    """Second differences of g = log rho - U/2 on the 2-cell interior.

    Returns (gxx, gxv, gvv, testable) on the (nx-4, nv-4) interior;
    a point is testable when the full 5x5 density stencil around it
    clears the floor floor_frac * peak.
    """
    nx, nv = field.rho.shape
    if nx < 5 or nv < 5:
        raise ValueError("grid too small for the 5x5 Hessian stencil")
    floor = floor_frac * float(field.rho.max())
    window_min = sliding_window_view(field.rho, (5, 5)).min(axis=(2, 3))
    testable = window_min >= floor
    g = _log_field(field, potential)
    dx, dv = field.dx, field.dv
    center = g[2:-2, 2:-2]
    # log of empty cells is -inf; the resulting non-finite differences
    # are masked out below, so the invalid-value warnings are spurious
    with np.errstate(invalid="ignore"):
        gxx = (g[3:-1, 2:-2] - 2 * center + g[1:-3, 2:-2]) / dx**2
        gvv = (g[2:-2, 3:-1] - 2 * center + g[2:-2, 1:-3]) / dv**2
        gxv = (g[3:-1, 3:-1] - g[3:-1, 1:-3] - g[1:-3, 3:-1] + g[1:-3, 1:-3]) / (
            4 * dx * dv
        )
    bad = ~np.isfinite(gxx) | ~np.isfinite(gvv) | ~np.isfinite(gxv)
    testable = testable & ~bad
    return gxx, gxv, gvv, testable


def estimate_log_hessian(field, potential, i, j, floor_frac=FLOOR_FRAC_DEFAULT):
    """Estimated Hessian of log rho - U/2 at grid index (i, j).

    Centered second differences over the 3x3 neighborhood; the full 5x5
    density stencil must clear the floor (floor_frac times the peak),
    otherwise the point is untestable and a ValueError is raised.
    Indices within two cells of the boundary are rejected.
    """
    nx, nv = field.rho.shape
    if not (2 <= i < nx - 2 and 2 <= j < nv - 2):
        raise ValueError(
            f"index ({i}, {j}) is within two cells of the boundary; "
            "the stencil does not fit"
        )
    gxx, gxv, gvv, testable = _stencil_arrays(field, potential, floor_frac)
    ii, jj = i - 2, j - 2
    if not testable[ii, jj]:
        raise ValueError(
            f"point ({i}, {j}) untestable: density below floor on the 5x5 stencil"
        )
    return BlockSym2n(
        np.array([[gxx[ii, jj], gxv[ii, jj]], [gxv[ii, jj], gvv[ii, jj]]])
    )


def _bound_matrix(curvature, t, bound_source, tol=1e-10):
    if bound_source == "oracle":
        return bound_N(curvature, t, tol=tol).entries
    if bound_source == "closed_form":
        if curvature.k1 is None:
            raise ValueError("closed_form bound needs a scalar curvature pair")
        sf = eval_sfuncs(curvature.k1, curvature.k2, t)
        return assemble_bound(sf, n=curvature.n).entries
    raise ValueError(f"unknown bound_source {bound_source!r}")


@dataclass
class HarnackCheckReport:
    """Outcome of a matrix or scalar Harnack verification on a field."""

    kind: str  # "matrix" or "scalar"
    t: float
    bound_source: str
    min_margin: float
    argmin: tuple  # (x, v) location of the worst margin
    n_tested: int
    n_untestable: int
    fraction_ok: float
    tolerance: float
    passed: bool


def _region_mask(field, region):
    if region is None:
        return np.ones((field.xs.size - 4, field.vs.size - 4), dtype=bool)
    x_lo, x_hi, v_lo, v_hi = region
    X, V = np.meshgrid(field.xs[2:-2], field.vs[2:-2], indexing="ij")
    return (X >= x_lo) & (X <= x_hi) & (V >= v_lo) & (V <= v_hi)


def verify_matrix_harnack(
    field,
    potential,
    curvature=None,
    bound_source="oracle",
    tolerance=0.1,
    region=None,
    floor_frac=FLOOR_FRAC_DEFAULT,
    bound_shift=0.0,
):
    """Check Hess(log rho - U/2) >= N(t) pointwise on the grid.

    The bound is evaluated at the absolute snapshot time field.t.
    Margins are eigenvalues of the estimated Hessian minus the bound;
    the check passes when the global minimum stays above -tolerance.
    bound_shift adds shift * I to the bound and exists for negative
    controls (a shifted bound must produce reported violations).

    Cells near the domain edge see the Dirichlet truncation rather than
    the free-space solution the theorem describes; pass a region box
    (x_lo, x_hi, v_lo, v_hi) that stays away from the boundary when the
    field carries visible mass there.

    Raises UntestableRegionError when no point clears the density floor.
    """
    if curvature is None:
        curvature = curvature_of(potential)
    N = _bound_matrix(curvature, field.t, bound_source) + bound_shift * np.eye(2)
    gxx, gxv, gvv, testable = _stencil_arrays(field, potential, floor_frac)
    testable = testable & _region_mask(field, region)
    n_tested = int(testable.sum())
    if n_tested == 0:
        raise UntestableRegionError(
            "no testable grid points: density floor or region excludes everything"
        )
    a = gxx - N[0, 0]
    b = gxv - N[0, 1]
    c = gvv - N[1, 1]
    half_tr = 0.5 * (a + c)
    radius = np.sqrt(np.square(0.5 * (a - c)) + np.square(b))
    min_eig = np.where(testable, half_tr - radius, np.inf)
    flat = int(np.argmin(min_eig))
    ii, jj = np.unravel_index(flat, min_eig.shape)
    min_margin = float(min_eig[ii, jj])
    frac_ok = float((min_eig[testable] >= -tolerance).mean())
    return HarnackCheckReport(
        kind="matrix",
        t=field.t,
        bound_source=bound_source,
        min_margin=min_margin,
        argmin=(float(field.xs[ii + 2]), float(field.vs[jj + 2])),
        n_tested=n_tested,
        n_untestable=int((~testable).sum()),
        fraction_ok=frac_ok,
        tolerance=tolerance,
        passed=min_margin >= -tolerance,
    )


def verify_scalar_harnack(
    field,
    potential,
    curvature=None,
    tolerance=0.1,
    region=None,
    floor_frac=FLOOR_FRAC_DEFAULT,
):
    """Check Delta_v(log rho) - Delta_v U / 2 >= -n s0'/(2 s0) on the grid.

    This is the velocity trace of the matrix inequality; it is implied
    by the matrix form with margin n times the eigenvalue margin, and
    is checked independently because it only needs the regime scalars.
    """
    if curvature is None:
        curvature = curvature_of(potential)
    if curvature.k1 is None:
        raise ValueError("scalar check needs a scalar curvature pair")
    sf = eval_sfuncs(curvature.k1, curvature.k2, field.t)
    rhs = -sf.s0dot / (2.0 * sf.s0)  # n = 1 on a planar grid
    _, _, gvv, testable = _stencil_arrays(field, potential, floor_frac)
    testable = testable & _region_mask(field, region)
    n_tested = int(testable.sum())
    if n_tested == 0:
        raise UntestableRegionError(
            "no testable grid points: density floor or region excludes everything"
        )
    margin = np.where(testable, gvv - rhs, np.inf)
    flat = int(np.argmin(margin))
    ii, jj = np.unravel_index(flat, margin.shape)
    min_margin = float(margin[ii, jj])
    frac_ok = float((margin[testable] >= -tolerance).mean())
    return HarnackCheckReport(
        kind="scalar",
        t=field.t,
        bound_source="closed_form",
        min_margin=min_margin,
        argmin=(float(field.xs[ii + 2]), float(field.vs[jj + 2])),
        n_tested=n_tested,
        n_untestable=int((~testable).sum()),
        fraction_ok=frac_ok,
        tolerance=tolerance,
        passed=min_margin >= -tolerance,
    )


def matrix_implies_scalar_gap(matrix_report, scalar_report, n=1, slack=1e-12):
    """Slack in the implication scalar_margin >= n * matrix_margin.

    Nonnegative (up to `slack`) whenever both reports come from the
    same field, potential, and curvature; returns the signed slack.
    """
    return scalar_report.min_margin - n * matrix_report.min_margin + slack


# ---------------------------------------------------------------------------
# serialization


def snapshot_csv(field):
    """Serialize a field as CSV rows x,v,rho (row-major over the grid)."""
    lines = ["x,v,rho"]
    nx, nv = field.rho.shape
    for i in range(nx):
        x = field.xs[i]
        for j in range(nv):
            lines.append(f"{x!r},{field.vs[j]!r},{field.rho[i, j]!r}")
    return "\n".join(lines) + "\n"


def save_snapshot(field, path_base):
    """Write <base>.bin (row-major float64) and <base>.json sidecar."""
    data = np.ascontiguousarray(field.rho, dtype=np.float64)
    bin_path = f"{path_base}.bin"
    json_path = f"{path_base}.json"
    data.tofile(bin_path)
    meta = {
        "nx": int(field.xs.size),
        "nv": int(field.vs.size),
        "x_min": float(field.xs[0]),
        "x_max": float(field.xs[-1]),
        "v_min": float(field.vs[0]),
        "v_max": float(field.vs[-1]),
        "t": field.t,
        "t0": field.t0,
        "layout": "row-major x-major float64",
    }
    with open(json_path, "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
    return bin_path, json_path


def load_snapshot(path_base):
    """Inverse of save_snapshot."""
    with open(f"{path_base}.json") as fh:
        meta = json.load(fh)
    rho = np.fromfile(f"{path_base}.bin", dtype=np.float64).reshape(
        meta["nx"], meta["nv"]
    )
    xs = np.linspace(meta["x_min"], meta["x_max"], meta["nx"])
    vs = np.linspace(meta["v_min"], meta["v_max"], meta["nv"])
    return GridField(xs, vs, rho, t=meta["t"], t0=meta["t0"])
