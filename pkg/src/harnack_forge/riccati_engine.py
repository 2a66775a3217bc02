"""Matrix Riccati machinery for the kinetic Harnack bounds.

The central objects are the structural matrices C, D of the kinetic
generator, a curvature matrix K (positive semidefinite), and two Riccati
flows tied together by inversion:

    S' = -C S - S C^T - D + S K S,   S(0) = 0,
    N  = S^{-1},  N' = N C + C^T N + N D N - K,  lim_{t->0} N^{-1} = 0.

N(t) is the sharp lower bound for the Hessian of the log-density of a
solution (shifted by half the potential Hessian).  Everything downstream
calibrates against this module, so it carries two independent pipelines:
direct adaptive integration of S, and the fundamental matrix exponential
M(t) = exp(tH) with S recovered from the block ratio M1 M3^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm


SYMMETRY_TOL = 1e-12
SYMMETRY_ABORT = 1e-9
PSD_TOL = 1e-12
T_MIN_DEFAULT = 1e-3
EXP_ARG_CAP = 700.0


class StepUnderflowError(RuntimeError):
    """Adaptive step size collapsed; carries the last time reached."""

    def __init__(self, last_valid_time):
        super().__init__(
            f"step-size underflow; last valid time {last_valid_time:.6g}"
        )
        self.last_valid_time = last_valid_time


class SymmetryDriftError(RuntimeError):
    """Integration state lost symmetry beyond the abort threshold."""


class SingularityError(RuntimeError):
    """A matrix that must be inverted is numerically singular."""

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class BlockSym2n:
    """Symmetric 2n x 2n matrix with named (xx, xv, vv) block views.

    Parameters
    ----------
    entries : (2n, 2n) array_like
        Symmetric matrix; symmetry is enforced to 1e-12 at construction.
    symmetrize : bool
        If True, project onto the symmetric part instead of raising when
        the asymmetry is within the abort threshold.
    """

    __slots__ = ("n", "entries")

    def __init__(self, entries, symmetrize=False):
        A = np.array(entries, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2:
            raise ValueError(f"expected square 2n x 2n matrix, got {A.shape}")
        drift = float(np.abs(A - A.T).max()) if A.size else 0.0
        if symmetrize:
            A = 0.5 * (A + A.T)
        elif drift > SYMMETRY_TOL:
            raise ValueError(f"matrix not symmetric: max|A - A^T| = {drift:.3e}")
        self.n = A.shape[0] // 2
        self.entries = A

    @property
    def A_xx(self):
        return self.entries[: self.n, : self.n]

    @property
    def A_xv(self):
        return self.entries[: self.n, self.n :]

    @property
    def A_vv(self):
        return self.entries[self.n :, self.n :]

    def max_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.entries)[-1])

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.entries)[0])

    def __repr__(self):
        return f"BlockSym2n(n={self.n},\n{self.entries!r})"


@dataclass(frozen=True)
class StructuralPair:
    """The constant structural matrices C, D of the kinetic generator."""

    C: np.ndarray
    D: np.ndarray


class CurvatureBound:
    """Curvature matrix K, either diag(k1 I, k2 I) or a general PSD matrix.

    Parameters
    ----------
    k1, k2 : float, optional
        Scalar curvature pair; builds K = diag(k1 I_n, k2 I_n).
    matrix : array_like, optional
        General symmetric PSD 2n x 2n matrix (mutually exclusive with
        the scalar form).
    n : int
        Spatial dimension (scalar form only; inferred from `matrix`).
    """

    __slots__ = ("n", "K", "k1", "k2")

    def __init__(self, k1=None, k2=None, matrix=None, n=1):
        if matrix is not None:
            if k1 is not None or k2 is not None:
                raise ValueError("pass either (k1, k2) or matrix, not both")
            K = np.array(matrix, dtype=float)
            if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] % 2:
                raise ValueError(f"K must be square 2n x 2n, got {K.shape}")
            if np.abs(K - K.T).max() > SYMMETRY_TOL:
                raise ValueError("K must be symmetric")
            self.n = K.shape[0] // 2
            self.k1 = None
            self.k2 = None
        else:
            if k1 is None or k2 is None:
                raise ValueError("scalar form needs both k1 and k2")
            if n < 1:
                raise ValueError("n must be a positive integer")
            I = np.eye(n)
            K = np.block(
                [[float(k1) * I, np.zeros((n, n))], [np.zeros((n, n)), float(k2) * I]]
            )
            self.n = n
            self.k1 = float(k1)
            self.k2 = float(k2)
        lo = float(np.linalg.eigvalsh(K)[0])
        if lo < -PSD_TOL:
            raise ValueError(f"K must be positive semidefinite; min eig {lo:.3e}")
        self.K = K

    def __repr__(self):
        if self.k1 is not None:
            return f"CurvatureBound(k1={self.k1}, k2={self.k2}, n={self.n})"
        return f"CurvatureBound(matrix=..., n={self.n})"


def build_structural(n):
    """Structural pair C, D in dimension 2n.

    C carries -I in the (x, v) block, D carries 2I in the (v, v) block;
    entries are exact integers.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError(f"invalid dimension n={n}; need a positive integer")
    Z = np.zeros((n, n))
    I = np.eye(n)
    C = np.block([[Z, -I], [Z, Z]])
    D = np.block([[Z, Z], [Z, 2 * I]])
    return StructuralPair(C=C, D=D)


def small_time_S(K, t):
    """Leading small-time expansion of S(t).

    S ~ [[-2t^3/3 I, -t^2 I], [-t^2 I, -2t I + 4t^3/3 K_vv]]; the K
    coupling enters the (v,v) block first, at third order.
    """
    K = _as_curvature(K)
    n = K.n
    I = np.eye(n)
    Kvv = K.K[n:, n:]
    top = np.hstack([-2.0 * t**3 / 3.0 * I, -(t**2) * I])
    bot = np.hstack([-(t**2) * I, -2.0 * t * I + 4.0 * t**3 / 3.0 * Kvv])
    return BlockSym2n(np.vstack([top, bot]), symmetrize=True)


def _as_curvature(K, n=1):
    if isinstance(K, CurvatureBound):
        return K
    if np.isscalar(K):
        return CurvatureBound(k1=float(K), k2=float(K), n=n)
    return CurvatureBound(matrix=K)


def _riccati_rhs(S, C, D, K):
    return -C @ S - S @ C.T - D + S @ K @ S


# Dormand-Prince 5(4) tableau; row 7 doubles as the 5th-order weights (FSAL).
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def integrate_S(K, t_end, tol=1e-10, eval_times=None):
    """Integrate S' = -CS - SC^T - D + SKS from S(0) = 0.

    Adaptive embedded Runge-Kutta 5(4) with per-step symmetry projection.

    Parameters
    ----------
    K : CurvatureBound or array_like or scalar
    t_end : float
        Final time, > 0.
    tol : float
        Local error tolerance, in (1e-14, 1e-2).
    eval_times : sequence of float, optional
        Times that must appear exactly in the output grid.

    Returns
    -------
    list of (t, BlockSym2n)
        The solution on the adaptive grid (eval_times included).

    Raises
    ------
    StepUnderflowError
        If the step size collapses (stiff blow-up).
    SymmetryDriftError
        If max|S - S^T| exceeds 1e-9 before projection.
    """
    K = _as_curvature(K)
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    if not (1e-14 < tol < 1e-2):
        raise ValueError(f"tol must lie in (1e-14, 1e-2), got {tol}")
    sp = build_structural(K.n)
    C, D, Km = sp.C, sp.D, K.K

    extra = [] if eval_times is None else list(np.asarray(eval_times, dtype=float).ravel())
    targets = sorted({float(t_end)} | {float(t) for t in extra})
    if targets[0] <= 0 or targets[-1] > t_end:
        raise ValueError("eval_times must lie in (0, t_end]")

    dim = 2 * K.n
    S = np.zeros((dim, dim))
    t = 0.0
    out = [(0.0, BlockSym2n(S.copy()))]
    h = min(1e-3, t_end / 10.0)
    f0 = _riccati_rhs(S, C, D, Km)
    ks = [None] * 7
    ks[0] = f0
    ti = 0  # next target index

    while ti < len(targets):
        t_next = targets[ti]
        if t >= t_next - 1e-15:
            ti += 1
            continue
        h = min(h, t_next - t)
        if h < 1e-14 * max(t_end, 1.0):
            raise StepUnderflowError(t)
        for i in range(1, 7):
            acc = np.zeros_like(S)
            for j, a in enumerate(_DP_A[i]):
                if a:
                    acc += a * ks[j]
            ks[i] = _riccati_rhs(S + h * acc, C, D, Km)
        S5 = S + h * sum(b * k for b, k in zip(_DP_B5, ks) if b)
        S4 = S + h * sum(b * k for b, k in zip(_DP_B4, ks) if b)
        scale = tol * (1.0 + np.abs(S5).max())
        err = float(np.abs(S5 - S4).max()) / scale
        if err <= 1.0:
            t += h
            drift = float(np.abs(S5 - S5.T).max())
            if drift > SYMMETRY_ABORT:
                raise SymmetryDriftError(
                    f"symmetry drift {drift:.3e} at t={t:.6g} exceeds {SYMMETRY_ABORT}"
                )
            S = 0.5 * (S5 + S5.T)
            ks[0] = _riccati_rhs(S, C, D, Km)  # refresh FSAL after projection
            out.append((t, BlockSym2n(S.copy())))
        h *= min(5.0, max(0.2, 0.9 * (err + 1e-300) ** -0.2))

    return out


def _scaled_inverse(S, t, n):
    """Invert S with the diag(t^{3/2}, t^{1/2}) symmetric scaling.

    The raw S has condition number O(t^-2) near zero; the scaled matrix
    is O(1), so the inverse keeps full precision for small t.
    """
    tsc = np.concatenate([np.full(n, t**1.5), np.full(n, t**0.5)])
    Shat = S / np.outer(tsc, tsc)
    cond = float(np.linalg.cond(Shat))
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularityError(
            f"S(t) numerically singular at t={t:.3g} "
            f"(scaled condition {cond:.3e}); conditioning threshold "
            f"t_min={T_MIN_DEFAULT} applies below that time",
            cond=cond,
        )
    Ninv = np.linalg.inv(Shat) / np.outer(tsc, tsc)
    return Ninv


def bound_N(K, t, tol=1e-10, t_min=T_MIN_DEFAULT):
    """Sharp bound matrix N(t) = S(t)^{-1}.

    For t < t_min the analytic small-time expansion replaces the
    integrated S (inversion there would lose ~3 digits per decade).

    Returns
    -------
    BlockSym2n
        Symmetric negative-definite N(t).
    """
    K = _as_curvature(K)
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    if t < t_min:
        S = small_time_S(K, t).entries
    else:
        S = integrate_S(K, t, tol=tol)[-1][1].entries
    N = _scaled_inverse(S, t, K.n)
    return BlockSym2n(N, symmetrize=True)


def hamiltonian_matrix(K):
    """Hamiltonian block matrix H = [[C^T, -K], [-D, -C]] (4n x 4n)."""
    K = _as_curvature(K)
    sp = build_structural(K.n)
    return np.block([[sp.C.T, -K.K], [-sp.D, -sp.C]])


def fundamental_M(K, t):
    """Fundamental matrix M(t) = exp(t H) by scaling-and-squaring.

    Raises on arguments large enough to overflow double exponentials
    rather than returning Inf.
    """
    K = _as_curvature(K)
    if not np.isfinite(t):
        raise ValueError(f"t must be finite, got {t}")
    H = hamiltonian_matrix(K)
    if t == 0.0:
        return np.eye(H.shape[0])
    spread = abs(t) * float(np.linalg.norm(H, 2))
    if spread > EXP_ARG_CAP:
        raise OverflowError(
            f"|t|*||H|| = {spread:.3g} exceeds the exponential cap {EXP_ARG_CAP:g}"
        )
    return expm(t * H)


def S_from_M(M):
    """Riccati solution with N^{-1} -> 0 recovered from M: N = M1 M3^{-1}.

    Parameters
    ----------
    M : (4n, 4n) array_like
        Fundamental matrix; the lower-left block M3 must be invertible.

    Returns
    -------
    BlockSym2n
        The same object bound_N produces (named S in the block-ratio
        formula; it is the N-normalized solution).
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 4:
        raise ValueError(f"expected square 4n x 4n matrix, got {M.shape}")
    dim = M.shape[0] // 2
    M1 = M[:dim, :dim]
    M3 = M[dim:, :dim]
    cond = float(np.linalg.cond(M3))
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularityError(
            f"M3 block numerically singular (condition {cond:.3e})", cond=cond
        )
    N = M1 @ np.linalg.inv(M3)
    return BlockSym2n(N, symmetrize=True)


@dataclass
class ComparisonReport:
    """Outcome of a Riccati comparison check on a time grid."""

    status: str  # "ok" or "hypothesis-failed"
    hypothesis_min_eig: float
    ordering_holds: bool
    worst_violation: float
    per_time: list = field(default_factory=list)  # (t, max eig of S_small - S_large)


def comparison_check(K_small, K_large, t_grid, tol=1e-10, slack=1e-8):
    """Check the comparison-theorem ordering S_small(t) <= S_large(t).

    The hypothesis is the semidefinite ordering of the coefficient block
    matrices [[-D, -C], [-C^T, K]]; with shared C, D it reduces to
    K_large - K_small >= 0, checked by eigensolve.  If the hypothesis
    fails the report says so instead of passing or failing the ordering.
    """
    K_small = _as_curvature(K_small)
    K_large = _as_curvature(K_large)
    if K_small.n != K_large.n:
        raise ValueError("curvature bounds must share the dimension")
    diff = K_large.K - K_small.K
    hyp_min = float(np.linalg.eigvalsh(diff)[0])
    if hyp_min < -PSD_TOL:
        return ComparisonReport(
            status="hypothesis-failed",
            hypothesis_min_eig=hyp_min,
            ordering_holds=False,
            worst_violation=np.nan,
        )
    t_grid = sorted(float(t) for t in t_grid)
    t_end = t_grid[-1]
    traj_s = {t: S for t, S in integrate_S(K_small, t_end, tol, eval_times=t_grid)}
    traj_l = {t: S for t, S in integrate_S(K_large, t_end, tol, eval_times=t_grid)}
    per_time = []
    worst = -np.inf
    for t in t_grid:
        gap = traj_s[t].entries - traj_l[t].entries
        top = float(np.linalg.eigvalsh(gap)[-1])
        per_time.append((t, top))
        worst = max(worst, top)
    return ComparisonReport(
        status="ok",
        hypothesis_min_eig=hyp_min,
        ordering_holds=worst <= slack,
        worst_violation=worst,
        per_time=per_time,
    )


def residual_defect(K, trajectory, tol=1e-10):
    """Re-integration defect of an integrate_S trajectory.

    Between each pair of consecutive snapshots, advance the earlier one
    with 8 fixed RK4 substeps (an integrator independent of the adaptive
    pair) and measure the mismatch with the stored later snapshot,
    scaled the same way the step controller scales its local error.
    Returns the max over the trajectory.
    """
    K = _as_curvature(K)
    sp = build_structural(K.n)
    C, D, Km = sp.C, sp.D, K.K
    worst = 0.0
    for (t0, S0), (t1, S1) in zip(trajectory[:-1], trajectory[1:]):
        S = S0.entries.copy()
        h = (t1 - t0) / 8.0
        for _ in range(8):
            k1 = _riccati_rhs(S, C, D, Km)
            k2 = _riccati_rhs(S + 0.5 * h * k1, C, D, Km)
            k3 = _riccati_rhs(S + 0.5 * h * k2, C, D, Km)
            k4 = _riccati_rhs(S + h * k3, C, D, Km)
            S = S + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        scale = 1.0 + np.abs(S1.entries).max()
        worst = max(worst, float(np.abs(S - S1.entries).max()) / scale)
    return worst


def exponential_route_residual(K, t_grid, dt=1e-6):
    """Residual of the N-equation along the exponential pipeline.

    N_dot computed from the analytic derivative of the block ratio,
    N_dot = (M1_dot - N M3_dot) M3^{-1} with M_dot = H M, compared to
    the Riccati right-hand side N C + C^T N + N D N - K.
    """
    K = _as_curvature(K)
    sp = build_structural(K.n)
    H = hamiltonian_matrix(K)
    dim = 2 * K.n
    worst = 0.0
    for t in t_grid:
        M = fundamental_M(K, t)
        Mdot = H @ M
        M1, M3 = M[:dim, :dim], M[dim:, :dim]
        N = M1 @ np.linalg.inv(M3)
        Ndot = (Mdot[:dim, :dim] - N @ Mdot[dim:, :dim]) @ np.linalg.inv(M3)
        rhs = N @ sp.C + sp.C.T @ N + N @ sp.D @ N - K.K
        scale = 1.0 + np.abs(rhs).max()
        worst = max(worst, float(np.abs(Ndot - rhs).max()) / scale)
    return worst


def trajectory_to_csv(trajectory):
    """Serialize a trajectory as CSV: header t,entry_00,entry_01,... row-major."""
    dim = trajectory[0][1].entries.shape[0]
    header = "t," + ",".join(
        f"entry_{i}{j}" for i in range(dim) for j in range(dim)
    )
    lines = [header]
    for t, S in trajectory:
        vals = ",".join(repr(float(x)) for x in S.entries.ravel())
        lines.append(f"{t!r},{vals}")
    return "\n".join(lines) + "\n"
