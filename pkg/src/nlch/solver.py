"""
Semi-discrete nonlocal Cahn--Hilliard system on a Chebyshev grid.

Unknowns are ``rho`` and ``mu`` at every collocation point:

* interior nodes:  ``rho_t = m Lap mu``;
* boundary nodes:  ``d_n mu = 0`` replaces the evolution equation;
* every node:      ``mu = F'(rho) - C rho`` with ``C`` the convolution matrix.

The algebraic ``mu`` equations are eliminated inside Newton, leaving the
``M x M`` system ``E (a0 rho + c) - A mu(rho) = 0`` where ``E`` selects the
interior rows and ``A`` stacks ``m Lap`` (interior rows) and the normal
derivative (boundary rows).  Its Jacobian is
``a0 E - A diag(F''(rho)) + A C`` with ``A C`` formed once per run.

Time stepping is variable-step BDF1/BDF2 with a predictor-based local error
estimate on ``rho`` and an I-controller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla

from .errors import DomainError, InitializationError, IntegrationFailure, InvalidArgument
from .potentials import clamp, evaluate

DT_MIN = 1e-14
STATIONARY_RATE = 1e-10
FORMULATIONS = ("conservative", "constraint")


@dataclass(frozen=True)
class SolverConfig:
    t_end: float = 1.0
    abs_tol: float = 1e-7
    rel_tol: float = 1e-7
    max_order: int = 2
    newton_tol: float = 1e-11
    newton_max_iter: int = 12
    mass_tol: float = 1e-8
    initial_dt: float = 1e-6
    max_dt: float = math.inf
    mobility: float = 1.0
    init_tol: float = 1e-9
    init_max_iter: int = 60
    max_steps: int = 500_000
    formulation: str = "conservative"

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise InvalidArgument("tolerances must be positive")
        if not self.t_end > 0:
            raise InvalidArgument("t_end must be positive")
        if self.formulation not in FORMULATIONS:
            raise InvalidArgument(f"unknown formulation {self.formulation!r}")
        if self.max_order not in (1, 2):
            raise InvalidArgument("max_order must be 1 or 2")
        if not (self.newton_tol > 0 and self.newton_max_iter >= 1):
            raise InvalidArgument("invalid Newton settings")
        if not (self.initial_dt > 0 and self.max_dt > 0):
            raise InvalidArgument("step sizes must be positive")
        if not self.mobility > 0:
            raise InvalidArgument("mobility must be positive")


@dataclass(frozen=True, eq=False)
class ChState:
    t: float
    rho: np.ndarray
    mu: np.ndarray
    mass: float
    energy: float
    sup_norm: float


@dataclass(eq=False)
class Trajectory:
    outputs: list            # ChState at requested output times
    steps: list              # ChState at every accepted step (including t = 0)
    rejected: int = 0
    newton_iters: int = 0
    factorizations: int = 0

    @property
    def times(self):
        return np.array([s.t for s in self.steps])

    @property
    def final(self):
        return self.steps[-1]


@dataclass(frozen=True)
class Diagnostics:
    delta: float
    mu_inf: float
    mu_flatness: float
    l2_times: np.ndarray
    l2_to_final: np.ndarray
    decay_exponent: float
    decay_r2: float
    decay_window: tuple
    stationary: bool
    reliable: bool
    energy_times: np.ndarray = field(default=None, repr=False)
    energy: np.ndarray = field(default=None, repr=False)

    def as_dict(self):
        return {
            "delta": self.delta,
            "mu_inf": self.mu_inf,
            "mu_flatness": self.mu_flatness,
            "decay_exponent": self.decay_exponent,
            "decay_r2": self.decay_r2,
            "decay_window": list(self.decay_window),
            "stationary": self.stationary,
            "reliable": self.reliable,
            "energy_times": [float(v) for v in self.energy_times],
            "energy": [float(v) for v in self.energy],
        }


def _matrix(op):
    return op.matrix if hasattr(op, "matrix") else np.asarray(op, dtype=float)


# ---------------------------------------------------------------- system

class CHSystem:
    """Precomputed blocks of the semi-discrete system for one (op, pot, grid, m).

    Both formulations are written as ``E (a0 rho + c) - A g(rho) = 0`` with
    ``g = F'(rho) - C rho``:

    ``constraint``
        ``E`` selects interior rows, ``A`` holds ``m Lap`` on interior rows
        and the normal-derivative rows at boundary nodes, so ``d_n g = 0``
        replaces the evolution equation there.
    ``conservative``
        ``mu = g`` at every node and ``rho_t = m (Lap mu - W^-1 S mu)``,
        where ``S`` collects the outward fluxes ``d_n mu`` weighted by the
        edge quadrature.  The zero-flux condition then holds weakly.
        Clenshaw--Curtis integrates both ``Lap mu`` and the edge fluxes
        exactly, so the discrete mass is conserved to round-off.
    """

    def __init__(self, op, pot, grid, mobility=1.0, formulation="conservative"):
        if formulation not in FORMULATIONS:
            raise InvalidArgument(f"unknown formulation {formulation!r}")
        C = _matrix(op)
        M = grid.M
        if C.shape != (M, M):
            raise InvalidArgument(f"operator shape {C.shape} does not match grid size {M}")
        self.C, self.pot, self.grid, self.m = C, pot, grid, float(mobility)
        self.formulation = formulation
        self.w = grid.weights
        self.bidx = grid.boundary_index
        self.interior = grid.interior_mask
        self.B = grid.normal_derivative_rows()
        iidx = np.flatnonzero(self.interior)
        A = np.zeros((M, M))
        if formulation == "constraint":
            self.E = self.interior.astype(float)
            A[self.interior] = self.m * grid.Lap[self.interior]
            A[self.bidx] = self.B
        else:
            self.E = np.ones(M)
            nrm = grid.boundary_normal
            ix, iy = self.bidx % grid.nx, self.bidx // grid.nx
            S = ((nrm[:, 0] / grid.gx.weights[ix])[:, None] * grid.Dx[self.bidx]
                 + (nrm[:, 1] / grid.gy.weights[iy])[:, None] * grid.Dy[self.bidx])
            A = self.m * np.array(grid.Lap)
            A[self.bidx] -= self.m * S
        self.A = A
        self._P = None
        self._BC = None

    @property
    def P(self):
        if self._P is None:
            self._P = self.A @ self.C
        return self._P

    @property
    def BC(self):
        if self._BC is None:
            self._BC = self.B @ self.C
        return self._BC

    def g(self, rho):
        return evaluate(self.pot, rho, 1) - self.C @ rho

    def mu(self, rho):
        return self.g(rho)

    def reduced_residual(self, rho, a0, c):
        return self.E * (a0 * rho + c) - self.A @ self.g(rho)

    def reduced_jacobian(self, rho, a0):
        J = self.P - self.A * evaluate(self.pot, rho, 2)[None, :]
        J[np.diag_indices_from(J)] += a0 * self.E
        return J

    def state(self, t, rho):
        mu = self.mu(rho)
        return ChState(t, rho, mu, self.mass(rho), self.energy(rho), float(np.max(np.abs(rho))))

    def mass(self, rho):
        return float(self.w @ rho) / float(self.w.sum())

    def energy(self, rho):
        return float(self.w @ evaluate(self.pot, rho, 0) - 0.5 * (self.w * rho) @ (self.C @ rho))


def residual(state, rho_dot, op, pot, grid, mobility=1.0, formulation="constraint"):
    """Full ``2M`` residual of the DAE for ``state = (rho, mu)``.

    Rows ``0..M-1``: ``rho_dot - m Lap mu`` at interior nodes, ``d_n mu`` at
    boundary nodes.  Rows ``M..2M-1``: ``mu - F'(rho) + C rho``.  With
    ``formulation="conservative"`` the first block is ``rho_dot - A mu`` at
    every node (boundary ``mu`` eliminated through ``d_n mu = 0``).
    """
    rho, mu = (np.asarray(v, dtype=float) for v in state)
    sys_ = state_system(op, pot, grid, mobility, formulation)
    r1 = sys_.E * np.asarray(rho_dot, dtype=float) - sys_.A @ mu
    r2 = mu - evaluate(pot, rho, 1) + sys_.C @ rho
    return np.concatenate([r1, r2])


def full_jacobian(state, a0, op, pot, grid, mobility=1.0, formulation="constraint"):
    """Jacobian of :func:`residual` with ``rho_dot = a0 rho + c`` (blocks over ``(rho, mu)``)."""
    rho = np.asarray(state[0], dtype=float)
    sys_ = state_system(op, pot, grid, mobility, formulation)
    M = grid.M
    J = np.zeros((2 * M, 2 * M))
    J[:M, :M] = np.diag(a0 * sys_.E)
    J[:M, M:] = -sys_.A
    J[M:, :M] = -np.diag(evaluate(pot, rho, 2)) + sys_.C
    J[M:, M:] = np.eye(M)
    return J


def state_system(op, pot, grid, mobility=1.0, formulation="conservative"):
    return CHSystem(op, pot, grid, mobility, formulation)


def energy(state, op, pot, grid):
    """``int F(rho) - 1/2 int (K * rho) rho`` by Clenshaw--Curtis quadrature."""
    rho = state.rho if isinstance(state, ChState) else np.asarray(state, dtype=float)
    C = _matrix(op)
    w = grid.weights
    return float(w @ evaluate(pot, rho, 0) - 0.5 * (w * rho) @ (C @ rho))


# ---------------------------------------------------------------- initialisation

def _boundary_newton(sys_, rho, tol, max_iter):
    b = sys_.bidx
    rho = clamp(sys_.pot, rho.copy())
    r = sys_.B @ sys_.mu(rho)
    nrm = float(np.max(np.abs(r)))
    for _ in range(max_iter):
        if nrm <= tol:
            return rho, nrm
        Jb = sys_.B[:, b] * evaluate(sys_.pot, rho[b], 2)[None, :] - sys_.BC[:, b]
        step = np.linalg.solve(Jb, r)
        lam = 1.0
        for _ in range(30):
            trial = rho.copy()
            trial[b] = rho[b] - lam * step
            trial = clamp(sys_.pot, trial)
            r_t = sys_.B @ sys_.mu(trial)
            n_t = float(np.max(np.abs(r_t)))
            if np.isfinite(n_t) and n_t < nrm:
                break
            lam *= 0.5
        else:
            break
        rho, r, nrm = trial, r_t, n_t
    return rho, nrm


def consistent_init(rho0, op, pot, grid, tol=1e-9, max_iter=60, mobility=1.0, t0=0.0,
                    formulation="conservative"):
    """Consistent state at ``t0``.

    With ``formulation="constraint"`` boundary values are adjusted by Newton
    iteration until ``d_n mu = 0``.  The conservative formulation imposes zero
    flux weakly, so the datum is only clamped.  Values with ``|rho0| = 1`` (exact pure phase at a node) are pulled inside
    by the logarithmic guard; values beyond 1 in modulus are rejected.
    """
    rho0 = np.asarray(rho0, dtype=float).copy()
    if rho0.shape != (grid.M,) or not np.all(np.isfinite(rho0)):
        raise InvalidArgument("rho0 must be a finite vector with one value per node")
    if pot.singular and np.any(np.abs(rho0) > 1.0):
        raise DomainError("initial datum leaves [-1, 1]")
    sys_ = CHSystem(op, pot, grid, mobility, formulation)
    if abs(sys_.mass(rho0)) >= 1.0:
        raise InvalidArgument("mean of the initial datum must lie in (-1, 1)")
    if formulation == "conservative":
        return sys_.state(t0, clamp(pot, rho0))
    rho, res = _boundary_newton(sys_, rho0, tol, max_iter)
    if not res <= tol:
        raise InitializationError(f"boundary iteration stalled at |d_n mu| = {res:.3e}", res)
    return sys_.state(t0, rho)


def _rho_dot(sys_, rho):
    """Time derivative at a consistent state (boundary part from the differentiated constraint)."""
    if sys_.formulation == "conservative":
        return sys_.A @ sys_.g(rho)
    b = sys_.bidx
    mu = sys_.mu(rho)
    rd = np.zeros_like(rho)
    rd[sys_.interior] = (sys_.A @ mu)[sys_.interior]
    G = sys_.B * evaluate(sys_.pot, rho, 2)[None, :] - sys_.BC
    rhs = -G[:, sys_.interior] @ rd[sys_.interior]
    rd[b] = np.linalg.solve(G[:, b], rhs)
    return rd


# ---------------------------------------------------------------- stepping

class _Newton:
    """Modified Newton with a cached LU factorization of the reduced Jacobian."""

    def __init__(self, sys_, cfg):
        self.sys, self.cfg = sys_, cfg
        self.lu = None
        self.a0 = None
        self.iters = 0
        self.factorizations = 0

    def factor(self, rho, a0):
        J = self.sys.reduced_jacobian(rho, a0)
        self.lu = sla.lu_factor(J, check_finite=False)
        self.a0 = a0
        self.factorizations += 1

    def solve(self, guess, a0, c):
        guess = clamp(self.sys.pot, guess)
        if self.lu is None or abs(a0 - self.a0) > 0.3 * self.a0:
            self.factor(guess, a0)
            fresh = True
        else:
            fresh = False
        while True:
            rho, ok = self._iterate(guess, a0, c)
            if ok or fresh:
                return rho, ok
            self.factor(guess, a0)
            fresh = True

    def _iterate(self, guess, a0, c):
        sys_, cfg = self.sys, self.cfg
        rho = guess.copy()
        prev = None
        for _ in range(cfg.newton_max_iter):
            self.iters += 1
            try:
                R = sys_.reduced_residual(rho, a0, c)
            except DomainError:
                return rho, False
            if not np.all(np.isfinite(R)):
                return rho, False
            d = sla.lu_solve(self.lu, R, check_finite=False)
            rho = clamp(sys_.pot, rho - d)
            nd = float(np.max(np.abs(d)))
            if not np.isfinite(nd):
                return rho, False
            if nd <= cfg.newton_tol:
                return rho, True
            if prev is not None:
                rate = nd / prev
                if rate > 0.5:
                    # slow or diverging: accept only at the round-off floor
                    if nd <= 100 * cfg.newton_tol and rate < 2.0:
                        return rho, True
                    return rho, False
                if rate / (1 - rate) * nd <= cfg.newton_tol:
                    return rho, True
            prev = nd
        return rho, False


def _extrapolate(ts, ys, t):
    """Polynomial through the points ``(ts, ys)`` evaluated at ``t`` (Lagrange form)."""
    out = np.zeros_like(ys[0])
    for j, (tj, yj) in enumerate(zip(ts, ys)):
        lj = 1.0
        for k, tk in enumerate(ts):
            if k != j:
                lj *= (t - tk) / (tj - tk)
        out = out + lj * yj
    return out


def _interp_state(sys_, hist_t, hist_y, t):
    """Quadratic interpolation through the three most recent accepted steps."""
    rho = _extrapolate(hist_t[-3:], hist_y[-3:], t)
    return sys_.state(t, clamp(sys_.pot, rho))


def integrate(rho0, op, pot, grid, cfg=None, t_out=None, tstops=(), initial_state=None):
    """Integrate from ``rho0`` on ``[t0, t0 + cfg.t_end]``.

    ``t_out`` are absolute output times (dense output by quadratic
    interpolation between accepted steps); the integrator lands exactly on
    every time in ``tstops`` without restarting.  Returns
    ``(trajectory, diagnostics)``.
    """
    cfg = cfg or SolverConfig()
    sys_ = CHSystem(op, pot, grid, cfg.mobility, cfg.formulation)
    if initial_state is None:
        s0 = consistent_init(rho0, sys_.C, pot, grid, cfg.init_tol, cfg.init_max_iter, cfg.mobility,
                             formulation=cfg.formulation)
    else:
        s0 = initial_state
    t0 = s0.t
    T = t0 + cfg.t_end
    t_out = sorted(float(v) for v in (t_out if t_out is not None else [T]))
    if any(v < t0 or v > T * (1 + 1e-14) for v in t_out):
        raise InvalidArgument("output times must lie in [t0, t0 + t_end]")
    stops = sorted(float(v) for v in tstops if t0 < v < T) + [T]

    newton = _Newton(sys_, cfg)
    steps = [s0]
    hist_t = [t0]
    hist_y = [s0.rho]
    outputs = []
    oi = 0
    while oi < len(t_out) and t_out[oi] <= t0:
        outputs.append(s0)
        oi += 1

    rd0 = _rho_dot(sys_, s0.rho)
    h = min(cfg.initial_dt, cfg.max_dt, cfg.t_end)
    t = t0
    rejected = 0
    si = 0
    nsteps = 0
    while t < T:
        if nsteps >= cfg.max_steps:
            raise IntegrationFailure("maximum number of steps exceeded", steps[-1])
        while stops[si] <= t:
            si += 1
        target = stops[si]
        if t + h >= target or target - (t + h) < 1e-3 * h:
            h = target - t
            landing = True
        else:
            landing = False
        order = min(cfg.max_order, len(hist_t))
        y_n = hist_y[-1]
        if order == 2:
            h_prev = hist_t[-1] - hist_t[-2]
            om = h / h_prev
            a0 = (1 + 2 * om) / ((1 + om) * h)
            c = (-(1 + om) * y_n + om * om / (1 + om) * hist_y[-2]) / h
        else:
            a0 = 1.0 / h
            c = -y_n / h
        npred = min(len(hist_t), order + 1)
        if len(hist_t) == 1:
            guess = y_n + h * rd0
        else:
            guess = _extrapolate(hist_t[-npred:], hist_y[-npred:], t + h)
        rho, ok = newton.solve(guess, a0, c)
        if ok:
            if len(hist_t) == 1:
                err = 0.5 * (rho - y_n - h * rd0)
            elif order == 1:
                pred = _extrapolate(hist_t[-2:], hist_y[-2:], t + h)
                err = h / (t + h - hist_t[-2]) * (rho - pred)
            else:
                if len(hist_t) >= 3:
                    pred = _extrapolate(hist_t[-3:], hist_y[-3:], t + h)
                    err = h / (t + h - hist_t[-3]) * (rho - pred)
                else:
                    pred = _extrapolate(hist_t[-2:], hist_y[-2:], t + h)
                    err = h / (t + h - hist_t[-2]) * (rho - pred)
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(rho), np.abs(y_n))
            en = float(np.sqrt(np.mean((err / scale) ** 2)))
        else:
            en = math.inf
        if en <= 1.0:
            t = target if landing else t + h
            st = sys_.state(t, rho)
            steps.append(st)
            hist_t.append(t)
            hist_y.append(rho)
            if len(hist_t) > 4:
                del hist_t[0], hist_y[0]
            while oi < len(t_out) and t_out[oi] <= t * (1 + 1e-15):
                if abs(t_out[oi] - t) <= 1e-14 * max(1.0, abs(t)):
                    outputs.append(st)
                else:
                    outputs.append(_interp_state(sys_, hist_t, hist_y, t_out[oi]))
                oi += 1
            nsteps += 1
            q = order if len(hist_t) > 2 else 1
            fac = 0.9 * (max(en, 1e-10)) ** (-1.0 / (q + 1))
            fac = min(5.0, max(0.2, fac))
            if cfg.max_order == 2:
                fac = min(fac, 2.4)  # zero-stability of variable-step BDF2
            h = min(h * fac, cfg.max_dt)
        else:
            rejected += 1
            if not ok:
                h *= 0.5
            else:
                q = order if len(hist_t) > 2 else 1
                h *= min(0.9, max(0.2, 0.9 * en ** (-1.0 / (q + 1))))
            if h < DT_MIN:
                raise IntegrationFailure(f"step size underflow at t = {t:.6g}", steps[-1])
    traj = Trajectory(outputs, steps, rejected, newton.iters, newton.factorizations)
    return traj, equilibrium_diagnostics(traj, sys_.C, pot, grid)


# ---------------------------------------------------------------- diagnostics

def _power_fit(t, y):
    lt, ly = np.log(t), np.log(y)
    A = np.column_stack([np.ones_like(lt), lt])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    fit = A @ coef
    ss_res = float(np.sum((ly - fit) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[1]), r2


def equilibrium_diagnostics(traj, op, pot, grid, tau=None, window=None, floor=1e-6):
    """Separation, chemical-potential and convergence diagnostics of a trajectory.

    ``tau`` (default ``T/2`` after the start) is the time from which the
    separation ``delta = 1 - max ||rho||_inf`` is measured.  ``window``
    ``(t_a, t_b)`` selects the tail for the power-law fit of
    ``||rho(t) - rho(T)||_L2``.  By default the window opens once the
    distance has dropped below 10% of its initial value (end of the
    transient) and closes at the last time it is still above ``floor``;
    below that level the curve only reflects integrator noise.
    """
    C = _matrix(op)
    steps = traj.steps
    w = grid.weights
    t = np.array([s.t for s in steps])
    rT = steps[-1].rho
    v = evaluate(pot, rT, 1) - C @ rT
    l2 = np.array([math.sqrt(max(float(w @ (s.rho - rT) ** 2), 0.0)) for s in steps])
    if len(steps) > 1:
        rate = float(np.max(np.abs(steps[-1].rho - steps[-2].rho)) / (t[-1] - t[-2]))
    else:
        rate = math.inf
    return series_diagnostics(t, np.array([s.sup_norm for s in steps]), l2,
                              np.array([s.energy for s in steps]), v, w, rate,
                              tau=tau, window=window, floor=floor)


def series_diagnostics(t, sup, l2, energy, v, w, rate, tau=None, window=None, floor=1e-6):
    """:func:`equilibrium_diagnostics` from stored time series.

    ``v`` is ``F'(rho(T)) - K * rho(T)`` at the nodes, ``w`` the quadrature
    weights and ``rate`` the last observed ``max |d rho / dt|``.
    """
    t, sup, l2 = (np.asarray(a, dtype=float) for a in (t, sup, l2))
    w = np.asarray(w, dtype=float)
    t0, T = t[0], t[-1]
    tau = t0 + 0.5 * (T - t0) if tau is None else tau
    late = t >= tau
    delta = 1.0 - float(sup[late].max()) if late.any() else 1.0 - float(sup[-1])
    vbar = float(w @ v) / float(w.sum())
    flat = float(np.max(np.abs(v - vbar)))
    stationary = rate < STATIONARY_RATE

    exponent, r2, win = math.nan, math.nan, (math.nan, math.nan)
    pos = (t > t0) & (l2 > 0)
    if window is None and pos.sum() >= 3:
        ref = l2[0] if l2[0] > 0 else l2[pos].max()
        below = np.flatnonzero(pos & (l2 <= 0.1 * ref))
        above = np.flatnonzero(pos & (l2 >= floor))
        if below.size and above.size and above[-1] > below[0]:
            win = (float(t[below[0]]), float(t[above[-1]]))
    elif window is not None:
        win = tuple(float(x) for x in window)
    if np.isfinite(win[0]):
        sel = pos & (t >= win[0]) & (t <= win[1])
        if sel.sum() >= 3:
            exponent, r2 = _power_fit(t[sel] - t0, l2[sel])
    return Diagnostics(
        delta=delta, mu_inf=vbar, mu_flatness=flat, l2_times=t, l2_to_final=l2,
        decay_exponent=exponent, decay_r2=r2, decay_window=win,
        stationary=stationary, reliable=stationary,
        energy_times=t, energy=np.asarray(energy, dtype=float),
    )


# ---------------------------------------------------------------- regularized potential

def l2_distance(grid, a, b):
    return math.sqrt(float(grid.weights @ (np.asarray(a) - np.asarray(b)) ** 2))


def regularized_shift_check(rho0, op, pot_log, pot_reg, sigma, T, grid, cfg=None):
    """Compare ``rho(T + 3 sigma)`` with the regularized run restarted from ``rho(3 sigma)``.

    The logarithmic run is a single integration on ``[0, T + 3 sigma]`` that
    lands exactly on ``3 sigma``; the regularized run starts from that state.
    Returns a dict with the ``L2`` discrepancy and both final states.
    """
    if not (sigma > 0 and T > 0):
        raise InvalidArgument("sigma and T must be positive")
    if pot_reg.kind != "regularized":
        raise InvalidArgument("pot_reg must be a regularized potential")
    cfg = cfg or SolverConfig()
    ts = 3.0 * sigma
    log_traj, _ = integrate(rho0, op, pot_log, grid, replace(cfg, t_end=ts + T),
                            t_out=[ts, ts + T], tstops=[ts])
    start = log_traj.outputs[0]
    reg_traj, _ = integrate(start.rho, op, pot_reg, grid, replace(cfg, t_end=T),
                            t_out=[ts + T], initial_state=_restart_state(start, op, pot_reg, grid,
                                                                        cfg.mobility,
                                                                        cfg.formulation))
    a = log_traj.outputs[-1].rho
    b = reg_traj.outputs[-1].rho
    return {
        "discrepancy": l2_distance(grid, a, b),
        "rho_log": a,
        "rho_reg": b,
        "start_time": ts,
        "end_time": ts + T,
        "min_margin": 1.0 - max(s.sup_norm for s in log_traj.steps),
    }


def _restart_state(state, op, pot, grid, mobility=1.0, formulation="conservative"):
    sys_ = CHSystem(op, pot, grid, mobility, formulation)
    return sys_.state(state.t, state.rho)
