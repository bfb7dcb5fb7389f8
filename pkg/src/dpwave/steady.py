"""Steady profiles: phi*(2c - phi)/3 = L(phi^2) + a.

For decaying waves the background constant a vanishes, and the peaked wave
c*exp(-|x - lambda0|) solves the a = 0 equation exactly; it anchors the
solvers as a regression oracle.  Two independent methods are provided:
damped Newton on the even-symmetric unknowns (optionally with the speed c
free and the crest height pinned), and the stabilized fixed-point iteration
phi <- S^2 * (3/2c) * (L(phi^2) + phi^2/3) with quadratic-degree exponent 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .grids import LINE, PERIODIC, Grid, SampledField
from .operators import apply_L, detect_kinks, operator_matrix

#: continuation stops at crest height c*(1 - EPS_PEAK); the Jacobian factor
#: 2c - 2*phi degenerates at the crest as the height approaches c.
EPS_PEAK = 1e-3


class ConvergenceError(RuntimeError):
    """Iteration exhausted without meeting the residual tolerance."""

    def __init__(self, message: str, residual_norm: float):
        super().__init__(f"{message} (last residual {residual_norm:.3e})")
        self.residual_norm = residual_norm


class SingularJacobianError(RuntimeError):
    """Newton linearization numerically singular (expected near the peaked limit)."""


class DivergenceError(RuntimeError):
    """Fixed-point stabilization factor left its trust interval."""


@dataclass(frozen=True, eq=False)
class WaveProfile:
    """Sampled profile phi with wave speed c and background constant a."""

    grid: Grid
    phi: np.ndarray = field(repr=False)
    c: float
    a: float = 0.0

    def __post_init__(self):
        vals = np.asarray(self.phi, dtype=float)
        if vals.shape != (self.grid.n,):
            raise ValueError("phi length must equal grid.n")
        if not np.all(np.isfinite(vals)):
            raise ValueError("phi must be finite")
        if not (self.c > 0):
            raise ValueError("wave speed c must be positive")
        object.__setattr__(self, "phi", vals)

    def field(self) -> SampledField:
        return SampledField(self.grid, self.phi)

    def with_phi(self, phi: np.ndarray) -> "WaveProfile":
        return WaveProfile(self.grid, phi, self.c, self.a)


@dataclass
class SolveConfig:
    residual_tol: float = 1e-10
    max_iter: int = 100
    damping: float = 1.0
    amplitude_mu: float | None = None
    pin_even: bool = True

    def __post_init__(self):
        if not (self.residual_tol > 0):
            raise ValueError("residual_tol must be positive")
        if not (0 < self.damping <= 1):
            raise ValueError("damping must lie in (0, 1]")


@dataclass
class ConvergenceRecord:
    iterations: int
    residual_norm: float
    converged: bool
    history: list[float] = field(default_factory=list)


@dataclass
class ContinuationEntry:
    mu: float
    profile: WaveProfile
    record: ConvergenceRecord
    crest_curvature: float


@dataclass
class ContinuationPath:
    entries: list[ContinuationEntry] = field(default_factory=list)
    truncated: bool = False

    @property
    def heights(self) -> np.ndarray:
        return np.array([e.mu for e in self.entries])


@dataclass
class BoundsReport:
    positive: bool
    below_2c: bool
    below_c: bool
    sup: float
    argmax: float
    min_interior: float

    @property
    def admitted(self) -> bool:
        return self.positive and self.below_2c and self.below_c


def peakon(c: float, lambda0: float, grid: Grid) -> WaveProfile:
    """The peaked wave c*exp(-|x - lambda0|); crest height equals the speed."""
    if not (c > 0):
        raise ValueError("peakon speed must be positive")
    x = grid.nodes()
    return WaveProfile(grid, c * np.exp(-np.abs(x - lambda0)), c)


def residual(p: WaveProfile, **line_kw) -> SampledField:
    """r = phi*(2c - phi)/3 - L(phi^2) - a on the profile's grid."""
    phi = p.phi
    lhs = phi * (2.0 * p.c - phi) / 3.0
    lphi2 = apply_L(SampledField(p.grid, phi * phi), **line_kw)
    return SampledField(p.grid, lhs - lphi2.values - p.a,
                        truncation_warning=lphi2.truncation_warning)


def residual_norm(p: WaveProfile, **line_kw) -> float:
    return float(np.max(np.abs(residual(p, **line_kw).values)))


# ---------------------------------------------------------------------------
# even-symmetry reduction
#
# The mirror x -> -x maps node i to node n - i (periodic: mod n; line: node 0
# at x = -P has mirror +P outside the grid and is held at zero).  Unknowns are
# the values on x >= 0.
# ---------------------------------------------------------------------------

def _even_expansion(grid: Grid) -> np.ndarray:
    n = grid.n
    half = n // 2
    if grid.kind == PERIODIC:
        m = half + 1                     # x = 0 .. P-h plus the seam node -P
        E = np.zeros((n, m))
        E[half:, :half] = np.eye(half)   # x = 0 .. P-h
        E[0, half] = 1.0                 # x = -P, its own mirror
        for i in range(1, half):
            E[half - i, i] = 1.0         # x = -i*h mirrors +i*h
        return E
    m = half                             # x = 0 .. P-h
    E = np.zeros((n, m))
    E[half:, :] = np.eye(m)
    for i in range(1, half):
        E[half - i, i] = 1.0
    return E


def _representative_rows(grid: Grid) -> np.ndarray:
    n = grid.n
    half = n // 2
    if grid.kind == PERIODIC:
        return np.concatenate([np.arange(half, n), [0]])
    return np.arange(half, n)


def solve_newton(initial: WaveProfile, cfg: SolveConfig) -> WaveProfile:
    """Damped Newton iteration on the steady equation.

    With ``cfg.amplitude_mu`` set, the crest value phi(0) is pinned to mu and
    the speed c joins the unknowns; otherwise c stays fixed.  The
    linearization of the residual is (2c - 2*phi)/3 * d_phi - 2 L(phi * d_phi),
    plus the speed column 2*phi/3 when c is free.
    """
    profile, _ = _newton(initial, cfg)
    return profile


def _newton(initial: WaveProfile, cfg: SolveConfig):
    grid = initial.grid
    mu = cfg.amplitude_mu
    if mu is not None and not (mu > 0):
        raise ValueError("amplitude must be positive")

    if cfg.pin_even:
        E = _even_expansion(grid)
        rows = _representative_rows(grid)
        phi = 0.5 * (initial.phi + initial.phi[_mirror_indices(grid)])
    else:
        E = np.eye(grid.n)
        rows = np.arange(grid.n)
        phi = initial.phi.copy()
    center = grid.center_index
    c = initial.c
    psi = phi[rows]
    phi = E @ psi

    # residual and Jacobian must share one quadrature stencil pattern, and
    # the pattern must not flicker between iterates, or Newton stalls;
    # freeze it from the initial guess (the crest kink, if any, stays put)
    if grid.kind == LINE:
        pattern = detect_kinks(phi * phi, grid.spacing)
        line_kw = {"kinks": pattern}
        L = operator_matrix(grid, kinks=tuple(np.flatnonzero(pattern)))
    else:
        line_kw = {}
        L = operator_matrix(grid)

    history: list[float] = []
    for it in range(cfg.max_iter + 1):
        prof = WaveProfile(grid, phi, c, initial.a)
        r = residual(prof, **line_kw).values
        rn = float(np.max(np.abs(r)))
        history.append(rn)
        constraint = 0.0 if mu is None else phi[center] - mu
        if rn <= cfg.residual_tol and abs(constraint) <= cfg.residual_tol:
            if np.max(np.abs(phi)) < cfg.residual_tol and (mu or 0) > 0:
                raise ConvergenceError("collapsed to the trivial branch", rn)
            if mu is not None and not (mu < 2 * c):
                raise ConvergenceError(
                    "converged outside the admissible amplitude range", rn)
            return prof, ConvergenceRecord(it, rn, True, history)
        if it == cfg.max_iter:
            raise ConvergenceError("Newton iteration exhausted", rn)

        J = np.diag((2.0 * c - 2.0 * phi) / 3.0) - 2.0 * L * phi[None, :]
        Jr = J[rows] @ E
        if mu is None:
            A, b = Jr, -r[rows]
        else:
            dcol = (2.0 / 3.0) * phi[rows, None]
            crow = np.zeros((1, E.shape[1] + 1))
            crow[0, :-1] = E[center]
            A = np.block([[Jr, dcol], [crow]])
            b = np.concatenate([-r[rows], [-constraint]])
        try:
            step = np.linalg.solve(A, b)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError(str(exc)) from exc
        if not np.all(np.isfinite(step)):
            raise SingularJacobianError("non-finite Newton step")
        if mu is None:
            psi = psi + cfg.damping * step
        else:
            psi = psi + cfg.damping * step[:-1]
            c = c + cfg.damping * step[-1]
            if c <= 0:
                raise ConvergenceError("speed left the admissible range", rn)
        phi = E @ psi
    raise AssertionError("unreachable")


def _mirror_indices(grid: Grid) -> np.ndarray:
    n = grid.n
    idx = (n - np.arange(n)) % n
    if grid.kind == LINE:
        idx[0] = 0                      # x = -P has no in-grid mirror
    return idx


def solve_petviashvili(initial: WaveProfile, cfg: SolveConfig) -> WaveProfile:
    """Stabilized fixed-point iteration at fixed speed c.

    Iterates phi <- S^gamma * N(phi) with N(phi) = (3/2c)(L(phi^2) + phi^2/3),
    S = <phi, phi>/<phi, N(phi)> and gamma = 2 for the quadratic nonlinearity.
    Raises DivergenceError when S leaves (0.1, 10).
    """
    grid = initial.grid
    c = initial.c
    phi = initial.phi.copy()
    # freeze the quadrature stencil pattern on line grids (see _newton)
    if grid.kind == LINE:
        line_kw = {"kinks": detect_kinks(phi * phi, grid.spacing)}
    else:
        line_kw = {}
    history = []
    for it in range(cfg.max_iter + 1):
        prof = WaveProfile(grid, phi, c, initial.a)
        rn = residual_norm(prof, **line_kw)
        history.append(rn)
        if rn <= cfg.residual_tol:
            return prof
        if it == cfg.max_iter:
            raise ConvergenceError("Petviashvili iteration exhausted", rn)
        Nphi = (3.0 / (2.0 * c)) * (
            apply_L(SampledField(grid, phi * phi), **line_kw).values
            + phi * phi / 3.0)
        denom = float(np.dot(phi, Nphi))
        num = float(np.dot(phi, phi))
        if denom == 0.0 or num == 0.0:
            raise DivergenceError("degenerate stabilization quotient")
        S = num / denom
        if not (0.1 < S < 10.0):
            raise DivergenceError(f"stabilization factor {S:.3e} outside (0.1, 10)")
        phi = S ** 2 * Nphi
    raise AssertionError("unreachable")


def crest_curvature(p: WaveProfile) -> float:
    """|phi''| at the crest by second differences (robust near peaking)."""
    i = int(np.argmax(p.phi))
    n = p.grid.n
    h = p.grid.spacing
    d2 = (p.phi[(i + 1) % n] - 2.0 * p.phi[i] + p.phi[i - 1]) / h ** 2
    return abs(float(d2))


def continue_in_height(grid: Grid, c: float, mu_from: float, mu_to: float,
                       steps: int, cfg: SolveConfig | None = None) -> ContinuationPath:
    """Amplitude continuation: solve at increasing crest heights mu.

    Each step warm-starts from the previous profile; the first uses the
    scaled peaked-wave guess mu*exp(-|x|), whose tail rate matches decaying
    solutions.  Heights are clamped below c*(1 - EPS_PEAK).  On a step
    failure the path is returned truncated and flagged.
    """
    cfg = cfg or SolveConfig()
    if not (0 < mu_from <= mu_to):
        raise ValueError("need 0 < mu_from <= mu_to")
    cap = c * (1.0 - EPS_PEAK)
    if mu_to > cap:
        raise ValueError(f"target height {mu_to} exceeds the peaking guard {cap}")
    mus = np.linspace(mu_from, mu_to, steps) if steps > 1 else np.array([mu_from])
    if mu_from == mu_to:
        mus = np.array([mu_from])

    path = ContinuationPath()
    guess = WaveProfile(grid, mu_from * np.exp(-np.abs(grid.nodes())), c)
    prev_mu = None
    for mu in mus:
        if prev_mu is not None:
            # the steady equation scales as (phi, c) -> (s*phi, s*c)
            s = mu / prev_mu
            guess = WaveProfile(grid, s * guess.phi, s * guess.c, guess.a)
        step_cfg = replace(cfg, amplitude_mu=float(mu))
        try:
            prof, rec = _newton(guess, step_cfg)
        except (ConvergenceError, SingularJacobianError):
            path.truncated = True
            return path
        path.entries.append(ContinuationEntry(float(mu), prof, rec,
                                              crest_curvature(prof)))
        guess, prev_mu = prof, float(mu)
    return path


def asymptotic_constant(p: WaveProfile, fraction: float = 0.1) -> float:
    """Background constant estimated from the outer tails.

    Averages phi*(2c - phi)/3 - L(phi^2) over the outermost ``fraction`` of
    the domain on each side; for a genuinely decaying solution this is the
    integration constant of the steady equation and must vanish.
    """
    if p.grid.kind != LINE:
        raise ValueError("asymptotic constant requires a truncated-line grid")
    r = residual(p).values + p.a
    k = max(2, int(round(fraction * p.grid.n)))
    return float(np.mean(np.concatenate([r[:k], r[-k:]])))


def bounds_check(p: WaveProfile, tol: float = 1e-8,
                 edge_fraction: float = 0.02,
                 positivity_floor: float = 1e-9) -> BoundsReport:
    """Admissibility of a profile: 0 < phi, sup phi < 2c, sup phi <= c + tol.

    Positivity is tested on the interior of truncated-line grids (the outer
    ``edge_fraction`` is truncation-polluted); periodic grids use all nodes.
    Converged spectral profiles carry tail oscillations at their truncation
    floor, so dips above -positivity_floor*sup are tolerated; the trivial
    wave still fails (sup must be positive).
    """
    phi = p.phi
    x = p.grid.nodes()
    if p.grid.kind == LINE:
        k = max(1, int(round(edge_fraction * p.grid.n)))
        interior = phi[k:-k]
    else:
        interior = phi
    sup = float(np.max(phi))
    min_interior = float(np.min(interior))
    return BoundsReport(
        positive=bool(sup > 0.0 and min_interior > -positivity_floor * sup),
        below_2c=bool(sup < 2.0 * p.c),
        below_c=bool(sup <= p.c + tol),
        sup=sup,
        argmax=float(x[int(np.argmax(phi))]),
        min_interior=min_interior,
    )
