"""Reflection-based symmetry analysis of wave profiles.

The plane scan sweeps a reflection axis x = lambda from the left end of the
grid and records where the set of points lying strictly below their mirror
image first becomes nonempty; for a symmetric single-crest profile that
happens exactly when the axis passes the crest.  Kernel reflection
inequalities, crest-structure fits for waves at maximum height, and the
super/subsolution touching dichotomy live here too.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import LINE, PERIODIC, Grid
from .operators import kernel_eval
from .steady import WaveProfile

#: separates "equal within rounding" from "strictly below" when building
#: reflection sets.
TOL_SET = 1e-10


class AsymmetricProfileError(RuntimeError):
    """The plane scan found no empty-to-nonempty transition."""


@dataclass
class ReflectionSet:
    lam: float
    intervals: list[tuple[float, float]]
    measure: float

    @property
    def empty(self) -> bool:
        return not self.intervals


@dataclass
class SymmetryReport:
    axis: float
    max_asymmetry: float
    crest_count: int
    monotone_left: bool
    monotone_right: bool


@dataclass
class CrestFit:
    alpha: float
    c1: float
    c2: float
    window_radius: float

    def __post_init__(self):
        if not (0 < self.alpha <= 1.0):
            raise ValueError(f"crest exponent {self.alpha} outside (0, 1]")
        if not (0 < self.c1 <= self.c2):
            raise ValueError("need 0 < C1 <= C2")


@dataclass
class KernelCheckReport:
    n_pairs: int
    identity_max_error: float
    positive_failures: int
    upper_failures: int
    min_difference: float
    min_upper_margin: float
    sharp_margin: float

    @property
    def all_pass(self) -> bool:
        return self.positive_failures == 0 and self.upper_failures == 0


@dataclass
class TouchingVerdict:
    outcome: str  # identical-on-half-line | strictly-above | falsified
    min_gap: float
    max_sum: float


def _interp_reflected(grid: Grid, values: np.ndarray, lam: float):
    """Values of the mirror image x -> 2*lam - x at the grid nodes.

    Returns (reflected, valid); on line grids reflections leaving the domain
    are zero-filled and masked invalid, on periodic grids they wrap.
    """
    x = grid.nodes()
    t = 2.0 * lam - x
    if grid.kind == PERIODIC:
        span = 2.0 * grid.half_length
        t = (t - x[0]) % span + x[0]
        xe = np.concatenate([x, [x[0] + span]])
        ve = np.concatenate([values, [values[0]]])
        return np.interp(t, xe, ve), np.ones(grid.n, dtype=bool)
    valid = (t >= x[0]) & (t <= x[-1])
    refl = np.where(valid, np.interp(t, x, values, left=0.0, right=0.0), 0.0)
    return refl, valid


def reflect(p: WaveProfile, lam: float) -> WaveProfile:
    """Mirror image phi(2*lam - x); speed and constant are copied.

    On line grids, nodes whose mirror leaves the domain get the zero tail
    value; use :func:`reflection_mask` to identify them.
    """
    refl, _ = _interp_reflected(p.grid, p.phi, lam)
    return WaveProfile(p.grid, refl, p.c, p.a)


def reflection_mask(grid: Grid, lam: float) -> np.ndarray:
    """Boolean mask of nodes whose mirror image stays inside the grid."""
    return _interp_reflected(grid, np.zeros(grid.n), lam)[1]


def max_asymmetry(p: WaveProfile, lam: float) -> float:
    """sup over in-domain mirror pairs of |phi(x) - phi(2*lam - x)|."""
    refl, valid = _interp_reflected(p.grid, p.phi, lam)
    if not np.any(valid):
        return np.inf
    return float(np.max(np.abs(p.phi - refl)[valid]))


def sigma_minus(p: WaveProfile, lam: float,
                tol_set: float | None = None) -> ReflectionSet:
    """Grid intervals right of lam where phi lies strictly below its mirror.

    ``tol_set`` separates "equal within rounding" from "strictly below"; the
    default scales with the profile so converged spectral solutions do not
    flicker at their truncation floor.
    """
    if tol_set is None:
        tol_set = max(TOL_SET, 1e-9 * float(np.max(np.abs(p.phi))))
    x = p.grid.nodes()
    refl, valid = _interp_reflected(p.grid, p.phi, lam)
    if p.grid.kind == PERIODIC:
        # a circle reflection has a second fixed point at the antipode;
        # the swept set lives on the half-circle between the two axes
        span = 2.0 * p.grid.half_length
        right = ((x - lam) % span > 0) & ((x - lam) % span < 0.5 * span)
    else:
        right = x > lam
    below = right & valid & (p.phi < refl - tol_set)
    intervals = []
    h = p.grid.spacing
    idx = np.flatnonzero(below)
    if idx.size:
        breaks = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate([[0], breaks + 1])
        ends = np.concatenate([breaks, [idx.size - 1]])
        for s, e in zip(starts, ends):
            intervals.append((float(x[idx[s]]), float(x[idx[e]])))
    measure = sum(b - a + h for a, b in intervals)
    return ReflectionSet(float(lam), intervals, float(measure))


def count_crests(p: WaveProfile, prominence: float | None = None) -> int:
    """Local maxima of the profile above a prominence floor."""
    phi = p.phi
    if prominence is None:
        prominence = 1e-8 * float(np.max(np.abs(phi)))
    d = np.diff(phi)
    rising = d > prominence
    falling = d < -prominence
    count = 0
    state = None  # last significant direction seen
    for i in range(d.size):
        if rising[i]:
            state = "up"
        elif falling[i]:
            if state == "up":
                count += 1
            state = "down"
    return count


def _monotone_flags(p: WaveProfile, crest_index: int, tol: float):
    d = np.diff(p.phi)
    left_ok = bool(np.all(d[:crest_index] >= -tol))
    right_ok = bool(np.all(d[crest_index:] <= tol))
    return left_ok, right_ok


def _golden_minimize(f, a: float, b: float, iters: int = 60) -> float:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    return 0.5 * (a + b)


def moving_plane_scan(p: WaveProfile, tol_set: float | None = None,
                      mono_tol: float | None = None) -> SymmetryReport:
    """Sweep the reflection axis from the left and pin the symmetry axis.

    The reported axis is the last node-axis with an empty below-mirror set,
    refined between neighbouring nodes by golden-section on the reflection
    asymmetry.  Crest count and one-sided monotonicity describe the global
    single-crest structure.
    """
    x = p.grid.nodes()
    crest_index = int(np.argmax(p.phi))
    if mono_tol is None:
        mono_tol = 1e-8 * float(np.max(np.abs(p.phi)))

    last_empty = None
    transition = None
    for k in range(1, min(crest_index + 2, p.grid.n - 1)):
        if sigma_minus(p, float(x[k]), tol_set).empty:
            last_empty = k
        else:
            transition = k
            break
    if transition is None or last_empty is None:
        raise AsymmetricProfileError(
            "no empty-to-nonempty transition before the global crest; "
            f"crest at x={x[crest_index]:.6g}")

    lam0 = float(x[last_empty])
    h = p.grid.spacing
    axis = _golden_minimize(lambda lam: max_asymmetry(p, lam),
                            lam0 - h, lam0 + h)
    asym = max_asymmetry(p, axis)
    crest_count = count_crests(p)
    left_ok, right_ok = _monotone_flags(p, crest_index, mono_tol)
    return SymmetryReport(axis=float(axis), max_asymmetry=float(asym),
                          crest_count=crest_count, monotone_left=left_ok,
                          monotone_right=right_ok)


def kernel_reflection_inequalities(lam: float, pairs: np.ndarray) -> KernelCheckReport:
    """Check the reflection identity and kernel difference bounds on pairs.

    For x, y > lam:
      (i)   (x + y - 2*lam) - |x - y| = 2*min(x - lam, y - lam)   (exact),
      (ii)  K(x - y) - K(2*lam - x - y) > 0,
      (iii) K(x - y) - K(2*lam - x - y) <= 2*(x - lam).

    The sharper Lipschitz margin against min(x - lam, y - lam) is recorded
    but not asserted.
    """
    pts = np.asarray(pairs, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("pairs must have shape (n, 2)")
    xs, ys = pts[:, 0], pts[:, 1]
    if np.any(xs <= lam) or np.any(ys <= lam):
        raise ValueError("all sample points must lie strictly right of lambda")

    lhs_identity = (xs + ys - 2.0 * lam) - np.abs(xs - ys)
    mins = 2.0 * np.minimum(xs - lam, ys - lam)
    identity_err = float(np.max(np.abs(lhs_identity - mins)))

    diff = kernel_eval(xs - ys) - kernel_eval(2.0 * lam - xs - ys)
    upper = 2.0 * (xs - lam)
    sharp = np.minimum(xs - lam, ys - lam)
    return KernelCheckReport(
        n_pairs=pts.shape[0],
        identity_max_error=identity_err,
        positive_failures=int(np.sum(diff <= 0)),
        upper_failures=int(np.sum(diff > upper)),
        min_difference=float(np.min(diff)),
        min_upper_margin=float(np.min(upper - diff)),
        sharp_margin=float(np.max(diff - sharp)),
    )


def fit_crest_exponent(p: WaveProfile, window_radius: float) -> CrestFit:
    """Hoelder structure of the crest: log-log fit of c - phi vs distance.

    Requires the highest-wave regime (crest within 1% of the speed).  The
    crest node itself is excluded; the window is capped at a tenth of the
    half-domain.
    """
    c = p.c
    sup = float(np.max(p.phi))
    if c - sup > 1e-2 * c:
        raise ValueError(f"crest height {sup} too far below speed {c} "
                         "for a crest-structure fit")
    radius = min(window_radius, 0.1 * p.grid.half_length)
    x = p.grid.nodes()
    lam0 = float(x[int(np.argmax(p.phi))])
    s = np.abs(x - lam0)
    mask = (s > 0.5 * p.grid.spacing) & (s <= radius)
    if mask.sum() < 3:
        raise ValueError("crest window contains too few nodes")
    gap = c - p.phi[mask]
    if np.any(gap <= 0):
        raise ValueError("c - phi must be positive on the crest window")
    logs, logg = np.log(s[mask]), np.log(gap)
    A = np.vstack([np.ones_like(logs), logs]).T
    coef, *_ = np.linalg.lstsq(A, logg, rcond=None)
    alpha = float(coef[1])
    ratio = gap / s[mask] ** alpha
    return CrestFit(alpha=alpha, c1=float(np.min(ratio)),
                    c2=float(np.max(ratio)), window_radius=float(radius))


def touching_check(sup_p: WaveProfile, sub_p: WaveProfile, lam: float,
                   tol: float = 1e-10) -> TouchingVerdict:
    """Dichotomy for an ordered super/subsolution pair on [lam, infinity).

    Preconditions (verified): sup_p >= sub_p on the half-line within tol and
    sup_p^2 - sub_p^2 odd about lam within tol.  Outcome is either equality
    on the half-line, or strict ordering with sup + sub < 2c; anything else
    is a falsification event.
    """
    if sup_p.grid != sub_p.grid:
        raise ValueError("profiles must share a grid")
    grid = sup_p.grid
    x = grid.nodes()
    right = x >= lam
    gap = sup_p.phi - sub_p.phi
    if np.min(gap[right]) < -tol:
        raise ValueError("sup_p must dominate sub_p on the half-line")

    g = sup_p.phi ** 2 - sub_p.phi ** 2
    g_refl, valid = _interp_reflected(grid, g, lam)
    odd_err = float(np.max(np.abs((g + g_refl)[valid])))
    scale = max(1.0, float(np.max(np.abs(g))))
    if odd_err > 1e3 * tol * scale + 1e-12:
        raise ValueError(f"squared difference not odd about lambda "
                         f"(deviation {odd_err:.3e})")

    if float(np.max(np.abs(gap[right]))) <= tol:
        return TouchingVerdict("identical-on-half-line", 0.0,
                               float(np.max((sup_p.phi + sub_p.phi)[right])))
    strict = x > lam + grid.spacing
    min_gap = float(np.min(gap[strict])) if np.any(strict) else np.nan
    max_sum = float(np.max((sup_p.phi + sub_p.phi)[strict])) if np.any(strict) else np.nan
    if min_gap > 0 and max_sum < 2.0 * sup_p.c:
        return TouchingVerdict("strictly-above", min_gap, max_sum)
    return TouchingVerdict("falsified", min_gap, max_sum)
