"""Bloch band structure from the characteristic cubic ``lambda^3 - P lambda + Q = 0``.

Roots come from a branch-stabilized Cardano formula, with a companion-matrix
eigensolve as fallback, and every sweep is cross-checked against a direct
eigensolve of the 3x3 Bloch operator.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .model import ModelError, ModelParams, _require_no_tilt, bloch_operators, peierls_trig

GAMMA_C = 2.0 * math.sqrt(2.0)
RESIDUAL_TOL = 1e-10
CROSS_CHECK_TOL = 1e-9
FLAT_TOL = 1e-9
NEAR_EP_GAP = 1e-4

_PERMS = np.array(list(itertools.permutations(range(3))))
_OMEGA = np.exp(2j * np.pi * np.arange(3) / 3)


class BandSolverError(ArithmeticError):
    """Root solver and eigensolver disagree, or coefficients are not finite."""


class CharacteristicCoefficients(NamedTuple):
    p: complex
    q: complex


def characteristic_coefficients(params: ModelParams, k):
    """``P`` and ``Q`` of the characteristic cubic at momentum ``k`` (scalar or array)."""
    _require_no_tilt(params, "characteristic_coefficients")
    g, et = params.gamma, params.e_perp
    cos_phi, sin_phi = peierls_trig(params.phi)
    k = np.asarray(k, dtype=float)
    p = et**2 + 2j * g * et - g**2 + 4.0 * (1.0 + cos_phi * np.cos(k))
    q = 4.0 * (et + 1j * g) * sin_phi * np.sin(k)
    if k.ndim == 0:
        return CharacteristicCoefficients(complex(p), complex(q))
    return CharacteristicCoefficients(np.asarray(p, complex), np.asarray(q, complex))


class CubicRoots(NamedTuple):
    roots: np.ndarray
    """Shape ``(..., 3)``."""
    fallback: np.ndarray
    """True where the companion-matrix eigensolve replaced Cardano."""
    degenerate: np.ndarray
    """True where ``P = Q = 0`` (triple root at zero)."""


def cubic_residual(roots, p, q) -> np.ndarray:
    """Scaled residual ``|l^3 - P l + Q| / max(1, |l|^3)`` per root."""
    roots = np.asarray(roots)
    p = np.asarray(p)[..., None]
    q = np.asarray(q)[..., None]
    return np.abs(roots**3 - p * roots + q) / np.maximum(1.0, np.abs(roots) ** 3)


def companion_roots(p, q) -> np.ndarray:
    """Roots via eigenvalues of the companion matrix of ``l^3 - P l + Q``."""
    p = np.asarray(p, complex)
    q = np.asarray(q, complex)
    comp = np.zeros(p.shape + (3, 3), complex)
    comp[..., 0, 1] = p
    comp[..., 0, 2] = -q
    comp[..., 1, 0] = 1.0
    comp[..., 2, 1] = 1.0
    return np.linalg.eigvals(comp)


def cubic_roots(p, q) -> CubicRoots:
    """Vectorized roots of ``l^3 - P l + Q = 0``.

    Cardano on the depressed cubic ``t^3 + a t + b`` (``a = -P``, ``b = Q``):
    ``u^3 = -b/2 +- sqrt(b^2/4 + a^3/27)`` with the sign that maximizes
    ``|u^3|``, then ``t_j = w^j u - a / (3 w^j u)``.
    """
    p = np.asarray(p, complex)
    q = np.asarray(q, complex)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
        raise BandSolverError("non-finite cubic coefficients")
    a = -p
    b = q
    disc = np.sqrt(b * b / 4.0 + a**3 / 27.0)
    u3_plus = -b / 2.0 + disc
    u3_minus = -b / 2.0 - disc
    u3 = np.where(np.abs(u3_plus) >= np.abs(u3_minus), u3_plus, u3_minus)
    degenerate = u3 == 0
    u = np.where(degenerate, 0.0, u3 ** (1.0 / 3.0))
    safe_u = np.where(degenerate, 1.0, u)[..., None] * _OMEGA
    roots = safe_u - a[..., None] / (3.0 * safe_u)
    roots = np.where(degenerate[..., None], 0.0, roots)

    bad = np.any(cubic_residual(roots, p, q) > RESIDUAL_TOL, axis=-1) & ~degenerate
    if np.any(bad):
        roots[bad] = companion_roots(p[bad], q[bad])
    return CubicRoots(roots, bad, degenerate)


def solve_cubic(coeffs: CharacteristicCoefficients) -> CubicRoots:
    """Three roots of ``lambda^3 - P lambda + Q = 0`` for one coefficient pair.

    ``P = Q = 0`` is reported via ``degenerate`` with roots ``(0, 0, 0)``.
    """
    res = cubic_roots(coeffs.p, coeffs.q)
    return CubicRoots(sort_roots(res.roots), bool(res.fallback), bool(res.degenerate))


def sort_roots(roots) -> np.ndarray:
    """Sort along the last axis by real part, then imaginary part.

    Real parts are compared after rounding to 12 decimals so that
    rounding noise does not scramble roots on a common vertical line.
    """
    roots = np.asarray(roots)
    re = np.round(roots.real, 12)
    order = np.lexsort((roots.imag, re), axis=-1)
    return np.take_along_axis(roots, order, axis=-1)


def best_permutation(target, candidates) -> np.ndarray:
    """Permutation ``pi`` minimizing ``sum_b |candidates[pi[b]] - target[b]|``."""
    cost = np.abs(candidates[_PERMS] - target).sum(axis=1)
    return _PERMS[int(np.argmin(cost))]


def match_distance(x, y) -> float:
    """Smallest max-distance between two root triples over all pairings."""
    return float(np.abs(y[_PERMS] - x).max(axis=1).min())


def track_bands(roots, anchor: int = 0, anchor_values=None) -> np.ndarray:
    """Permutation per grid point joining roots into continuous bands.

    Starting at ``anchor`` (labelled by ``anchor_values`` if given, identity
    otherwise), each neighbour is matched to the previous point by the
    permutation with the smallest summed displacement.
    """
    roots = np.asarray(roots)
    n = roots.shape[0]
    perm = np.empty((n, 3), dtype=int)
    if anchor_values is None:
        perm[anchor] = np.arange(3)
    else:
        perm[anchor] = best_permutation(np.asarray(anchor_values), roots[anchor])
    for step in (1, -1):
        i = anchor + step
        while 0 <= i < n:
            prev = roots[i - step][perm[i - step]]
            perm[i] = best_permutation(prev, roots[i])
            i += step
    return perm


@dataclass(frozen=True)
class BandPoint:
    k: float
    lambdas: np.ndarray


@dataclass
class BandSweep:
    """Propagation constants on a uniform ``k`` grid.

    ``lambdas[i]`` holds the three roots at ``grid[i]`` sorted by (Re, Im);
    ``tracking[i]`` reorders them into continuous bands, see ``bands``.
    """

    params: ModelParams
    grid: np.ndarray
    lambdas: np.ndarray
    tracking: np.ndarray
    degenerate_k: np.ndarray = field(default_factory=lambda: np.empty(0))
    max_eig_deviation: float = 0.0

    @property
    def bands(self) -> np.ndarray:
        """Tracked bands, shape ``(n_k, 3)``."""
        return np.take_along_axis(self.lambdas, self.tracking, axis=1)

    def point(self, i: int) -> BandPoint:
        return BandPoint(float(self.grid[i]), self.lambdas[i].copy())

    def __len__(self):
        return self.grid.size


def roots_on_grid(params: ModelParams, ks) -> CubicRoots:
    coeffs = characteristic_coefficients(params, np.asarray(ks, dtype=float))
    res = cubic_roots(coeffs.p, coeffs.q)
    return CubicRoots(sort_roots(res.roots), res.fallback, res.degenerate)


def eig_cross_check(params: ModelParams, ks, roots) -> np.ndarray:
    """Per-k distance between cubic roots and Bloch-operator eigenvalues."""
    eigs = np.linalg.eigvals(bloch_operators(params, ks))
    diff = np.abs(eigs[:, _PERMS] - roots[:, None, :]).max(axis=2)
    return diff.min(axis=1)


def band_sweep(params: ModelParams, n_k: int = 401, validate: bool = True) -> BandSweep:
    """Band structure on ``n_k`` uniform points covering ``[-pi, pi]`` inclusive."""
    _require_no_tilt(params, "band_sweep")
    if n_k < 16:
        raise ModelError(f"n_k must be >= 16, got {n_k}")
    grid = np.linspace(-np.pi, np.pi, n_k)
    res = roots_on_grid(params, grid)
    dev = 0.0
    if validate:
        per_k = eig_cross_check(params, grid, res.roots)
        # Near an exceptional point the dense eigensolver itself is only
        # accurate to ~eps^(1/m) for an m-fold defective root.
        gap = same_k_gap(res.roots)
        scale = np.maximum(1.0, np.abs(res.roots).max(axis=1))
        eps = np.finfo(float).eps
        allowed = np.where(
            gap < NEAR_EP_GAP,
            np.maximum(CROSS_CHECK_TOL, 100.0 * scale * eps ** (1.0 / 3.0)),
            CROSS_CHECK_TOL,
        )
        regular = gap >= NEAR_EP_GAP
        dev = float(per_k[regular].max()) if regular.any() else 0.0
        if np.any(per_k >= allowed):
            i = int(np.argmax(per_k / allowed))
            raise BandSolverError(
                f"cubic roots deviate from Bloch eigenvalues by {per_k[i]:.3e} at k={grid[i]:.6f} ({params})"
            )
    return BandSweep(
        params=params,
        grid=grid,
        lambdas=res.roots,
        tracking=track_bands(res.roots),
        degenerate_k=grid[res.degenerate],
        max_eig_deviation=dev,
    )


class TouchingPoint(NamedTuple):
    band_n: int
    band_m: int
    k: float
    k_prime: float
    separation: float
    value: complex


@dataclass
class GapReport:
    has_flat_band: bool
    is_gapless: bool
    min_separation: float
    gamma_c: float = GAMMA_C
    grid_min_separation: float = math.inf
    flat_band: int | None = None
    touching_points: list = field(default_factory=list)
    separation_tolerance: float = 1e-6


_ZOOM_POINTS = 33
_ZOOM_SHRINK = 4.0 / (_ZOOM_POINTS - 1)


def same_k_gap(roots) -> np.ndarray:
    """Smallest distance between two distinct roots at each ``k``."""
    r = np.asarray(roots)
    return np.minimum.reduce(
        [np.abs(r[..., 0] - r[..., 1]), np.abs(r[..., 0] - r[..., 2]), np.abs(r[..., 1] - r[..., 2])]
    )


def _refine_same_k(params, k, h, max_iter=40):
    """Zoom on a local minimum of the same-k root gap (label free)."""
    offsets = np.linspace(-1.0, 1.0, _ZOOM_POINTS)
    best = (math.inf, k, 0j)
    for _ in range(max_iter):
        K = np.clip(k + h * offsets, -np.pi, np.pi)
        R = roots_on_grid(params, K).roots
        gap = same_k_gap(R)
        a = int(np.argmin(gap))
        k = float(K[a])
        if gap[a] < best[0]:
            r = R[a]
            pairs = [(0, 1), (0, 2), (1, 2)]
            i, j = min(pairs, key=lambda ij: abs(r[ij[0]] - r[ij[1]]))
            best = (float(gap[a]), k, complex((r[i] + r[j]) / 2))
        h *= _ZOOM_SHRINK
        if h < 1e-15:
            break
    return best


def _refine_cross_k(params, n, m, k1, k2, v1, v2, h, max_iter=40):
    """Zoom on ``min |lambda_n(k1) - lambda_m(k2)|`` for a transversal crossing."""
    offsets = np.linspace(-1.0, 1.0, _ZOOM_POINTS)
    centre = _ZOOM_POINTS // 2
    best = (abs(v1[n] - v2[m]), k1, k2, complex(v1[n]))
    for _ in range(max_iter):
        K1 = np.clip(k1 + h * offsets, -np.pi, np.pi)
        K2 = np.clip(k2 + h * offsets, -np.pi, np.pi)
        R1 = roots_on_grid(params, K1).roots
        R2 = roots_on_grid(params, K2).roots
        T1 = np.take_along_axis(R1, track_bands(R1, centre, v1), axis=1)
        T2 = np.take_along_axis(R2, track_bands(R2, centre, v2), axis=1)
        D = np.abs(T1[:, n][:, None] - T2[:, m][None, :])
        a, b = np.unravel_index(int(np.argmin(D)), D.shape)
        k1, k2, v1, v2 = float(K1[a]), float(K2[b]), T1[a], T2[b]
        if D[a, b] < best[0]:
            best = (float(D[a, b]), k1, k2, complex(v1[n]))
        h *= _ZOOM_SHRINK
        if h < 1e-15:
            break
    return best


def _segment_crossings(x, y):
    """Index pairs ``(i, j)`` where segment ``x[i]x[i+1]`` properly crosses ``y[j]y[j+1]``."""
    p, r = x[:-1], np.diff(x)
    q, s = y[:-1], np.diff(y)

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    denom = cross(r[:, None], s[None, :])
    qp = q[None, :] - p[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross(qp, s[None, :]) / denom
        u = cross(qp, r[:, None]) / denom
    hit = (denom != 0) & (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)
    return np.argwhere(hit)


def find_flat_band(lambdas, tol: float = FLAT_TOL):
    """Value shared by one root at every grid point, or None.

    Works on the per-k root sets, so label swaps at band touchings do not hide
    a flat band.
    """
    lambdas = np.asarray(lambdas)
    for candidate in lambdas[0]:
        if np.abs(lambdas - candidate).min(axis=1).max() < tol:
            # recentre on the mean of the matched roots
            idx = np.abs(lambdas - candidate).argmin(axis=1)
            value = lambdas[np.arange(len(idx)), idx].mean()
            if np.abs(lambdas[np.arange(len(idx)), idx] - value).max() < tol:
                return complex(value)
    return None


def classify_gaps(sweep: BandSweep, separation_tolerance: float = 1e-6, refine: bool = True) -> GapReport:
    """Flat-band detection and gapless/isolated classification.

    ``min_separation`` is the smallest ``|lambda_n(k) - lambda_m(k')|`` over
    distinct bands and independent ``k, k'``.  The exhaustive grid scan is
    refined in two ways, because touching points fall between grid nodes and
    square-root band edges make on-grid distances decay only like ``sqrt(dk)``:

    * band touchings at a common ``k`` are exceptional points of the cubic;
      they are located by zooming on local minima of the same-k root gap,
      which needs no band labels;
    * transversal crossings at ``k != k'`` are found as intersections of the
      tracked band polylines and zoomed with local tracking.
    """
    bands = sweep.bands
    grid = sweep.grid
    params = sweep.params
    flat_value = find_flat_band(sweep.lambdas)
    flat = None
    if flat_value is not None:
        flat = int(np.argmin(np.abs(bands - flat_value).max(axis=0)))

    h = float(grid[1] - grid[0])
    grid_min = math.inf
    for n, m in itertools.combinations(range(3), 2):
        D = np.abs(bands[:, n][:, None] - bands[:, m][None, :])
        grid_min = min(grid_min, float(D.min()))
    best = grid_min
    touching = []
    if refine:
        gap = same_k_gap(sweep.lambdas)
        padded = np.concatenate([[np.inf], gap, [np.inf]])
        minima = np.flatnonzero((padded[1:-1] <= padded[:-2]) & (padded[1:-1] <= padded[2:]))
        for i in minima:
            sep, k0, val = _refine_same_k(params, float(grid[i]), h)
            best = min(best, sep)
            if sep < separation_tolerance and not any(abs(t.k - k0) < 1e-6 for t in touching):
                touching.append(TouchingPoint(-1, -1, k0, k0, sep, val))
        for n, m in itertools.combinations(range(3), 2):
            if best < separation_tolerance:
                break
            for i, j in _segment_crossings(bands[:, n], bands[:, m]):
                if abs(i - j) <= 1 or best < separation_tolerance:
                    continue
                sep, k1, k2, val = _refine_cross_k(params, n, m, grid[i], grid[j], bands[i], bands[j], h)
                best = min(best, sep)
                if sep < separation_tolerance:
                    touching.append(TouchingPoint(n, m, k1, k2, sep, val))
    return GapReport(
        has_flat_band=flat is not None,
        is_gapless=best < separation_tolerance,
        min_separation=best,
        grid_min_separation=grid_min,
        flat_band=flat,
        touching_points=touching,
        separation_tolerance=separation_tolerance,
    )
