"""Observables derived from states, trajectories and finite-lattice spectra."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
import scipy.optimize
import scipy.signal

from .evolve import EvolveConfig, Trajectory, evolve
from .model import LAMBDA_CONVENTION, LatticeState, ModelError, ModelParams, real_space_operator

LEGS = {"a": 0, "b": 1, "c": 2}
MAX_SPECTRUM_CELLS = 2000


class SpectrumError(RuntimeError):
    pass


@dataclass
class IntensityProfile:
    z: float
    cells: np.ndarray
    rho: np.ndarray


def intensity(state: LatticeState) -> IntensityProfile:
    """Per-cell intensity ``rho_n = |a_n|^2 + |b_n|^2 + |c_n|^2``."""
    rho = (np.abs(state.amps) ** 2).sum(axis=1)
    return IntensityProfile(state.z, state.cells, rho)


@dataclass
class DiagnosticsSeries:
    z: np.ndarray
    total_power: np.ndarray
    center_of_mass: np.ndarray
    asymmetry: np.ndarray
    width: np.ndarray
    excited_power: np.ndarray
    complement_power: np.ndarray

    def __len__(self):
        return self.z.size

    def rows(self):
        """Tuples ``(z, total_power, com, asymmetry, width, excited, complement)``."""
        return zip(
            self.z,
            self.total_power,
            self.center_of_mass,
            self.asymmetry,
            self.width,
            self.excited_power,
            self.complement_power,
        )


def site_mask(n_min: int, n_cells: int, sites: Iterable[tuple[int, str]]) -> np.ndarray:
    """Boolean ``(N, 3)`` mask from ``(cell, leg)`` pairs, leg in ``"abc"``."""
    mask = np.zeros((n_cells, 3), dtype=bool)
    for n, leg in sites:
        j = n - n_min
        if not 0 <= j < n_cells:
            raise ModelError(f"site ({n}, {leg}) outside the lattice")
        mask[j, LEGS[leg]] = True
    return mask


def support_mask(amps: np.ndarray) -> np.ndarray:
    """Sites carrying nonzero amplitude; the default excited-site set."""
    return np.abs(amps) > 0


def series_from_amps(z, amps, cells, mask) -> DiagnosticsSeries:
    """Vectorized diagnostics for ``amps`` of shape ``(T, N, 3)``."""
    z = np.asarray(z, dtype=float)
    # samples taken just before an overflow report may legitimately hold inf
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        site_power = np.abs(np.asarray(amps)) ** 2
        rho = site_power.sum(axis=2)
        P = rho.sum(axis=1)
        com = rho @ cells / P
        second = rho @ (cells.astype(float) ** 2) / P
        asym = (rho[:, cells > 0].sum(axis=1) - rho[:, cells < 0].sum(axis=1)) / P
        width = np.sqrt(np.maximum(second - com**2, 0.0))
        excited = (site_power * mask).sum(axis=(1, 2))
        complement = (site_power * ~mask).sum(axis=(1, 2))
    return DiagnosticsSeries(z, P, com, asym, width, excited, complement)


def series(trajectory: Trajectory, excited_sites: Iterable[tuple[int, str]] | None = None) -> DiagnosticsSeries:
    """Diagnostics for every sample of ``trajectory``.

    ``excited_sites`` defaults to the support of the initial state, which for
    a CLS start is ``{a, b, c}`` of cell ``s0`` and ``{a, c}`` of cell ``s0+1``.
    """
    if len(trajectory) == 0:
        raise ModelError("empty trajectory")
    params = trajectory.params
    if excited_sites is None:
        mask = support_mask(trajectory.amps[0])
    else:
        mask = site_mask(params.n_min, params.n_cells, excited_sites)
    return series_from_amps(trajectory.z, trajectory.amps, params.cells, mask)


def streamed_series(
    initial: LatticeState,
    params: ModelParams,
    config: EvolveConfig,
    excited_sites: Iterable[tuple[int, str]] | None = None,
) -> tuple[DiagnosticsSeries, Trajectory]:
    """Evolve and accumulate diagnostics without storing the sampled states.

    The returned trajectory carries status and integrator metadata only.
    """
    if excited_sites is None:
        mask = support_mask(initial.amps)
    else:
        mask = site_mask(params.n_min, params.n_cells, excited_sites)
    zs, chunks = [], []

    def on_sample(z, amps):
        zs.append(z)
        chunks.append(series_from_amps([z], amps[None], params.cells, mask))

    traj = evolve(initial, params, config, on_sample=on_sample, keep_samples=False)
    cols = [np.concatenate([getattr(c, name) for c in chunks]) for name in _SERIES_FIELDS]
    return DiagnosticsSeries(*cols), traj


_SERIES_FIELDS = ("z", "total_power", "center_of_mass", "asymmetry", "width", "excited_power", "complement_power")


class OscillationMetrics(NamedTuple):
    period_z: float
    """Mean peak spacing of the centre of mass; NaN when undetermined."""
    amplitude: float
    is_bounded: bool
    n_peaks: int
    peaks_z: np.ndarray


def _refined_peaks(z, x, min_prominence):
    idx, _ = scipy.signal.find_peaks(x, prominence=min_prominence)
    out = []
    for i in idx:
        if 0 < i < len(x) - 1:
            y0, y1, y2 = x[i - 1], x[i], x[i + 1]
            denom = y0 - 2 * y1 + y2
            shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
            # uniform sampling assumed locally
            out.append(z[i] + shift * (z[i + 1] - z[i - 1]) / 2)
        else:
            out.append(z[i])
    return np.array(out)


def oscillation_metrics(
    s: DiagnosticsSeries,
    bound_factor: float = 10.0,
    window: tuple[float, float] | None = None,
    prominence: float = 0.25,
) -> OscillationMetrics:
    """Period, amplitude and boundedness of the centre-of-mass motion.

    Peaks are local maxima of ``x(z)`` whose prominence exceeds ``prominence``
    times the peak-to-peak range, refined by a parabola through the three
    nearest samples.  ``is_bounded`` checks ``P(z)`` against
    ``[P(0)/bound_factor, P(0)*bound_factor]`` over the whole series.
    """
    z, x = s.z, s.center_of_mass
    if window is not None:
        sel = (z >= window[0]) & (z <= window[1])
        z, x = z[sel], x[sel]
    P = s.total_power
    P0 = P[0]
    is_bounded = bool(np.all(np.isfinite(P)) and np.all(P >= P0 / bound_factor) and np.all(P <= P0 * bound_factor))
    if x.size == 0 or not np.all(np.isfinite(x)):
        return OscillationMetrics(math.nan, math.nan, is_bounded, 0, np.empty(0))
    span = float(x.max() - x.min())
    amplitude = span / 2.0
    peaks = _refined_peaks(z, x, prominence * span) if span > 0 else np.empty(0)
    period = float(np.mean(np.diff(peaks))) if peaks.size >= 3 else math.nan
    return OscillationMetrics(period, amplitude, is_bounded, int(peaks.size), peaks)


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    complex_count: int
    complex_indices: np.ndarray
    im_tolerance: float
    convention: str = LAMBDA_CONVENTION

    def __len__(self):
        return self.eigenvalues.size


def finite_spectrum(params: ModelParams, im_tolerance: float = 1e-6) -> SpectrumReport:
    """All ``3N`` propagation constants (eigenvalues of ``-H``), sorted by Re then Im."""
    if params.n_cells > MAX_SPECTRUM_CELLS:
        raise ModelError(f"dense spectrum limited to {MAX_SPECTRUM_CELLS} cells, got {params.n_cells}")
    try:
        ev = np.linalg.eigvals(-real_space_operator(params))
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"eigensolver failed for {params}: {exc}") from exc
    ev = ev[np.lexsort((ev.imag, ev.real))]
    idx = np.flatnonzero(np.abs(ev.imag) > im_tolerance)
    return SpectrumReport(ev, int(idx.size), idx, im_tolerance)


def conjugate_pairing_error(eigenvalues) -> float:
    """Largest distance in the optimal matching of a spectrum with its conjugate."""
    ev = np.asarray(eigenvalues)
    cost = np.abs(ev[:, None] - ev.conj()[None, :])
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    return float(cost[rows, cols].max())
