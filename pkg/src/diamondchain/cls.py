"""Compact localized states of the flat band (``phi = 0`` or ``pi``).

Each family occupies the a/c legs of two neighbouring cells ``s0, s0+1``
and the b leg of cell ``s0``; it is an exact null vector of ``H`` when
``e_par = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LatticeState, ModelError, ModelParams, peierls_trig, real_space_operator

VARIANTS = (
    "two_site_phi0",
    "two_site_phipi",
    "two_site_phi0_eperp",
    "two_site_phipi_eperp",
)


@dataclass(frozen=True)
class ClsSpec:
    variant: str = "two_site_phipi"
    a0: complex = 1.0
    anchor: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ModelError(f"unknown CLS variant {self.variant!r}; expected one of {VARIANTS}")
        if self.a0 == 0:
            raise ModelError("a0 must be nonzero")
        object.__setattr__(self, "a0", complex(self.a0))
        object.__setattr__(self, "anchor", int(self.anchor))

    @property
    def sites(self) -> list[tuple[int, str]]:
        """Nonzero sites as ``(cell, leg)`` pairs."""
        s = self.anchor
        return [(s, "a"), (s, "b"), (s, "c"), (s + 1, "a"), (s + 1, "c")]


def _check_consistent(spec: ClsSpec, params: ModelParams) -> None:
    if params.e_par != 0:
        raise ModelError("a CLS is an eigenmode only for e_par == 0")
    cos_phi, sin_phi = peierls_trig(params.phi)
    want_pi = "phipi" in spec.variant
    if sin_phi != 0 or cos_phi != (-1.0 if want_pi else 1.0):
        raise ModelError(f"variant {spec.variant} needs phi = {'pi' if want_pi else '0'}, got {params.phi}")
    if not spec.variant.endswith("_eperp") and params.e_perp != 0:
        raise ModelError(f"variant {spec.variant} assumes e_perp == 0; use the _eperp variant")
    if not (params.n_min <= spec.anchor and spec.anchor + 1 <= params.n_max):
        raise ModelError(
            f"CLS support {{{spec.anchor}, {spec.anchor + 1}}} outside [{params.n_min}, {params.n_max}]"
        )


def build_cls(spec: ClsSpec, params: ModelParams) -> LatticeState:
    """Exact compact localized state for ``spec`` at ``params``.

    ``phi = 0``:  ``A = -C = a0`` on both cells, ``B_s0 = (e_perp + i gamma) a0``.
    ``phi = pi``: ``A = -C = (-1)^(n - s0) a0``, ``B_s0 = -(e_perp + i gamma) a0``.
    """
    _check_consistent(spec, params)
    state = LatticeState.zeros(params)
    s, a0 = spec.anchor, spec.a0
    onsite = params.e_perp + 1j * params.gamma
    sign = -1.0 if "phipi" in spec.variant else 1.0
    first, second = state.cell(s), state.cell(s + 1)
    first[0], first[2] = a0, -a0
    second[0], second[2] = sign * a0, -sign * a0
    first[1] = sign * onsite * a0
    return state


def cls_residual(state: LatticeState, params: ModelParams) -> float:
    """``||H psi|| / ||psi||``; zero for an exact flat-band eigenmode."""
    if params.e_par != 0:
        raise ModelError("cls_residual needs e_par == 0")
    state.check_matches(params)
    psi = state.vector()
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ModelError("residual of the zero state is undefined")
    H = real_space_operator(params, sparse=True)
    return float(np.linalg.norm(H @ psi) / norm)
