"""Propagating and evanescent channels of the interface operator at fixed energy.

In the rotated frame the x-Fourier symbol at wavenumber xi is

    Hhat(xi) = [[ xi, A ],
                [ A*, -xi]]

acting on (mu, nu)-sector coefficients.  Restricted to level n >= 1 it is the
2x2 matrix [[xi, sqrt(rho_n)], [sqrt(rho_n), -xi]] with branches
E = +-sqrt(xi^2 + rho_n); level 0 carries the single chiral branch
E_0(xi) = -xi.  At fixed energy E the crossings define the channel
wavenumbers xi_m = eps_m (E^2 - rho_n)^(1/2) (imaginary for closed levels,
with (-1)^(1/2) = i), the group-velocity currents J_m = xi_m / E (J_0 = -1),
and the transverse spinors

    phi_m = c_n (sqrt(rho_n) mu_n, (E - xi_m) nu_n),   c_n^-2 = rho_n + |E - xi_m|^2,

which are unit-norm but not mutually orthogonal within a level.  Every spinor
built here is residual-verified against the quadrature-sampled ladder action
rather than trusted from the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BasisTooSmall, NumericsError, TooCloseToCritical
from .transverse import TransverseBasis

__all__ = ["Channel", "ChannelSet", "critical_set", "channels_at", "gram_matrix"]

PROPAGATING = "propagating"
EVANESCENT = "evanescent"

DEFAULT_GUARD = 1e-3
DEFAULT_N_EVANESCENT = 8


@dataclass(frozen=True)
class Channel:
    """One generalized plane-wave channel e^{i xi x} phi(y) at fixed energy."""

    level: int
    branch_sign: int
    xi: complex
    current: float
    coef_mu: complex
    coef_nu: complex
    kind: str

    @property
    def propagating(self) -> bool:
        return self.kind == PROPAGATING


@dataclass(frozen=True)
class ChannelSet:
    """All channels retained at one energy.

    ``propagating`` is ordered with the positive-current block first and
    levels ascending inside each block; this ordering defines the rows and
    columns of every scattering matrix built downstream.  ``evanescent``
    holds one channel per closed level (xi on the upper imaginary axis,
    i.e. decaying toward x -> +inf; the mirrored sign is implied for the
    other end), ordered by |Im xi| ascending.
    """

    energy: float
    basis: TransverseBasis
    propagating: tuple
    evanescent: tuple
    n_plus: int
    n_minus: int
    guard: float

    @property
    def M(self) -> int:
        return self.n_plus + self.n_minus

    def spinor_values(self, ch: Channel) -> np.ndarray:
        """Sampled spinor components (2, quad points) for quadrature work."""
        return np.stack([ch.coef_mu * self.basis.mu[ch.level],
                         ch.coef_nu * self.basis.nu[ch.level]])


def critical_set(basis: TransverseBasis, e_max: float) -> np.ndarray:
    """Band-edge energies +-sqrt(rho_n) with rho_n <= e_max^2, ascending."""
    if e_max <= 0:
        raise ValueError("e_max must be positive")
    roots = np.sqrt(basis.rho[basis.rho <= e_max * e_max])
    return np.unique(np.concatenate([-roots, roots]) + 0.0)


def _min_critical_distance(basis: TransverseBasis, energy: float) -> float:
    roots = np.sqrt(basis.rho)
    return float(min(np.min(np.abs(energy - roots)), np.min(np.abs(energy + roots))))


def _channel(basis, energy, level, sign, tol_channel):
    rho = basis.rho[level]
    if level == 0:
        xi, current = complex(-energy), -1.0
        a, b = 0.0 + 0.0j, 1.0 + 0.0j
        kind = PROPAGATING
    else:
        gap = energy * energy - rho
        if gap > 0.0:
            xi = complex(sign * np.sqrt(gap))
            current = float(xi.real / energy)
            kind = PROPAGATING
        else:
            xi = 1j * sign * np.sqrt(-gap)
            current = 0.0
            kind = EVANESCENT
        norm = np.sqrt(rho + abs(energy - xi) ** 2)
        a, b = np.sqrt(rho) / norm, (energy - xi) / norm

    ch = Channel(level=level, branch_sign=sign, xi=xi, current=current,
                 coef_mu=a, coef_nu=b, kind=kind)
    res = _eigen_residual(basis, energy, ch)
    if res > tol_channel:
        raise NumericsError(
            f"channel (level {level}, sign {sign:+d}) eigen-residual "
            f"{res:.3e} exceeds {tol_channel:.1e}")
    return ch


def _eigen_residual(basis: TransverseBasis, energy: float, ch: Channel) -> float:
    """Quadrature norm of (Hhat(xi) - E) phi using the sampled ladder actions."""
    n = ch.level
    r_mu = (ch.xi - energy) * ch.coef_mu * basis.mu[n] + ch.coef_nu * basis.a_nu[n]
    r_nu = ch.coef_mu * basis.astar_mu[n] - (ch.xi + energy) * ch.coef_nu * basis.nu[n]
    w = basis.weights
    return float(np.sqrt(np.sum(w * (np.abs(r_mu) ** 2 + np.abs(r_nu) ** 2)).real))


def channels_at(basis: TransverseBasis, energy: float,
                n_evanescent: int = DEFAULT_N_EVANESCENT,
                guard: float = DEFAULT_GUARD,
                tol_channel: float = 1e-8) -> ChannelSet:
    """Enumerate channels at one energy.

    Raises TooCloseToCritical if the energy sits within ``guard`` of a
    band edge (currents vanish there and flux normalization degenerates),
    and BasisTooSmall if the basis cannot certify all open levels.
    """
    if n_evanescent < 0:
        raise ValueError("n_evanescent must be >= 0")
    # spinors are verified against the sampled ladder action; for general
    # walls the achievable residual is set by the basis itself
    tol_channel = max(tol_channel, 10.0 * basis.ladder_defect)
    dist = _min_critical_distance(basis, energy)
    if dist < guard:
        raise TooCloseToCritical(
            f"E={energy} is {dist:.2e} from the critical set (guard {guard:.1e})")
    if energy * energy >= basis.rho[-1]:
        raise BasisTooSmall(
            f"E^2={energy*energy:.3f} reaches rho_max={basis.rho[-1]:.3f}; "
            "increase n_max")

    open_levels = [n for n in range(1, basis.n_max + 1)
                   if basis.rho[n] < energy * energy]
    closed_levels = [n for n in range(1, basis.n_max + 1)
                     if basis.rho[n] > energy * energy]

    prop = [_channel(basis, energy, 0, -1, tol_channel)]
    for n in open_levels:
        prop.append(_channel(basis, energy, n, +1, tol_channel))
        prop.append(_channel(basis, energy, n, -1, tol_channel))

    plus = sorted((c for c in prop if c.current > 0), key=lambda c: c.level)
    minus = sorted((c for c in prop if c.current < 0), key=lambda c: c.level)

    evan = [_channel(basis, energy, n, +1, tol_channel)
            for n in closed_levels[:n_evanescent]]
    evan.sort(key=lambda c: abs(c.xi.imag))

    return ChannelSet(energy=float(energy), basis=basis,
                      propagating=tuple(plus + minus), evanescent=tuple(evan),
                      n_plus=len(plus), n_minus=len(minus), guard=guard)


def gram_matrix(channel_set: ChannelSet) -> np.ndarray:
    """Hermitian matrix of spinor inner products over the propagating block.

    Entries vanish between different levels; within a level the two
    crossings overlap with modulus sqrt(rho_n)/|E| (checked residually, not
    taken from any closed form), which approaches 1 near a band edge --
    the guard keeps the matrix well-conditioned.
    """
    chans = channel_set.propagating
    if not chans:
        raise ValueError("channel set has no propagating channels")
    w = channel_set.basis.weights
    vals = [channel_set.spinor_values(c) for c in chans]
    m = len(chans)
    g = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(i, m):
            g[i, j] = np.sum(w * (vals[i][0] * np.conj(vals[j][0])
                                  + vals[i][1] * np.conj(vals[j][1])))
            g[j, i] = np.conj(g[i, j])
    return g
