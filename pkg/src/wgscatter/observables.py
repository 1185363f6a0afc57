"""Detector-facing quantities derived from a ScatteredState.

Densities (flux, G2) are reported at bin midpoints; integrating them with
the state's quadrature weights reproduces the photocount moments exactly.
"""
from dataclasses import dataclass

import numpy as np


class UndefinedValueError(ValueError):
    """Raised when an observable is mathematically undefined for the input."""


@dataclass(frozen=True)
class SchmidtSpectrum:
    lambdas: np.ndarray
    schmidt_number: float


def _selected_columns(sector, channels):
    cols = sector.channel_columns()
    if channels is None:
        return np.arange(cols.size)
    return np.flatnonzero(np.isin(cols, list(channels)))


def flux_trace(state, channels=None):
    """Photon flux at every bin midpoint (sum over sectors of pinned marginals)."""
    B = state.grid.n_bins
    w = state.weights()
    dt = state.grid.dt
    out = np.zeros(B)
    for sector in state.sectors.values():
        if sector.n_photons == 0:
            continue
        p = state.probabilities(sector)
        for q in _selected_columns(sector, channels):
            b = sector.bins[:, q]
            out += np.bincount(b, weights=p / (w[b] * dt), minlength=B)
    return out


def flux(state, t, channels=None):
    return float(flux_trace(state, channels)[state.grid.bin_of(t)])


def integrate_trace(state, trace):
    """Quadrature integral of a per-bin density with the state's weights."""
    return float(np.sum(state.weights() * np.asarray(trace)) * state.grid.dt)


def g2_grid(state, max_sector=3, channels=None):
    """Unnormalized G2(t1, t2) on the midpoint grid, summed over sectors up to max_sector.

    Every unordered pair of photons is accumulated once into the upper
    triangle, and the result is that triangle plus its transpose, so the
    output is exactly symmetric.  Coincident bins only occur for photons in
    different waveguides and then receive both orderings.
    """
    B = state.grid.n_bins
    w = state.weights()
    dt = state.grid.dt
    upper = np.zeros(B * B)
    for sector in state.sectors.values():
        n = sector.n_photons
        if n < 2 or n > max_sector:
            continue
        p = state.probabilities(sector)
        cols = _selected_columns(sector, channels)
        for a_pos, qa in enumerate(cols):
            for qb in cols[a_pos + 1:]:
                ba = sector.bins[:, qa]
                bb = sector.bins[:, qb]
                lo = np.minimum(ba, bb)
                hi = np.maximum(ba, bb)
                val = p / (w[ba] * w[bb] * dt * dt)
                upper += np.bincount(lo * B + hi, weights=val, minlength=B * B)
    upper = upper.reshape(B, B)
    return upper + upper.T


def mean_photon_number(P):
    P = np.asarray(P, dtype=float)
    return float(np.dot(np.arange(P.size), P))


def g2_pulsewise(P):
    """Pulse-wise second-order coherence sum m(m-1)P_m / (sum m P_m)^2."""
    P = np.asarray(P, dtype=float)
    m = np.arange(P.size)
    mean = float(np.dot(m, P))
    if not mean > 0:
        raise UndefinedValueError("g2[0] is undefined for zero mean photon number")
    return float(np.dot(m * (m - 1), P) / mean / mean)


def purity(P):
    """Two-photon fraction P_2/(1 - P_0) of the non-vacuum output."""
    P = np.asarray(P, dtype=float)
    if P.size < 3:
        raise ValueError("purity needs probabilities up to two photons")
    if P[0] >= 1 - 1e-12:
        raise UndefinedValueError("purity is undefined when the output is pure vacuum")
    return float(P[2] / (1 - P[0]))


def schmidt(state):
    """Schmidt decomposition of the (1, 1) sector of a two-waveguide state."""
    if state.n_channels != 2:
        raise ValueError("Schmidt decomposition needs a two-waveguide state")
    sector = state.sectors.get((1, 1))
    B = state.grid.n_bins
    mat = np.zeros((B, B), dtype=complex)
    if sector is not None and sector.amps.size:
        if sector.amps.ndim != 1:
            raise ValueError("Schmidt decomposition needs an asymptotic (not system-resolved) state")
        w = state.weights()
        b1 = sector.bins[:, 0]
        b2 = sector.bins[:, 1]
        mat[b1, b2] = sector.amps * np.sqrt(w[b1] * w[b2]) * state.grid.dt
    s = np.linalg.svd(mat, compute_uv=False)
    lam = s ** 2
    total = lam.sum()
    if not total > 0:
        raise UndefinedValueError("the (1, 1) sector vanishes")
    lam = lam / total
    lam.flags.writeable = False
    return SchmidtSpectrum(lam, float(1.0 / np.sum(lam ** 2)))
