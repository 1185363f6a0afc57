"""Closed forms for a two-level system driven by a square pulse.

Rotating frame throughout: the phase e^{-i w0 tau_m} of the amplitudes is
dropped.  Omega' = sqrt(Omega^2 - (gamma/4)^2) is taken as the principal
complex root so the under- and over-damped regimes share one code path.
"""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TlsParams:
    gamma: float
    omega: float
    t_pulse: float

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma!r}")
        if not self.t_pulse >= 0:
            raise ValueError(f"t_pulse must be >= 0, got {self.t_pulse!r}")

    @classmethod
    def from_area(cls, gamma, area, t_pulse):
        if not t_pulse > 0:
            raise ValueError("a pulse area needs t_pulse > 0")
        return cls(gamma, area / (2 * t_pulse), t_pulse)

    @property
    def omega_prime(self):
        return np.sqrt(complex(self.omega ** 2 - (self.gamma / 4) ** 2))

    @property
    def area(self):
        return 2 * self.omega * self.t_pulse


def _sin_over(w, x):
    """sin(w x)/w, continuous through w = 0."""
    x = np.asarray(x, dtype=complex)
    if abs(w) < 1e-7:
        return x * (1 - (w * x) ** 2 / 6)
    return np.sin(w * x) / w


def _rabi(p, x):
    # (Omega/Omega') sin(Omega' x): excited amplitude after time x from |0>
    return p.omega * _sin_over(p.omega_prime, x)


def _ground_return(p, x):
    # cos(Omega' x) + (gamma/4) sin(Omega' x)/Omega'
    return np.cos(p.omega_prime * np.asarray(x, dtype=complex)) + (p.gamma / 4) * _sin_over(p.omega_prime, x)


def tls_amplitude(params, taus):
    """Scattering amplitude for emission times taus (one record).

    Vectorized: taus may have shape (m,) or (n, m) for n records of m photons.
    """
    p = params
    taus = np.asarray(taus, dtype=float)
    single = taus.ndim == 1
    taus = np.atleast_2d(taus)
    n, m = taus.shape
    T = p.t_pulse
    g = p.gamma
    base = np.exp(-g * T / 4) * np.ones(n, dtype=complex)
    if m == 0:
        out = base * _ground_return(p, T)
        return complex(out[0]) if single else out
    prev = np.concatenate([np.zeros((n, 1)), taus[:, :-1]], axis=1)
    gaps = taus - prev
    pref = g ** (m / 2) * base
    inner = np.prod(_rabi(p, gaps[:, :-1]), axis=1) if m > 1 else np.ones(n, dtype=complex)
    last = taus[:, -1]
    before_last = prev[:, -1]
    in_pulse = last < T
    straddle = (~in_pulse) & (before_last < T)
    out = np.zeros(n, dtype=complex)
    if np.any(in_pulse):
        s = in_pulse
        out[s] = pref[s] * inner[s] * _rabi(p, gaps[s, -1]) * _ground_return(p, T - last[s])
    if np.any(straddle):
        s = straddle
        out[s] = (pref[s] * inner[s] * np.exp(-g * (last[s] - T) / 2)
                  * _rabi(p, T - before_last[s]))
    return complex(out[0]) if single else out


def tls_p0_exact(params):
    """Exact vacuum probability e^{-gamma T/2} |cos(W'T) + (gamma/4) sin(W'T)/W'|^2."""
    p = params
    return float(np.exp(-p.gamma * p.t_pulse / 2) * abs(_ground_return(p, p.t_pulse)) ** 2)


def tls_pm_closed(params, m):
    """First-order-in-(gamma T_P) photocount probabilities P_0, P_1, P_2."""
    if m not in (0, 1, 2):
        raise ValueError(f"closed forms exist for m in {{0, 1, 2}}, got {m!r}")
    A = params.area
    x = params.gamma * params.t_pulse
    decay = np.exp(-x / 2)
    sinc_a = np.sinc(A / np.pi)          # sin(A)/A
    sinc_half = 0.5 * np.sinc(A / (2 * np.pi))  # sin(A/2)/A
    if m == 0:
        return float(decay * (np.cos(A / 2) + (x / 2) * sinc_half) ** 2)
    if m == 1:
        return float(0.5 * decay * (1 - np.cos(A) + (x / 2) * (1 - np.cos(A) / 2 - sinc_a / 2)))
    return float((x / 8) * decay * (2 + np.cos(A) - 3 * sinc_a))


def spont_amplitude(gamma, tau):
    """Spontaneous-emission amplitude sqrt(gamma) exp(-gamma tau/2)."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be >= 0")
    out = np.sqrt(gamma) * np.exp(-gamma * tau / 2)
    return out if out.ndim else float(out)
