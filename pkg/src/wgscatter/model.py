"""System models: static Hamiltonian, windowed drive and waveguide couplings.

All models live in the frame rotating with the bare transition frequencies,
so a TLS has zero static Hamiltonian and the pair source has no free
evolution besides loss.  The ground state (basis index 0 by convention) has
zero energy, which makes it stationary once the drive is off.
"""
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from . import hilbert

DRIVE_KINDS = ("square", "gaussian", "custom")


@dataclass(frozen=True)
class WaveguideCoupling:
    operator: np.ndarray
    rate: float

    def __post_init__(self):
        if not self.rate >= 0:
            raise ValueError(f"coupling rate must be >= 0, got {self.rate!r}")
        object.__setattr__(self, "operator", hilbert.as_operator(self.operator))
        object.__setattr__(self, "rate", float(self.rate))


@dataclass(frozen=True)
class DriveSpec:
    """Real drive envelope f(t), zero outside the window [start, t_pulse].

    square:   f = amplitude on [0, t_pulse)
    gaussian: f = amplitude * exp(-(t - center)^2 / 2 width^2) on [0, t_pulse]
    custom:   piecewise-linear interpolation of (sample_times, sample_values)
    """
    kind: str
    amplitude: float = 0.0
    t_pulse: float = 0.0
    center: float = 0.0
    width: float = 1.0
    sample_times: tuple = ()
    sample_values: tuple = ()

    def __post_init__(self):
        if self.kind not in DRIVE_KINDS:
            raise ValueError(f"unknown drive kind {self.kind!r}")
        if not self.t_pulse >= 0:
            raise ValueError(f"t_pulse must be >= 0, got {self.t_pulse!r}")
        if self.kind == "gaussian" and not self.width > 0:
            raise ValueError(f"gaussian width must be > 0, got {self.width!r}")
        if self.kind == "custom":
            ts = np.asarray(self.sample_times, dtype=float)
            vs = np.asarray(self.sample_values, dtype=float)
            if ts.ndim != 1 or ts.shape != vs.shape or ts.size < 2:
                raise ValueError("custom drive needs matching 1-d sample tables of length >= 2")
            if ts[0] < 0 or np.any(np.diff(ts) <= 0):
                raise ValueError("custom sample times must be >= 0 and strictly increasing")
            object.__setattr__(self, "sample_times", tuple(ts.tolist()))
            object.__setattr__(self, "sample_values", tuple(vs.tolist()))
            object.__setattr__(self, "t_pulse", float(ts[-1]))

    @property
    def window(self):
        start = self.sample_times[0] if self.kind == "custom" else 0.0
        return start, self.t_pulse

    @property
    def piecewise_constant(self):
        return self.kind == "square"

    @property
    def breakpoints(self):
        """Times where the envelope may be non-smooth."""
        if self.kind == "custom":
            return self.sample_times
        return self.window

    def envelope(self, t):
        t = np.asarray(t, dtype=float)
        start, stop = self.window
        if self.kind == "square":
            out = np.where((t >= start) & (t < stop), self.amplitude, 0.0)
        elif self.kind == "gaussian":
            inside = (t >= start) & (t <= stop)
            g = self.amplitude * np.exp(-((t - self.center) ** 2) / (2 * self.width ** 2))
            out = np.where(inside, g, 0.0)
        else:
            inside = (t >= start) & (t <= stop)
            out = np.where(inside, np.interp(t, self.sample_times, self.sample_values), 0.0)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class SystemModel:
    h0: np.ndarray
    drive_operator: np.ndarray
    drive: DriveSpec
    couplings: tuple
    initial_state: np.ndarray
    ground_index: int = 0
    kind: str = "generic"
    params: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    def __post_init__(self):
        h0 = hilbert.as_operator(self.h0)
        dim = h0.shape[0]
        d_op = hilbert.as_operator(self.drive_operator, dim)
        if not hilbert.is_hermitian(h0):
            raise ValueError("static Hamiltonian must be Hermitian")
        if not hilbert.is_hermitian(d_op):
            raise ValueError("drive operator must be Hermitian")
        couplings = tuple(self.couplings)
        for c in couplings:
            if c.operator.shape != (dim, dim):
                raise ValueError("coupling operator dimension does not match the model")
        if not 0 <= self.ground_index < dim:
            raise ValueError("ground_index outside the Hilbert space")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "drive_operator", d_op)
        object.__setattr__(self, "couplings", couplings)
        object.__setattr__(self, "initial_state", hilbert.as_state(self.initial_state, dim))
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        damping = np.zeros((dim, dim), dtype=complex)
        for c in couplings:
            damping += 0.5 * c.rate * (c.operator.conj().T @ c.operator)
        object.__setattr__(self, "_h_static", hilbert.as_operator(h0 - 1j * damping))
        jumps = np.array([np.sqrt(c.rate) * c.operator for c in couplings], dtype=complex)
        jumps = jumps.reshape(len(couplings), dim, dim)
        jumps.flags.writeable = False
        object.__setattr__(self, "_jumps", jumps)

    @property
    def dim(self):
        return self.h0.shape[0]

    @property
    def n_channels(self):
        return len(self.couplings)

    @property
    def t_pulse(self):
        return self.drive.t_pulse

    @property
    def h_static(self):
        """H0 - i sum_i gamma_i/2 a_i^dag a_i, the drive-free part of H_eff."""
        return self._h_static

    @property
    def jump_operators(self):
        """Array of sqrt(gamma_i) a_i, shape (n_channels, dim, dim)."""
        return self._jumps

    @property
    def rates(self):
        return np.array([c.rate for c in self.couplings])

    def drive_term(self, t):
        return self.drive.envelope(t) * self.drive_operator

    def h_eff(self, t):
        return self._h_static + self.drive.envelope(t) * self.drive_operator


def h_eff(model, t):
    return model.h_eff(t)


def build_tls(gamma, omega_rabi, t_pulse, initial="ground"):
    """Two-level system driven by a square pulse i*Omega*(sig^dag - sig) on [0, t_pulse)."""
    if not gamma >= 0:
        raise ValueError(f"gamma must be >= 0, got {gamma!r}")
    if not t_pulse >= 0:
        raise ValueError(f"t_pulse must be >= 0, got {t_pulse!r}")
    if initial not in ("ground", "excited"):
        raise ValueError(f"initial must be 'ground' or 'excited', got {initial!r}")
    sm = hilbert.destroy(1)
    drive = DriveSpec("square", amplitude=float(omega_rabi), t_pulse=float(t_pulse))
    return SystemModel(
        h0=np.zeros((2, 2)),
        drive_operator=1j * (sm.conj().T - sm),
        drive=drive,
        couplings=(WaveguideCoupling(sm, gamma),),
        initial_state=hilbert.basis(2, 0 if initial == "ground" else 1),
        kind="tls",
        params={"gamma": float(gamma), "omega_rabi": float(omega_rabi),
                "t_pulse": float(t_pulse), "initial": initial},
    )


def build_pair_source(g0, t0, sigma, gamma1, gamma2, n_max, k=5.0):
    """Two lossy modes pumped by a Gaussian pair-creation drive g(t)(a1 a2 + h.c.).

    The Gaussian is cut at t0 + k*sigma, which sets the drive horizon.
    Basis index of |n1, n2> is n1*(n_max+1) + n2.
    """
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"n_max must be an integer >= 1, got {n_max!r}")
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma!r}")
    if not k > 0:
        raise ValueError(f"k must be > 0, got {k!r}")
    n_max = int(n_max)
    a = hilbert.destroy(n_max)
    eye = hilbert.identity(n_max + 1)
    a1 = hilbert.tensor(a, eye)
    a2 = hilbert.tensor(eye, a)
    pair = a1 @ a2
    t_pulse = float(t0 + k * sigma)
    if t_pulse < 0:
        raise ValueError("t0 + k*sigma must be >= 0")
    drive = DriveSpec("gaussian", amplitude=float(g0), t_pulse=t_pulse,
                      center=float(t0), width=float(sigma))
    dim = (n_max + 1) ** 2
    return SystemModel(
        h0=np.zeros((dim, dim)),
        drive_operator=pair + pair.conj().T,
        drive=drive,
        couplings=(WaveguideCoupling(a1, gamma1), WaveguideCoupling(a2, gamma2)),
        initial_state=hilbert.basis(dim, 0),
        kind="pair",
        params={"g0": float(g0), "t0": float(t0), "sigma": float(sigma),
                "gamma1": float(gamma1), "gamma2": float(gamma2),
                "n_max": n_max, "k": float(k)},
    )


def build_custom(h0, drive_operator, sample_times, sample_values, couplings, initial_state):
    """Model with a piecewise-linear drive envelope given by a sample table."""
    drive = DriveSpec("custom", sample_times=tuple(sample_times),
                      sample_values=tuple(sample_values))
    return SystemModel(h0=h0, drive_operator=drive_operator, drive=drive,
                       couplings=tuple(couplings), initial_state=initial_state)
