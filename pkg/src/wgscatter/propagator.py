"""No-jump propagators U_eff(t2, t1) on a uniform time grid.

Each bin [k dt, (k+1) dt) is stored as two half-bin factors so that jumps can
be placed on bin midpoints; the full step is their product.  Pieces of the
time axis on which the generator is constant are propagated with an exact
matrix exponential, smooth pieces with classic fixed-step RK4.  Interval
products come from a binary product tree built on first use.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .model import SystemModel

DEFAULT_SUBSTEPS = 16


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    n_bins: int
    dt_requested: float = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt!r}")
        if int(self.n_bins) != self.n_bins or self.n_bins < 1:
            raise ValueError(f"n_bins must be a positive integer, got {self.n_bins!r}")
        object.__setattr__(self, "n_bins", int(self.n_bins))
        object.__setattr__(self, "dt", float(self.dt))
        if self.dt_requested is None:
            object.__setattr__(self, "dt_requested", self.dt)

    @classmethod
    def for_pulse(cls, t_pulse, dt, horizon):
        """Grid covering [0, horizon] with dt adjusted so t_pulse falls on an edge."""
        if not horizon >= t_pulse:
            raise ValueError(f"horizon {horizon!r} is shorter than the pulse {t_pulse!r}")
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt!r}")
        snapped = dt
        if t_pulse > 0:
            snapped = t_pulse / max(1, round(t_pulse / dt))
        n_bins = max(1, math.ceil(horizon / snapped - 1e-9))
        return cls(snapped, n_bins, dt_requested=float(dt))

    @property
    def t_end(self):
        return self.dt * self.n_bins

    @property
    def snap_error(self):
        return abs(self.dt - self.dt_requested)

    def edges(self):
        return self.dt * np.arange(self.n_bins + 1)

    def midpoints(self):
        return self.dt * (np.arange(self.n_bins) + 0.5)

    def bin_of(self, t):
        """Index of the bin containing time t (the last bin owns t_end)."""
        t = float(t)
        if t < 0 or t > self.t_end * (1 + 1e-12):
            raise ValueError(f"time {t!r} outside the grid [0, {self.t_end}]")
        return min(int(math.floor(t / self.dt)), self.n_bins - 1)

    def edge_of(self, t):
        """Nearest bin edge to time t."""
        t = float(t)
        if t < 0 or t > self.t_end * (1 + 1e-12):
            raise ValueError(f"time {t!r} outside the grid [0, {self.t_end}]")
        return min(int(round(t / self.dt)), self.n_bins)


class _Flow:
    """Linear ODE x' = (G0 + f(t) G1) x with f a drive envelope."""

    def __init__(self, g_static, g_drive, drive):
        self.g0 = np.asarray(g_static, dtype=complex)
        self.g1 = np.asarray(g_drive, dtype=complex)
        self.drive = drive
        self.dim = self.g0.shape[0]
        self._eye = np.eye(self.dim, dtype=complex)
        self._expm_cache = {}

    @classmethod
    def for_model(cls, model):
        return cls(-1j * model.h_static, -1j * model.drive_operator, model.drive)

    def pieces(self, a, b):
        """Split [a, b] at the drive breakpoints."""
        cuts = [t for t in self.drive.breakpoints if a < t < b]
        # merge cuts closer than rounding noise to the ends
        cuts = [t for t in cuts if min(t - a, b - t) > 1e-12 * max(1.0, abs(b))]
        pts = [a] + sorted(set(cuts)) + [b]
        return list(zip(pts[:-1], pts[1:]))

    def constant_level(self, lo, hi):
        """Envelope value if it is constant on the open piece (lo, hi), else None."""
        start, stop = self.drive.window
        mid = 0.5 * (lo + hi)
        if hi <= start or lo >= stop or self.drive.amplitude == 0 and self.drive.kind != "custom":
            return 0.0
        if self.drive.piecewise_constant:
            return float(self.drive.envelope(mid))
        return None

    def _smooth_envelope(self, t):
        d = self.drive
        if d.kind == "gaussian":
            return d.amplitude * np.exp(-((t - d.center) ** 2) / (2 * d.width ** 2))
        if d.kind == "custom":
            return np.interp(t, d.sample_times, d.sample_values)
        return np.full_like(t, d.amplitude)

    def exact(self, level, length):
        key = (level, length)
        out = self._expm_cache.get(key)
        if out is None:
            out = expm((self.g0 + level * self.g1) * length)
            self._expm_cache[key] = out
        return out

    def rk4(self, starts, h, n_steps, level=None):
        """RK4 propagators over [s, s + n_steps*h] for each start s, shape (n, D, D).

        If level is given the envelope is held at that constant value.
        """
        starts = np.atleast_1d(np.asarray(starts, dtype=float))
        n = starts.size
        out = np.broadcast_to(self._eye, (n, self.dim, self.dim)).copy()
        eye = self._eye
        if level is None:
            env = self._smooth_envelope
        else:
            env = lambda t: np.full_like(t, level)
        for j in range(n_steps):
            t = starts + j * h
            a1 = self.g0 + env(t)[:, None, None] * self.g1
            a2 = self.g0 + env(t + 0.5 * h)[:, None, None] * self.g1
            a3 = self.g0 + env(t + h)[:, None, None] * self.g1
            k1 = a1
            k2 = a2 @ (eye + 0.5 * h * k1)
            k3 = a2 @ (eye + 0.5 * h * k2)
            k4 = a3 @ (eye + h * k3)
            step = eye + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            out = step @ out
        return out

    def rk4_apply(self, starts, h, n_steps, x):
        """Advance vectors x (n, D) over [s, s + n_steps*h] with per-row starts s."""
        x = np.array(x, dtype=complex)
        starts = np.asarray(starts, dtype=float)
        g0t = self.g0.T
        g1t = self.g1.T
        for j in range(n_steps):
            t = starts + j * h
            f1 = self._smooth_envelope(t)[:, None]
            f2 = self._smooth_envelope(t + 0.5 * h)[:, None]
            f3 = self._smooth_envelope(t + h)[:, None]
            k1 = x @ g0t + f1 * (x @ g1t)
            y = x + 0.5 * h * k1
            k2 = y @ g0t + f2 * (y @ g1t)
            y = x + 0.5 * h * k2
            k3 = y @ g0t + f2 * (y @ g1t)
            y = x + h * k3
            k4 = y @ g0t + f3 * (y @ g1t)
            x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return x

    def interval(self, a, b, h_nominal):
        """Propagator over [a, b]; smooth pieces use RK4 with step close to h_nominal."""
        out = self._eye.copy()
        for lo, hi in self.pieces(a, b):
            level = self.constant_level(lo, hi)
            if level is not None:
                out = self.exact(level, hi - lo) @ out
            else:
                n = max(1, int(round((hi - lo) / h_nominal)))
                out = self.rk4([lo], (hi - lo) / n, n)[0] @ out
        return out


def _half_bin_steps(flow, grid, substeps, method="auto"):
    """Propagators over every half bin, deduplicated.

    Returns (unique matrices, index of each half bin); half bin 2k is the
    first half of bin k.  Each half bin gets substeps/2 RK4 steps unless the
    generator is constant on it, in which case the exact exponential is used
    (method 'auto') or RK4 at the constant level (method 'rk4').
    """
    half = 0.5 * grid.dt
    n_half = substeps // 2
    h = grid.dt / substeps
    starts = half * np.arange(2 * grid.n_bins)
    keys = []
    smooth = []
    for i, s in enumerate(starts):
        pieces = flow.pieces(s, s + half)
        if len(pieces) > 1:
            keys.append(("split", i))
            continue
        level = flow.constant_level(s, s + half)
        if level is None:
            keys.append(("rk4", i))
            smooth.append(i)
        elif method == "auto" or level == 0.0:
            keys.append(("exp", level))
        else:
            keys.append(("rk4c", level))
    mats = {}
    if smooth:
        for i, m in zip(smooth, flow.rk4(starts[smooth], h, n_half)):
            mats[("rk4", i)] = m
    for key in keys:
        if key in mats:
            continue
        kind, val = key
        if kind == "exp":
            mats[key] = flow.exact(val, half)
        elif kind == "rk4c":
            mats[key] = flow.rk4([0.0], h, n_half, level=val)[0]
        else:
            s = starts[val]
            out = np.eye(flow.dim, dtype=complex)
            for lo, hi in flow.pieces(s, s + half):
                level = flow.constant_level(lo, hi)
                if level is not None and (method == "auto" or level == 0.0):
                    out = flow.exact(level, hi - lo) @ out
                else:
                    n = max(1, math.ceil((hi - lo) / h - 1e-9))
                    out = flow.rk4([lo], (hi - lo) / n, n, level=level)[0] @ out
            mats[key] = out
    order = {}
    uniq = []
    idx = np.empty(len(keys), dtype=np.intp)
    for i, key in enumerate(keys):
        j = order.get(key)
        if j is None:
            j = order[key] = len(uniq)
            uniq.append(mats[key])
        idx[i] = j
    return np.array(uniq), idx


def evolve_state(model, psi, t0, t1, substeps=DEFAULT_SUBSTEPS):
    """Solve i d/dt psi = H_eff(t) psi from t0 to t1.

    Constant stretches of H_eff use exact exponentials; smooth stretches use
    RK4 with step (t1 - t0)/substeps.  psi may be a vector or a matrix whose
    columns are propagated together.
    """
    if not t1 >= t0:
        raise ValueError(f"t1 must be >= t0, got t0={t0!r}, t1={t1!r}")
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps!r}")
    psi = np.asarray(psi, dtype=complex)
    if t1 == t0:
        return psi.copy()
    flow = _Flow.for_model(model)
    return flow.interval(t0, t1, (t1 - t0) / substeps) @ psi


class PropagatorGrid:
    """Per-bin half-step propagators of a model on a TimeGrid.

    Unique matrices are stored once; bins that share a generator (e.g. every
    bin after the drive ends) share storage through index arrays.
    """

    def __init__(self, model, grid, substeps=DEFAULT_SUBSTEPS, method="auto"):
        if method not in ("auto", "rk4"):
            raise ValueError(f"method must be 'auto' or 'rk4', got {method!r}")
        if substeps < 1:
            raise ValueError(f"substeps must be >= 1, got {substeps!r}")
        self.model = model
        self.grid = grid
        self.method = method
        self.substeps = int(substeps) + (int(substeps) % 2)
        self._build(_Flow.for_model(model))
        self._tree = None

    def _build(self, flow):
        halves, idx = _half_bin_steps(flow, self.grid, self.substeps, self.method)
        i1 = idx[0::2]
        i2 = idx[1::2]
        pair_order = {}
        full = []
        ifull = np.empty(self.grid.n_bins, dtype=np.intp)
        for k, pair in enumerate(zip(i1.tolist(), i2.tolist())):
            j = pair_order.get(pair)
            if j is None:
                j = pair_order[pair] = len(full)
                full.append(halves[pair[1]] @ halves[pair[0]])
            ifull[k] = j
        self._halves = halves
        self._i1 = np.ascontiguousarray(i1)
        self._i2 = np.ascontiguousarray(i2)
        self._full = np.array(full)
        self._ifull = ifull
        for arr in (self._halves, self._full, self._i1, self._i2, self._ifull):
            arr.flags.writeable = False

    @property
    def dim(self):
        return self.model.dim

    @property
    def n_bins(self):
        return self.grid.n_bins

    def step(self, k):
        """U_eff over bin k."""
        return self._full[self._ifull[k]]

    def half_first(self, k):
        """U_eff from the start of bin k to its midpoint."""
        return self._halves[self._i1[k]]

    def half_second(self, k):
        """U_eff from the midpoint of bin k to its end."""
        return self._halves[self._i2[k]]

    @property
    def steps(self):
        return self._full[self._ifull]

    def unique_steps(self):
        """(unique full-step matrices, bin -> index)."""
        return self._full, self._ifull

    def unique_halves(self):
        """(unique half-step matrices, first-half index, second-half index)."""
        return self._halves, self._i1, self._i2

    def _build_tree(self):
        n = self.grid.n_bins
        size = 1
        while size < n:
            size *= 2
        d = self.dim
        levels = []
        level = np.empty((size, d, d), dtype=complex)
        level[:n] = self._full[self._ifull]
        level[n:] = np.eye(d)
        while level.shape[0] > 1:
            level = level[1::2] @ level[0::2]
            levels.append(level)
        self._tree = levels

    def _node(self, lvl, i):
        if lvl == 0:
            return self._full[self._ifull[i]]
        return self._tree[lvl - 1][i]

    def query(self, k_to, k_from):
        """Ordered product U_eff[k_to, k_from] of the steps of bins k_from .. k_to-1."""
        if not 0 <= k_from <= k_to <= self.grid.n_bins:
            raise ValueError(f"invalid bin interval [{k_from}, {k_to})")
        d = self.dim
        if k_to == k_from:
            return np.eye(d, dtype=complex)
        if k_to - k_from == 1:
            return self.step(k_from).copy()
        if self._tree is None:
            self._build_tree()
        left = np.eye(d, dtype=complex)
        right = np.eye(d, dtype=complex)
        lo, hi, lvl = k_from, k_to, 0
        while lo < hi:
            if lo & 1:
                left = self._node(lvl, lo) @ left
                lo += 1
            if hi & 1:
                hi -= 1
                right = right @ self._node(lvl, hi)
            lo >>= 1
            hi >>= 1
            lvl += 1
        return right @ left


def build_grid(model, grid, substeps=DEFAULT_SUBSTEPS, method="auto"):
    return PropagatorGrid(model, grid, substeps=substeps, method=method)


def interval_propagator(gridp, k_from, k_to):
    if k_to < k_from:
        raise ValueError(f"reversed interval: k_from={k_from} > k_to={k_to}")
    return gridp.query(k_to, k_from)


@dataclass(frozen=True)
class AlphaCoefficients:
    """Coefficients of the Heisenberg-like pair operators

        a1~(t) = a11(t) a1 + a12(t) a2^dag
        a2~(t) = a21(t) a1^dag + a22(t) a2

    sampled on the half grid t = j*dt/2, j = 0 .. 2B (even j: bin edges,
    odd j: bin midpoints).
    """
    grid: TimeGrid
    times: np.ndarray
    a11: np.ndarray
    a12: np.ndarray
    a21: np.ndarray
    a22: np.ndarray

    def at_midpoints(self):
        s = slice(1, None, 2)
        return self.a11[s], self.a12[s], self.a21[s], self.a22[s]


def alpha_coefficients(model, grid, substeps=DEFAULT_SUBSTEPS):
    """Integrate the 4x4 linear system for (a1~, a2~, a1~^dag, a2~^dag)."""
    if model.kind != "pair":
        raise ValueError("alpha coefficients are defined for pair-source models only")
    g1 = model.params["gamma1"]
    g2 = model.params["gamma2"]
    static = np.diag([-g1 / 2, -g2 / 2, g1 / 2, g2 / 2]).astype(complex)
    drive = np.array([[0, 0, 0, -1j],
                      [0, 0, -1j, 0],
                      [0, 1j, 0, 0],
                      [1j, 0, 0, 0]], dtype=complex)
    flow = _Flow(static, drive, model.drive)
    substeps = int(substeps) + (int(substeps) % 2)
    halves, idx = _half_bin_steps(flow, grid, substeps)
    phi = np.empty((idx.size + 1, 4, 4), dtype=complex)
    phi[0] = np.eye(4)
    for j, u in enumerate(idx):
        phi[j + 1] = halves[u] @ phi[j]
    half = 0.5 * grid.dt
    n_half = idx.size
    # rows give the operators at time t in terms of (a1, a2, a1^dag, a2^dag)
    times = half * np.arange(n_half + 1)
    out = []
    for arr in (phi[:, 0, 0], phi[:, 0, 3], phi[:, 1, 2], phi[:, 1, 1]):
        arr = np.array(arr)
        arr.flags.writeable = False
        out.append(arr)
    times.flags.writeable = False
    return AlphaCoefficients(grid, times, *out)
