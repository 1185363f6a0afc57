"""Quantum-jump trajectories by waiting-time (norm-threshold) sampling.

Each trajectory evolves an unnormalized state under H_eff.  A jump fires
when the squared norm falls to a uniform threshold drawn after the previous
jump; the channel is chosen with probability proportional to
gamma_i <a_i^dag a_i>.  Crossings are located inside a bin by binary
lifting over dyadic sub-steps, which resolves the jump time to dt * 2^-40.

Trajectory i draws its uniforms from a Philox stream keyed by the master
seed with counter block i, so any trajectory can be regenerated alone and
the ensemble does not depend on processing order.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .propagator import DEFAULT_SUBSTEPS, PropagatorGrid, TimeGrid, _Flow
from .scattering import EmissionRecord

LIFT_BITS = 40
_BLOCK = 17


@dataclass(frozen=True)
class TrajectoryResult:
    record: EmissionRecord
    final_norm_check: float
    seed: int
    index: int = 0


@dataclass(frozen=True)
class PhotocountEstimate:
    probabilities: np.ndarray
    stderr: np.ndarray
    channel_counts: np.ndarray
    n_traj: int

    def grouped(self, n_max):
        """Probabilities for 0 .. n_max-1 photons plus the tail >= n_max."""
        P = self.probabilities
        out = np.zeros(n_max + 1)
        top = min(n_max, P.size)
        out[:top] = P[:top]
        out[n_max] = P[n_max:].sum()
        return out


def _stream(seed, index):
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, int(index), 0, 0]))


class _Uniforms:
    """Per-trajectory uniform sequences, drawn in blocks from independent streams."""

    def __init__(self, seed, indices):
        self.seed = int(seed)
        self.indices = np.asarray(indices)
        self.buf = np.array([_stream(seed, i).random(_BLOCK) for i in self.indices])
        self.buf = self.buf.reshape(len(self.indices), _BLOCK)
        self.ptr = np.zeros(len(self.indices), dtype=np.intp)

    def take(self, rows):
        rows = np.asarray(rows)
        full = rows[self.ptr[rows] >= self.buf.shape[1]]
        if full.size:
            width = 2 * self.buf.shape[1]
            grown = np.zeros((self.buf.shape[0], width))
            grown[:, :self.buf.shape[1]] = self.buf
            for r in range(self.buf.shape[0]):
                grown[r] = _stream(self.seed, self.indices[r]).random(width)
            self.buf = grown
        out = self.buf[rows, self.ptr[rows]]
        self.ptr[rows] += 1
        return out


class _Engine:
    def __init__(self, model, horizon, dt=None, substeps=DEFAULT_SUBSTEPS):
        if not horizon >= model.t_pulse:
            raise ValueError(f"horizon {horizon!r} must be >= the pulse length {model.t_pulse!r}")
        if dt is None:
            dt = min(0.01, horizon / 100) if horizon > 0 else 0.01
        self.model = model
        self.horizon = float(horizon)
        self.grid = TimeGrid.for_pulse(model.t_pulse, dt, max(horizon, dt))
        self.gridp = PropagatorGrid(model, self.grid, substeps=substeps)
        self.flow = _Flow.for_model(model)
        self.substeps = self.gridp.substeps
        self.jumps = np.asarray(model.jump_operators)
        self._lift_cache = {}
        self._levels = []
        for k in range(self.grid.n_bins):
            a, b = k * self.grid.dt, (k + 1) * self.grid.dt
            pieces = self.flow.pieces(a, b)
            self._levels.append(self.flow.constant_level(a, b) if len(pieces) == 1 else None)
        g = model.ground_index
        hs = np.asarray(model.h_static)
        self._ground_stationary = bool(np.all(hs[:, g] == 0))
        self._pulse_edge = int(round(model.t_pulse / self.grid.dt))

    def _lift_matrix(self, level, j):
        key = (level, j)
        out = self._lift_cache.get(key)
        if out is None:
            length = self.grid.dt / 2 ** j
            out = expm((self.flow.g0 + level * self.flow.g1) * length).T
            self._lift_cache[key] = out
        return out

    def _advance(self, k, pos, units, psi):
        """States advanced by `units` (a power of two) from offsets pos in bin k."""
        j = LIFT_BITS - int(units).bit_length() + 1
        level = self._levels[k]
        if level is not None:
            return psi @ self._lift_matrix(level, j)
        length = self.grid.dt / 2 ** j
        n = max(1, int(np.ceil(self.substeps / 2 ** j)))
        starts = k * self.grid.dt + pos * (self.grid.dt / 2 ** LIFT_BITS)
        return self.flow.rk4_apply(starts, length / n, n, psi)

    def run(self, seed, indices):
        n = len(indices)
        d = self.model.dim
        M = self.model.n_channels
        grid = self.grid
        uni = _Uniforms(seed, indices)
        psi = np.tile(np.asarray(self.model.initial_state, dtype=complex), (n, 1))
        thresh = uni.take(np.arange(n))
        active = np.ones(n, dtype=bool)
        if M == 0 or not np.any(self.model.rates > 0):
            active[:] = False
        ev_traj, ev_time, ev_chan = [], [], []
        full_units = 1 << LIFT_BITS
        unit = grid.dt / full_units
        g = self.model.ground_index
        others = np.ones(d, dtype=bool)
        others[g] = False
        jt = np.swapaxes(self.jumps, 1, 2)
        for k in range(grid.n_bins):
            idx = np.flatnonzero(active)
            if not idx.size:
                break
            step = self.gridp.step(k).T
            end = psi[idx] @ step
            norm_end = np.einsum("nd,nd->n", end.conj(), end).real
            cross = norm_end <= thresh[idx]
            psi[idx[~cross]] = end[~cross]
            rows = idx[cross]
            if rows.size:
                cur = psi[rows]
                pos = np.zeros(rows.size, dtype=np.int64)
                live = np.ones(rows.size, dtype=bool)
                while np.any(live):
                    li = np.flatnonzero(live)
                    for j in range(0, LIFT_BITS + 1):
                        units = full_units >> j
                        ok = li[pos[li] + units <= full_units]
                        if not ok.size:
                            continue
                        cand = self._advance(k, pos[ok], units, cur[ok])
                        nrm = np.einsum("nd,nd->n", cand.conj(), cand).real
                        up = nrm > thresh[rows[ok]]
                        sel = ok[up]
                        pos[sel] += units
                        cur[sel] = cand[up]
                    done = li[pos[li] == full_units]
                    live[done] = False
                    jumping = li[pos[li] < full_units]
                    if not jumping.size:
                        break
                    r = rows[jumping]
                    branch = np.einsum("nd,cde->nce", cur[jumping], jt)
                    weights = np.einsum("nce,nce->nc", branch.conj(), branch).real
                    total = weights.sum(axis=1)
                    u = uni.take(r)
                    cum = np.cumsum(weights, axis=1) / total[:, None]
                    chan = np.minimum((cum <= u[:, None]).sum(axis=1), M - 1)
                    new = branch[np.arange(jumping.size), chan]
                    new /= np.sqrt(weights[np.arange(jumping.size), chan])[:, None]
                    cur[jumping] = new
                    thresh[r] = uni.take(r)
                    ev_traj.append(r)
                    ev_time.append(k * grid.dt + pos[jumping] * unit)
                    ev_chan.append(chan)
                psi[rows] = cur
            if self._ground_stationary and k + 1 >= self._pulse_edge:
                settled = idx[~np.any(psi[idx][:, others] != 0, axis=1)]
                active[settled] = False
        norms = np.einsum("nd,nd->n", psi.conj(), psi).real
        if ev_traj:
            traj = np.concatenate(ev_traj)
            times = np.concatenate(ev_time)
            chans = np.concatenate(ev_chan)
            keep = times <= self.horizon
            traj, times, chans = traj[keep], times[keep], chans[keep]
            order = np.argsort(traj, kind="stable")
            traj, times, chans = traj[order], times[order], chans[order]
        else:
            traj = np.empty(0, np.intp)
            times = np.empty(0)
            chans = np.empty(0, np.intp)
        return traj, times, chans, norms


def sample_trajectory(model, horizon, seed, index=0, dt=None, substeps=DEFAULT_SUBSTEPS):
    """One jump record; stream `index` of the master seed."""
    engine = _Engine(model, horizon, dt, substeps)
    traj, times, chans, norms = engine.run(seed, [index])
    record = EmissionRecord(tuple(times.tolist()), tuple(int(c) for c in chans))
    return TrajectoryResult(record, float(norms[0]), int(seed), int(index))


def sample_records(model, horizon, n_traj, seed, dt=None, substeps=DEFAULT_SUBSTEPS,
                   batch=50000):
    """Jump records of trajectories 0 .. n_traj-1 as flat arrays (traj, time, channel)."""
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj!r}")
    engine = _Engine(model, horizon, dt, substeps)
    out_t, out_time, out_c = [], [], []
    for lo in range(0, n_traj, batch):
        hi = min(n_traj, lo + batch)
        traj, times, chans, _ = engine.run(seed, np.arange(lo, hi))
        out_t.append(traj + lo)
        out_time.append(times)
        out_c.append(chans)
    return np.concatenate(out_t), np.concatenate(out_time), np.concatenate(out_c)


def estimate_photocounts(model, horizon, n_traj, seed, dt=None, substeps=DEFAULT_SUBSTEPS):
    """Empirical click-number distribution with binomial standard errors."""
    traj, _, chans = sample_records(model, horizon, n_traj, seed, dt, substeps)
    M = max(model.n_channels, 1)
    counts = np.zeros((n_traj, M), dtype=np.int64)
    np.add.at(counts, (traj, chans), 1)
    totals = counts.sum(axis=1)
    hist = np.bincount(totals, minlength=2).astype(float)
    P = hist / n_traj
    stderr = np.sqrt(P * (1 - P) / n_traj)
    return PhotocountEstimate(P, stderr, counts, int(n_traj))
