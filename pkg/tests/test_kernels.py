import os
import subprocess
import sys

import numpy as np
import pytest

from wgscatter import kernels
from wgscatter.model import build_pair_source, build_tls
from wgscatter.propagator import TimeGrid, build_grid
from wgscatter.scattering import scattered_state

compiled = pytest.mark.skipif(kernels.BACKEND != "compiled", reason="extension not built")


def _random_problem(seed, n=30, d=4, B=25, M=2, r=1, n_u=3, n_e=4):
    rng = np.random.default_rng(seed)
    cplx = lambda *s: rng.normal(size=s) + 1j * rng.normal(size=s)
    states = cplx(n, d)
    states[::7] = 0
    E = cplx(n_e, M, r, d)
    E[1, 0] = 0
    return (states, rng.integers(0, B + 1, n), 0.3 * cplx(n_u, d, d), rng.integers(0, n_u, B),
            E, rng.integers(0, n_e, B))


def _check_same(a, b):
    for x, y in zip(a[:3], b[:3]):
        assert np.array_equal(x, y)
    assert a[3].shape == b[3].shape
    assert np.allclose(a[3], b[3], rtol=1e-12, atol=1e-14)


@compiled
@pytest.mark.parametrize("seed", range(5))
def test_backends_agree_on_random_inputs(seed):
    args = _random_problem(seed, r=1 + seed % 3)
    _check_same(kernels.sweep(*args, backend="python"), kernels.sweep(*args, backend="compiled"))


@pytest.mark.parametrize("threads", [2, 4])
def test_threaded_partition_matches_serial(threads):
    args = _random_problem(11, n=40)
    _check_same(kernels.sweep(*args), kernels.sweep(*args, threads=threads))


def test_output_sorted_and_nonzero():
    items, bins, chans, vecs = kernels.sweep(*_random_problem(2), backend="python")
    keys = np.stack([items, bins, chans])
    assert np.all(np.diff(np.ravel_multi_index(keys, (100, 100, 2))) > 0)
    assert np.all(np.any(vecs != 0, axis=1))


def test_empty_input():
    states, start, U, uidx, E, eidx = _random_problem(0)
    out = kernels.sweep(states[:0], start[:0], U, uidx, E, eidx)
    assert all(x.shape[0] == 0 for x in out)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.sweep(*_random_problem(0), backend="fortran")


@compiled
@pytest.mark.parametrize("model", [build_tls(1.0, 2 * np.pi / 0.4, 0.2),
                                   build_pair_source(1.0, 0.75, 0.15, 1.0, 1.0, 4)])
def test_scattered_state_identical_across_backends(model, monkeypatch):
    gp = build_grid(model, TimeGrid.for_pulse(model.t_pulse, 0.04, model.t_pulse + 3.0))
    fast = scattered_state(model, gp, 3)
    monkeypatch.setattr(kernels, "BACKEND", "python")
    slow = scattered_state(model, gp, 3)
    assert fast.sectors.keys() == slow.sectors.keys()
    for key in fast.sectors:
        assert np.array_equal(fast.sectors[key].bins, slow.sectors[key].bins)
        assert np.allclose(fast.sectors[key].amps, slow.sectors[key].amps, rtol=1e-12, atol=1e-15)


def test_environment_forces_fallback():
    env = dict(os.environ, WGSCATTER_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import wgscatter.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
