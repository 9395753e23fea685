"""The compiled and pure-Python kernels must agree."""
import subprocess
import sys

import numpy as np
import pytest

from dirac_green import _backend, _pure
from dirac_green.green import SeedStrategy, half_line_green
from dirac_green.model import HalfLine, OperatorSpec, recursion_arrays
from dirac_green.potentials import Oscillating, PotentialPair, Sequence

from conftest import random_pair

needs_cython = pytest.mark.skipif("cython" not in _backend.available(),
                                  reason="compiled kernels not built")


def test_default_selection(monkeypatch):
    monkeypatch.setenv("DIRAC_GREEN_PURE", "1")
    assert _backend.get_backend() is _pure
    assert _backend.backend_name(_backend.get_backend()) == "python"
    with pytest.raises(ValueError):
        _backend.get_backend("fortran")


def test_pure_env_in_fresh_interpreter():
    code = "from dirac_green import _backend; print(_backend.backend_name())"
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"DIRAC_GREEN_PURE": "1", "PATH": ""}, check=True)
    assert out.stdout.strip() == "python"


@needs_cython
@pytest.mark.parametrize("periodic", [False, True])
def test_fold_chunk_identical(rng, periodic):
    cy = _backend.get_backend("cython")
    spec = OperatorSpec(0.8, HalfLine(0), random_pair(rng), nu1=2)
    lam = 1.1 + 0.02j
    nu, steps = 2, 700
    a, b, c = recursion_arrays(spec, lam, np.arange(0, steps + nu))
    outs = []
    for kern in (cy, _pure):
        state = np.array([0, 1, -1, 0], dtype=complex)
        res = kern.fold_chunk(a, b, c, steps, nu, 64, 0, periodic, 1e-300, state, 0j, False)
        outs.append((res, state.copy()))
    (r1, s1), (r2, s2) = outs
    assert r1[0] == r2[0] and r1[1] == r2[1]
    assert abs(r1[2] - r2[2]) <= 1e-13 * abs(r2[2])
    assert np.allclose(s1, s2, rtol=1e-13, atol=1e-15)


@needs_cython
def test_green_identical(rng):
    spec = OperatorSpec(0.5, HalfLine(0), PotentialPair(V1=Sequence(Oscillating(2.0, 1.0))), nu1=2)
    for lam in (1.3 + 1e-3j, -0.4 + 0.5j):
        for seed in (SeedStrategy.imaginary_unit(), SeedStrategy.periodic()):
            r1 = half_line_green(spec, lam, seed=seed, backend=_backend.get_backend("cython"))
            r2 = half_line_green(spec, lam, seed=seed, backend=_pure)
            assert r1.depth == r2.depth
            assert abs(r1.value - r2.value) <= 1e-12 * abs(r2.value)


@needs_cython
def test_jacobi_eigh_identical(rng):
    cy = _backend.get_backend("cython")
    X = rng.normal(size=(30, 30)) + 1j * rng.normal(size=(30, 30))
    M = X + X.conj().T
    w1, V1, s1 = cy.jacobi_eigh(M.copy(), 1e-15)
    w2, V2, s2 = _pure.jacobi_eigh(M.copy(), 1e-15)
    assert s1 == s2
    assert np.allclose(np.sort(w1), np.sort(w2), atol=1e-12)
