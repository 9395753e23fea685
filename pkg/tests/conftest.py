import numpy as np
import pytest
from hypothesis import settings

from dirac_green import _backend
from dirac_green.model import FullLine, HalfLine, OperatorSpec
from dirac_green.potentials import BumpTable, Oscillating, PotentialPair, Power, Sequence

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def free(m=0.0, lattice=None, mode="dirac"):
    return OperatorSpec(mass=m, lattice=lattice or HalfLine(0), mode=mode)


def random_pair(rng, hopping=True, support=None):
    """Decaying random potentials; with ``support`` a finitely supported table instead."""
    if support is not None:
        lo, hi = support

        def table(scale, cplx=False):
            vals = rng.uniform(-scale, scale, hi - lo)
            if cplx:
                vals = vals + 1j * rng.uniform(-scale, scale, hi - lo)
            return Sequence(BumpTable({n: v for n, v in zip(range(lo, hi), vals)}))

        if not hopping:
            return PotentialPair(table(2.0), table(2.0))
        return PotentialPair(table(2.0), table(2.0), table(0.4, True), table(0.4, True))

    def fam(amp):
        kind = Power if rng.random() < 0.5 else Oscillating
        return Sequence(kind(amp, float(rng.uniform(1.0, 2.0)), int(rng.integers(-2, 3))))

    V1, V2 = fam(float(rng.uniform(-2, 2))), fam(float(rng.uniform(-2, 2)))
    if not hopping:
        return PotentialPair(V1, V2)
    w = rng.uniform(0, 0.7, 2) * np.exp(2j * np.pi * rng.uniform(size=2))
    return PotentialPair(V1, V2, fam(complex(w[0])), fam(complex(w[1])))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=_backend.available())
def backend(request):
    return _backend.get_backend(request.param)


@pytest.fixture
def half_free():
    return free()


@pytest.fixture
def full_free():
    return free(lattice=FullLine())


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE
    except ImportError:
        return
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(f"criterion {key:<3} {ACCEPTANCE[key]}")
