import numpy as np
import pytest
from hypothesis import strategies as st

from pseudodaugavet.lorentz import LorentzSpace, PowerWeight, unit_weight
from pseudodaugavet.stepfn import from_arrays
from pseudodaugavet.verify import random_piecewise_weight

SEED = 3856349111


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


def random_function(rng, m_max=8, zeros=False):
    m = int(rng.integers(1, m_max + 1))
    values = rng.choice([-1.0, 1.0], m) * 10.0 ** rng.uniform(-2, 2, m)
    if zeros:
        values[rng.random(m) < 0.2] = 0.0
    measures = rng.dirichlet(np.ones(m)) * rng.uniform(0.3, 1.0)
    return from_arrays(measures, values)


def random_space(rng, p=None):
    p = float(rng.uniform(1.0, 6.0)) if p is None else p
    kind = rng.integers(3)
    if kind == 0:
        w = unit_weight()
    elif kind == 1:
        w = random_piecewise_weight(rng)
    else:
        w = PowerWeight(float(rng.uniform(-0.9, 0.0)))
    return LorentzSpace(p, w)


@st.composite
def simple_functions(draw, min_cells=1, max_cells=8, nonzero=False):
    m = draw(st.integers(min_cells, max_cells))
    lo = 1e-2 if nonzero else 0.0
    mags = draw(st.lists(st.floats(lo, 100.0), min_size=m, max_size=m))
    signs = draw(st.lists(st.sampled_from([-1.0, 1.0]), min_size=m, max_size=m))
    raw = draw(st.lists(st.floats(0.05, 1.0), min_size=m, max_size=m))
    total = draw(st.floats(0.2, 1.0))
    measures = np.array(raw) / sum(raw) * total
    return from_arrays(measures, np.array(mags) * np.array(signs))


spaces = st.builds(
    lambda p, kind, alpha, seed: LorentzSpace(
        p,
        [unit_weight(), PowerWeight(alpha), random_piecewise_weight(np.random.default_rng(seed))][kind],
    ),
    st.floats(1.0, 6.0),
    st.integers(0, 2),
    st.floats(-0.9, 0.0),
    st.integers(0, 2**32 - 1),
)
