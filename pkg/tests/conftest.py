import numpy as np
import pytest

from torlink.fields import build_frame
from torlink.scenarios import builtin, builtin_names


@pytest.fixture(scope="session")
def scenarios():
    """All built-in scenarios with their frames, built once."""
    out = {}
    for name in builtin_names():
        sc = builtin(name)
        out[name] = (sc, build_frame(sc.pair))
    return out


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)


def section_samples(sc, rng, n, r_lo=0.15, r_hi=0.75, min_abs_y=0.0):
    """Random section points in a radius band, optionally clear of {y = 0}."""
    pts = []
    while len(pts) < n:
        r = sc.pair.domain.disc_radius * (r_lo + (r_hi - r_lo) * rng.random())
        phi = 2 * np.pi * rng.random()
        x, y = r * np.cos(phi), r * np.sin(phi)
        if min_abs_y and abs(y) < min_abs_y:
            continue
        pts.append(sc.pair.domain.section_point(x, y))
    return pts
