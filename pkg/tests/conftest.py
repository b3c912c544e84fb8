import math

import numpy as np
import pytest

from ftqc import sk


@pytest.fixture(scope="session")
def net():
    """Default base net; building it takes well under a second."""
    return sk.build_net()


@pytest.fixture(scope="session")
def net_cache(tmp_path_factory, net):
    path = tmp_path_factory.mktemp("cache") / "net.json"
    net.save(path)
    return path


def eig_dist(a, b):
    """Phase-invariant distance from the eigenphases of a^dag b (independent of ftqc.dist)."""
    w = np.linalg.eigvals(np.asarray(a).conj().T @ np.asarray(b))
    gap = abs(math.remainder(float(np.angle(w[0] / w[1])), 2 * math.pi))
    return 2 * math.sin(gap / 4)


ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion; printed at session end."""

    def _record(name: str, ok: bool, detail: str = "") -> bool:
        ACCEPTANCE[name] = (bool(ok), detail)
        return bool(ok)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{name}: {'PASS' if ok else 'FAIL'}  {detail}")
