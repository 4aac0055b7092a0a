import importlib
import math

import pytest

from socialnav import _fallback


def _backends():
    out = [pytest.param(_fallback, id="python")]
    try:
        out.append(pytest.param(importlib.import_module("socialnav._kernels"), id="cython"))
    except ImportError:
        pass
    return out


@pytest.fixture(params=_backends())
def backend(request):
    """Each kernel implementation that is importable in this environment."""
    return request.param


def approx_angle(a, b, tol=1e-12):
    return abs(math.remainder(a - b, 2 * math.pi)) <= tol


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion for the run summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
