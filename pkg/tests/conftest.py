import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

PKG = Path(__file__).resolve().parents[1] / "src" / "tcpbp"
ACCEPTANCE = pytest.StashKey[list]()


def stale_extensions() -> list[str]:
    """Compiled modules older than the source they were built from.

    A stale extension shadows its edited ``.py``, so tests would silently
    exercise old code.
    """
    out = []
    for so in PKG.rglob("*.so"):
        stem = so.name.split(".")[0]
        for src in (so.with_name(stem + ".py"), so.with_name(stem + ".pyx")):
            if src.exists() and src.stat().st_mtime > so.stat().st_mtime:
                out.append(str(src.relative_to(PKG.parent)))
    return out


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []
    if os.environ.get("TCPBP_PURE") == "1":
        return
    stale = stale_extensions()
    if stale:
        raise pytest.UsageError(
            "compiled modules are older than their sources "
            f"({', '.join(stale)}); rebuild with `pip install -e . --no-build-isolation`"
        )


@pytest.fixture
def acceptance_log(request):
    return request.config.stash[ACCEPTANCE]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
