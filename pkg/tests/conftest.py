import pytest

from frackink.kink import solve_kink

_CRITERIA: dict[int, dict] = {}


def _record(num: int, title: str, part: str, ok: bool, detail: str = "") -> None:
    entry = _CRITERIA.setdefault(num, {"title": title, "parts": []})
    entry["parts"].append((part, bool(ok), detail))


@pytest.fixture
def criterion():
    """Record one part of an acceptance criterion for the end-of-run summary."""
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        e = _CRITERIA[num]
        ok = all(p[1] for p in e["parts"])
        parts = "; ".join(f"{name}: {'ok' if good else 'FAIL'} ({detail})"
                          for name, good, detail in e["parts"])
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {e['title']} | {parts}")


@pytest.fixture(scope="session")
def kink15():
    return solve_kink(1.5, L=50.0, N=2048)


@pytest.fixture(scope="session")
def kink25():
    return solve_kink(2.5, L=50.0, N=2048)


@pytest.fixture(scope="session")
def kink2():
    return solve_kink(2.0, L=50.0, N=2048)


@pytest.fixture(scope="session")
def kink15_large():
    return solve_kink(1.5)


@pytest.fixture(scope="session")
def kink25_large():
    return solve_kink(2.5)


@pytest.fixture(scope="session")
def kink15_lattice():
    return solve_kink(1.5, L=100.0, N=4096, background_kind="lattice", newton_tol=1e-11)
