import pytest

# criterion id -> list of (test name, passed, detail)
_RESULTS: dict[str, list[tuple[str, bool, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(cid): acceptance criterion checked by this test")


@pytest.fixture
def detail(request):
    """Append a short measured-value note to the acceptance summary line."""
    notes = []
    request.node.user_properties.append(("detail", notes))
    return notes.append


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    failed_setup = rep.when == "setup" and not rep.passed
    if rep.when != "call" and not failed_setup:
        return
    notes = [n for key, v in item.user_properties if key == "detail" for n in v]
    _RESULTS.setdefault(str(marker.args[0]), []).append((item.name, rep.passed, "; ".join(notes)))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_RESULTS, key=lambda c: (int(c.rstrip("abcde")), c)):
        rows = _RESULTS[cid]
        ok = all(p for _, p, _ in rows)
        notes = " | ".join(f"{name}: {d}" if d else name for name, _, d in rows)
        terminalreporter.write_line(f"criterion {cid}: {'PASS' if ok else 'FAIL'}  {notes}")
