import pytest

from rgrl.pipeline import synthetic_config


@pytest.fixture
def quick_config():
    """Synthetic run small enough for unit tests (about a second)."""
    return synthetic_config(train={"pretrain_epochs": 200, "finetune_epochs": 800}, n_init=5)


_RESULTS = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(number, passed, detail)``; None marks a skip."""
    lines = request.config.stash.setdefault(_RESULTS, [])

    def record(number, passed, detail):
        status = "SKIP" if passed is None else "PASS" if passed else "FAIL"
        line = f"criterion {number}: {status}  {detail}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_RESULTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
