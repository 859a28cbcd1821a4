import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_runtest_logreport(report):
    """Print one visible pass/fail line per acceptance criterion."""
    if report.when != "call":
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    number, _, rest = name.removeprefix("test_criterion_").partition("_")
    status = "PASS" if report.passed else "FAIL"
    sys.stderr.write(f"\n[acceptance criterion {number}] {status}: {rest.replace('_', ' ')}\n")
    sys.stderr.flush()
