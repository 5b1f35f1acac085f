import numpy as np
import pytest

from cpmisspec.model import Dataset


def brute_force_stump(x, y):
    """Exhaustive search over all splits with per-split means."""
    order = np.argsort(x, kind="stable")
    xs, ys = np.asarray(x)[order], np.asarray(y)[order]
    best = None
    for k in range(1, xs.size):
        if xs[k] == xs[k - 1]:
            continue
        left, right = ys[:k], ys[k:]
        rss = float(((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum())
        if best is None or rss < best[1]:
            best = (float(xs[k - 1]), rss)
    return best


def brute_force_known_levels(x, y, bl, bu):
    """Direct criterion ``sum (y - bl)^2 1(x <= t) + (y - bu)^2 1(x > t)`` at every candidate."""
    x, y = np.asarray(x), np.asarray(y)
    cands = np.concatenate([[x.min() - 2.0 ** -26], np.unique(x)])
    vals = [float(np.where(x <= t, (y - bl) ** 2, (y - bu) ** 2).sum()) for t in cands]
    return float(cands[int(np.argmin(vals))]), np.asarray(vals), cands


def random_dataset(rng, n, ties=False):
    x = rng.integers(0, max(2, n // 2), n) / n if ties else rng.random(n)
    y = (x > 0.5) + 0.7 * rng.standard_normal(n)
    return Dataset(x, y)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
