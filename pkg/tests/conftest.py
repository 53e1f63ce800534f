import numpy as np
import pytest

from gdls.objectives import Dataset


def unit_ball_rows(rng, n, d):
    X = rng.standard_normal((n, d))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    return X * rng.random(n)[:, None] ** (1.0 / d)


def pm1(rng, n):
    return np.where(rng.random(n) < 0.5, -1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def logistic_data(rng):
    X = unit_ball_rows(rng, 10, 4)
    return Dataset(X, pm1(rng, 10))


@pytest.fixture
def counterexample_data():
    # y1 x1 = 2, y2 x2 = -2: gradient vanishes at zero while the Hessian is 1.
    return Dataset(np.array([[2.0], [2.0]]), np.array([1.0, -1.0]))


def quadratic():
    """f(theta) = theta^2 / 2 as a one-sample least-squares problem."""
    from gdls.objectives import LinearRegression

    return LinearRegression(Dataset(np.array([[1.0]]), np.array([0.0])))


@pytest.fixture
def quad():
    return quadratic()


def fd_hvp(obj, theta, v, h=1e-6):
    """Central difference of the analytic gradient along v."""
    gp = obj.evaluate(theta + h * v).gradient
    gm = obj.evaluate(theta - h * v).gradient
    return (gp - gm) / (2 * h)


# Acceptance verdicts, printed as one line per criterion at the end of the run.
VERDICTS = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    table = request.config.stash.setdefault(VERDICTS, {})

    def record(criterion: int, check: str, ok: bool, detail: str = "") -> bool:
        table.setdefault(criterion, []).append((check, bool(ok), detail))
        print(f"criterion {criterion} [{check}]: {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash.get(VERDICTS, None)
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(table):
        checks = table[criterion]
        ok = all(passed for _, passed, _ in checks)
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}")
        for check, passed, detail in checks:
            terminalreporter.write_line(f"    {'ok  ' if passed else 'FAIL'} {check}: {detail}")
