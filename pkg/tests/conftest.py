import numpy as np
import pytest

# lines recorded by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES = []


def random_c1_prices(count, seed, zero_at_origin=False):
    """Smooth price callables ``a0 + a1 s + a2 s^2 + a3 sin(w s + phi)``."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        a0, a1, a2, a3 = rng.uniform(-1.0, 1.0, 4)
        w = rng.uniform(0.5, 6.0)
        phi = rng.uniform(0.0, 2 * np.pi)

        def f(s, a0=a0, a1=a1, a2=a2, a3=a3, w=w, phi=phi):
            s = np.asarray(s, dtype=float)
            base = a0 + a1 * s + a2 * s * s + a3 * np.sin(w * s + phi)
            if zero_at_origin:
                base = base - (a0 + a3 * np.sin(phi))
            return base

        out.append(f)
    return out


def random_nonneg_prices(count, seed):
    """Smooth non-negative price callables."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        b0, b1, b2 = rng.uniform(0.0, 1.0, 3)
        w = rng.uniform(0.5, 8.0)
        phi = rng.uniform(0.0, 2 * np.pi)

        def f(s, b0=b0, b1=b1, b2=b2, w=w, phi=phi):
            s = np.asarray(s, dtype=float)
            return b0 + b1 * s + b2 * (1.0 + np.sin(w * s + phi))

        out.append(f)
    return out


@pytest.fixture
def c1_prices():
    return random_c1_prices(20, seed=20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
            terminalreporter.write_line(line[1])
