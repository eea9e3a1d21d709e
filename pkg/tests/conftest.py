import numpy as np
import pytest

from loopshot.core import NoiseSchedule, linear_schedule


@pytest.fixture
def sched50():
    return linear_schedule(50, 1e-4, 0.02)


def const_schedule(*alpha_bars):
    """Schedule whose alpha_bar hits the given values (must be decreasing)."""
    prev, beta = 1.0, []
    for a in alpha_bars:
        beta.append(1.0 - a / prev)
        prev = a
    return NoiseSchedule(np.array(beta))


def reference_sampler(x_T, sched, denoiser, reference):
    """Plain full-sequence deterministic sampler, no windows and no fusion."""
    x = np.asarray(x_T, dtype=np.float32)
    F = x.shape[0]
    for t in range(sched.steps - 1, -1, -1):
        eps = denoiser.predict_eps(x, t, reference, positions=np.arange(F), schedule=sched)
        a = sched.alpha_bar[t]
        a_prev = sched.alpha_bar[t - 1] if t > 0 else 1.0
        x64, e64 = x.astype(np.float64), eps.astype(np.float64)
        x0 = (x64 - np.sqrt(1.0 - a) * e64) / np.sqrt(a)
        x = (np.sqrt(a_prev) * x0 + np.sqrt(1.0 - a_prev) * e64).astype(np.float32)
    return x


def philox_normal(seed, shape):
    return np.random.Generator(np.random.Philox(key=seed)).standard_normal(shape).astype(np.float32)


ACCEPTANCE_LINES = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
