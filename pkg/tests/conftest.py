import numpy as np
import pytest

from mfapc.edlm import PseudoJacobianMatrix

PHI1 = np.array([[1.0, 0.4], [0.8, 1.2]])
PHI2 = np.array([[0.5, 0.6], [0.4, 0.7]])


@pytest.fixture
def eq48_pjm():
    return PseudoJacobianMatrix([PHI1, PHI2])


def linear_rollout(blocks, u_past, du_future, y_k):
    """Brute-force outputs y(k+1..k+n) of dy(k+1) = sum_i G_i du(k-i+1).

    ``u_past`` lists the past increments newest first (du(k-1), du(k-2), ...).
    """
    L = len(blocks)
    seq = list(u_past[::-1]) + list(du_future)  # chronological increments
    n_past = len(u_past)
    y = np.array(y_k, dtype=float)
    out = []
    for m in range(len(du_future)):
        idx = n_past + m  # index of du(k+m)
        dy = sum(blocks[i] @ seq[idx - i] for i in range(L) if idx - i >= 0)
        y = y + dy
        out.append(y.copy())
    return np.concatenate(out)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
