import numpy as np
import pytest


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)


def fd_gradient(fn, arrays, h=1e-4):
    """Central finite differences of a scalar function of several arrays.

    The arrays are perturbed in place entry by entry; this is the independent
    oracle every autodiff check compares against.
    """
    grads = []
    for a in arrays:
        g = np.zeros_like(a)
        flat = a.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = fn()
            flat[i] = orig - h
            f_minus = fn()
            flat[i] = orig
            gflat[i] = (f_plus - f_minus) / (2.0 * h)
        grads.append(g)
    return grads


def fd_gradient_subset(fn, arrays, coords, h=1e-4):
    """Finite differences at selected flat coordinates of each array.

    ``coords`` maps array index -> iterable of flat indices; returns a list of
    (flat_index, derivative) lists aligned with ``arrays``.
    """
    out = []
    for ai, a in enumerate(arrays):
        flat = a.ravel()
        rows = []
        for i in coords.get(ai, ()):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = fn()
            flat[i] = orig - h
            f_minus = fn()
            flat[i] = orig
            rows.append((i, (f_plus - f_minus) / (2.0 * h)))
        out.append(rows)
    return out


def max_grad_error(analytic, numeric, abs_floor=1e-6):
    """Max relative error; entries with tiny analytic gradient compared absolutely."""
    worst = 0.0
    for ga, gn in zip(analytic, numeric):
        ga = np.asarray(ga, dtype=float)
        gn = np.asarray(gn, dtype=float)
        small = np.abs(ga) < abs_floor
        denom = np.where(small, 1.0, np.maximum(np.abs(ga), np.abs(gn)))
        err = np.abs(ga - gn) / denom
        if err.size:
            worst = max(worst, float(err.max()))
    return worst


def golden_section_max(fn, lo, hi, tol=1e-10, max_iter=200):
    """Golden-section maximizer on [lo, hi]; oracle for closed-form MLEs."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def quadratic_peak_max(fn, lo, hi, h=0.1):
    """Numeric argmax for an exactly quadratic objective.

    Golden section localizes the peak, then a three-point parabolic vertex
    removes the flat-peak resolution limit of comparison-based search.
    """
    center = golden_section_max(fn, lo, hi, tol=1e-6)
    f_m, f_0, f_p = fn(center - h), fn(center), fn(center + h)
    denom = f_m - 2.0 * f_0 + f_p
    if denom >= 0.0:
        return center
    return center + 0.5 * h * (f_m - f_p) / denom


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
