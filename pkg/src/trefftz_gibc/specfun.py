"""Integer-order Bessel and Hankel functions of real positive argument.

J_n is computed by its power series for small arguments and by Miller's
backward recurrence (normalised with J_0 + 2 sum J_2k = 1) otherwise.  Y_0 and
Y_1 come from the Neumann series in the computed J_n, and higher orders from
the (stable) upward recurrence.  Derivatives always use

    C_n'(x) = (C_{n-1}(x) - C_{n+1}(x)) / 2.

All functions accept a scalar or an array ``x`` and are pure.
"""

import math

import numpy as np

__all__ = [
    "N_MAX",
    "bessel_j",
    "bessel_y",
    "bessel_jp",
    "bessel_yp",
    "hankel1",
    "hankel2",
    "hankel1_prime",
    "hankel2_prime",
    "jy_table",
]

#: Largest supported order |n|.
N_MAX = 128

_EULER_GAMMA = 0.57721566490153286061
_SERIES_CUTOFF = 2.0
_BIG = 1e250


def _as_positive(x):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x <= 0.0):
        raise ValueError("Bessel functions are only implemented for finite x > 0")
    return x


def _check_order(n, limit=N_MAX):
    if int(n) != n:
        raise ValueError(f"order must be an integer, got {n!r}")
    if abs(int(n)) > limit:
        raise ValueError(f"|n| = {abs(int(n))} exceeds the supported maximum {limit}")
    return int(n)


def _j_series(nmax, x):
    """Power series J_0..J_nmax for 0 < x <= 2 (rows are orders)."""
    out = np.empty((nmax + 1,) + x.shape)
    q = -0.25 * x * x
    logh = np.log(0.5 * x)
    for n in range(nmax + 1):
        term = np.exp(n * logh - math.lgamma(n + 1))
        acc = term.copy()
        for k in range(1, 40):
            term = term * q / (k * (n + k))
            acc += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(acc)):
                break
        out[n] = acc
    return out


def _j_miller(nmax, x):
    """Backward recurrence for J_0..J_top, top >= nmax, for x > 2.

    Returns the full normalised table so callers can reuse high orders
    (needed by the Neumann series for Y_0, Y_1).
    """
    xm = float(np.max(x))
    m = max(nmax, xm)
    top = int(m + 12 + 2.0 * math.sqrt(40.0 * m))
    top += top % 2
    table = np.zeros((top + 1,) + x.shape)
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    table[top] = j_cur
    for n in range(top, 0, -1):
        j_prev = (2.0 * n / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        table[n - 1] = j_cur
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm += 2.0 * j_cur
        big = np.abs(j_cur) > _BIG
        if np.any(big):
            table[n - 1 :, big] /= _BIG
            j_cur[big] /= _BIG
            j_next[big] /= _BIG
            norm[big] /= _BIG
    norm += table[0]
    return table / norm


def _j_full(nmax, x):
    """J_0..J_L for L >= nmax, accurate for all rows <= nmax."""
    small = x <= _SERIES_CUTOFF
    # Neumann series for Y needs J_2k until it is negligible; 40 suffices for x <= 2.
    ltop = max(nmax, 40)
    if np.all(small):
        return _j_series(ltop, x)
    big_tab = _j_miller(nmax, x[~small])
    ltop = max(ltop, big_tab.shape[0] - 1)
    out = np.zeros((ltop + 1,) + x.shape)
    out[: big_tab.shape[0], ~small] = big_tab
    if np.any(small):
        out[:41 if nmax < 41 else nmax + 1, small] = _j_series(max(nmax, 40), x[small])
    return out


def jy_table(nmax, x):
    """Return ``(J, Y)`` arrays of shape ``(nmax + 1,) + x.shape``.

    Row ``n`` holds J_n(x) and Y_n(x).  ``nmax`` may be up to ``N_MAX + 1`` so
    that derivatives of order ``N_MAX`` are available.
    """
    nmax = _check_order(nmax, N_MAX + 1)
    x = _as_positive(x)
    shape = x.shape
    x = x.reshape(-1)
    jf = _j_full(nmax, x)
    L = np.log(0.5 * x) + _EULER_GAMMA
    kmax = (jf.shape[0] - 2) // 2
    ks = np.arange(1, kmax + 1)
    signs = np.where(ks % 2 == 1, 1.0, -1.0)[:, None]
    even = jf[2 * ks]
    y0 = (2.0 / np.pi) * (L * jf[0] + 2.0 * np.sum(signs * even / ks[:, None], axis=0))
    diff = jf[2 * ks - 1] - jf[2 * ks + 1]
    y1 = -(2.0 / np.pi) * (jf[0] / x - L * jf[1] + np.sum(signs * diff / ks[:, None], axis=0))
    y = np.empty((nmax + 1, x.size))
    y[0] = y0
    if nmax >= 1:
        y[1] = y1
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, nmax):
            y[n + 1] = (2.0 * n / x) * y[n] - y[n - 1]
    y[~np.isfinite(y)] = -np.inf
    j = jf[: nmax + 1]
    return j.reshape((nmax + 1,) + shape), y.reshape((nmax + 1,) + shape)


def _signed(table, n):
    """Pick order n (possibly negative) from a table of non-negative orders."""
    if n >= 0:
        return table[n]
    return (-1.0) ** (-n) * table[-n]


def _scalar(v):
    return v.item() if np.ndim(v) == 0 else v


def bessel_j(n, x):
    """J_n(x) for integer n, |n| <= N_MAX, x > 0."""
    n = _check_order(n)
    j, _ = jy_table(abs(n), x)
    return _scalar(_signed(j, n))


def bessel_y(n, x):
    """Y_n(x) for integer n, |n| <= N_MAX, x > 0."""
    n = _check_order(n)
    _, y = jy_table(abs(n), x)
    return _scalar(_signed(y, n))


def _prime(table_fn, n, x):
    n = _check_order(n)
    t = table_fn(abs(n) + 1, x)
    lo = _signed(t, n - 1) if n - 1 >= 0 else (-1.0) ** (1 - n) * t[1 - n]
    hi = _signed(t, n + 1) if n + 1 >= 0 else (-1.0) ** (-n - 1) * t[-n - 1]
    return _scalar(0.5 * (lo - hi))


def bessel_jp(n, x):
    """J_n'(x) via the half-difference identity."""
    return _prime(lambda m, z: jy_table(m, z)[0], n, x)


def bessel_yp(n, x):
    """Y_n'(x) via the half-difference identity."""
    return _prime(lambda m, z: jy_table(m, z)[1], n, x)


def hankel1(n, x):
    """H_n^(1)(x) = J_n(x) + i Y_n(x)."""
    n = _check_order(n)
    j, y = jy_table(abs(n), x)
    return _scalar(_signed(j, n) + 1j * _signed(y, n))


def hankel2(n, x):
    return np.conj(hankel1(n, x))


def hankel1_prime(n, x):
    return bessel_jp(n, x) + 1j * bessel_yp(n, x)


def hankel2_prime(n, x):
    return np.conj(hankel1_prime(n, x))
