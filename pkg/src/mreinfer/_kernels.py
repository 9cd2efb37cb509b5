"""Numeric inner loops, compiled with numba when available.

Each kernel has a pure-numpy twin. Set ``MREINFER_DISABLE_NUMBA=1`` before
import to force the numpy path (numba is also skipped if it fails to import).
Both variants stay importable as ``numpy_*`` / ``numba_*`` for tests and
benchmarks; the unprefixed names are the selected backend.
"""
import os

import numpy as np

__all__ = [
    "BACKEND",
    "tilt_stats",
    "power_convolutions",
    "enumerate_first_marginal",
]


# --- numpy ---------------------------------------------------------------

def numpy_tilt_stats(logp, A, lam):
    """Tilted law ``q ∝ exp(logp - lam @ A)`` and its first two moments.

    Returns ``(q, log_z, mean, cov)`` where ``log_z`` is the log partition
    function of the (normalized) prior, ``mean = A @ q`` and ``cov`` the
    covariance of the rows of ``A`` under ``q``.
    """
    s = logp - lam @ A
    smax = s.max()
    e = np.exp(s - smax)
    z = e.sum()
    q = e / z
    log_z = smax + np.log(z)
    mean = A @ q
    centered = A - mean[:, None]
    cov = (centered * q) @ centered.T
    return q, log_z, mean, cov


def numpy_power_convolutions(w, n):
    """Rows ``k = 0..n`` hold the k-fold self-convolution of ``w``."""
    r = w.shape[0] - 1
    out = np.zeros((n + 1, n * r + 1))
    out[0, 0] = 1.0
    for k in range(1, n + 1):
        out[k, : k * r + 1] = np.convolve(out[k - 1, : (k - 1) * r + 1], w)
    return out


def numpy_enumerate_first_marginal(u, w, n, s):
    """Brute force over every length-``n`` sequence of support indices.

    Accumulates, per value of the first draw, the probability of sequences
    whose shifted values ``u`` sum to ``s``. Memory grows as ``len(u)**n``.
    """
    sums = np.zeros(1, dtype=np.int64)
    probs = np.ones(1)
    for _ in range(n - 1):
        sums = np.add.outer(sums, u).ravel()
        probs = np.multiply.outer(probs, w).ravel()
    acc = np.zeros(u.shape[0])
    for j in range(u.shape[0]):
        hit = sums + u[j] == s
        acc[j] = w[j] * probs[hit].sum()
    return acc


# --- numba ---------------------------------------------------------------

def _build_numba():
    import numba

    @numba.njit(cache=True)
    def tilt_stats(logp, A, lam):
        m, k = A.shape
        s = np.empty(k)
        smax = -np.inf
        for i in range(k):
            acc = logp[i]
            for j in range(m):
                acc -= lam[j] * A[j, i]
            s[i] = acc
            if acc > smax:
                smax = acc
        z = 0.0
        q = np.empty(k)
        for i in range(k):
            q[i] = np.exp(s[i] - smax)
            z += q[i]
        for i in range(k):
            q[i] /= z
        mean = np.zeros(m)
        for j in range(m):
            for i in range(k):
                mean[j] += A[j, i] * q[i]
        cov = np.zeros((m, m))
        for a in range(m):
            for b in range(a, m):
                c = 0.0
                for i in range(k):
                    c += q[i] * (A[a, i] - mean[a]) * (A[b, i] - mean[b])
                cov[a, b] = c
                cov[b, a] = c
        return q, smax + np.log(z), mean, cov

    @numba.njit(cache=True)
    def power_convolutions(w, n):
        r = w.shape[0] - 1
        out = np.zeros((n + 1, n * r + 1))
        out[0, 0] = 1.0
        for k in range(1, n + 1):
            top = (k - 1) * r
            for t in range(top + 1):
                c = out[k - 1, t]
                if c == 0.0:
                    continue
                for v in range(r + 1):
                    out[k, t + v] += c * w[v]
        return out

    @numba.njit(cache=True)
    def enumerate_first_marginal(u, w, n, s):
        k = u.shape[0]
        acc = np.zeros(k)
        idx = np.zeros(n, dtype=np.int64)
        while True:
            tot = 0
            p = 1.0
            for t in range(n):
                tot += u[idx[t]]
                p *= w[idx[t]]
            if tot == s:
                acc[idx[0]] += p
            # odometer increment, last position fastest
            t = n - 1
            while t >= 0:
                idx[t] += 1
                if idx[t] < k:
                    break
                idx[t] = 0
                t -= 1
            if t < 0:
                break
        return acc

    return tilt_stats, power_convolutions, enumerate_first_marginal


try:
    numba_tilt_stats, numba_power_convolutions, numba_enumerate_first_marginal = _build_numba()
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

_disabled = os.environ.get("MREINFER_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

if HAVE_NUMBA and not _disabled:
    BACKEND = "numba"
    tilt_stats = numba_tilt_stats
    power_convolutions = numba_power_convolutions
    enumerate_first_marginal = numba_enumerate_first_marginal
else:
    BACKEND = "numpy"
    tilt_stats = numpy_tilt_stats
    power_convolutions = numpy_power_convolutions
    enumerate_first_marginal = numpy_enumerate_first_marginal
