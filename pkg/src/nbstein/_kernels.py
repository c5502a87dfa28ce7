"""Hot inner loops, each with a numba kernel and a numpy/scipy fallback.

The public names at the bottom bind to the numba kernels unless the
``NB_STEIN_NUMBA`` flag (see ``_accel``) disables them. Both paths take and
return plain numpy arrays so callers never see which one ran.
"""
import numpy as np
from scipy.signal import fftconvolve, lfilter, lfiltic

from ._accel import JIT_ENABLED, njit


# ---------------------------------------------------------------------------
# x[m] = x[m-1] - a * x[m-k], extended from a supplied head
# ---------------------------------------------------------------------------


def _recurrence_numpy(head, a, k, length):
    head = np.asarray(head, dtype=np.float64)
    s = head.size
    out = np.empty(length, dtype=np.float64)
    if length <= s:
        out[:] = head[:length]
        return out
    out[:s] = head
    den = np.zeros(k + 1)
    den[0], den[1] = 1.0, -1.0
    den[k] += a
    # lfiltic wants the most recent outputs first
    zi = lfiltic([1.0], den, y=head[::-1][:k])
    out[s:], _ = lfilter([1.0], den, np.zeros(length - s), zi=zi)
    return out


@njit(cache=True, nogil=True)
def _recurrence_numba(head, a, k, length):
    s = head.size
    out = np.empty(length, dtype=np.float64)
    for m in range(min(s, length)):
        out[m] = head[m]
    for m in range(s, length):
        out[m] = out[m - 1] - a * out[m - k]
    return out


# ---------------------------------------------------------------------------
# distribution of the number of (k1, k2)-events in t trials, t = 0..n_trials
# ---------------------------------------------------------------------------


def _event_count_numpy(a, k, n_trials):
    x_max = n_trials // k
    p = np.zeros((x_max + 2, n_trials + 1))
    p[0, : min(k, n_trials + 1)] = 1.0
    for t in range(k - 1, n_trials):
        lag = p[:, t + 1 - k]
        p[0, t + 1] = p[0, t] - a * lag[0]
        p[1:, t + 1] = p[1:, t] + a * (lag[:-1] - lag[1:])
    return p[: x_max + 1]


@njit(cache=True, nogil=True)
def _event_count_numba(a, k, n_trials):
    x_max = n_trials // k
    p = np.zeros((x_max + 2, n_trials + 1))
    for t in range(min(k, n_trials + 1)):
        p[0, t] = 1.0
    for t in range(k - 1, n_trials):
        src = t + 1 - k
        p[0, t + 1] = p[0, t] - a * p[0, src]
        top = (t + 1) // k
        for x in range(1, top + 1):
            p[x, t + 1] = p[x, t] + a * (p[x - 1, src] - p[x, src])
    return p[: x_max + 1]


# ---------------------------------------------------------------------------
# Monte Carlo waiting times: trials before the n-th (k1, k2)-event, minus n*k
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _simulate_numba(k1, k2, p_bar, n_events, trials, seed):
    np.random.seed(seed)
    k = k1 + k2
    out = np.empty(trials, dtype=np.int64)
    for i in range(trials):
        s = 0
        events = 0
        t = 0
        while events < n_events:
            t += 1
            if np.random.random() < p_bar:
                if s >= k1:
                    s += 1
                else:
                    s = 0
            else:
                if s < k1:
                    s += 1
                elif s > k1:
                    s = 1 if k1 > 0 else 0
            if s == k:
                events += 1
                s = 0
        out[i] = t - n_events * k
    return out


def _simulate_numpy(k1, k2, p_bar, n_events, trials, seed):
    rng = np.random.default_rng(seed)
    k = k1 + k2
    out = np.empty(trials, dtype=np.int64)
    idx = np.arange(trials)
    s = np.zeros(trials, dtype=np.int64)
    events = np.zeros(trials, dtype=np.int64)
    t = 0
    while idx.size:
        t += 1
        success = rng.random(idx.size) < p_bar
        in_s_phase = s >= k1
        s = np.where(
            success,
            np.where(in_s_phase, s + 1, 0),
            np.where(s < k1, s + 1, np.where(s > k1, min(k1, 1), s)),
        )
        hit = s == k
        events += hit
        s[hit] = 0
        done = events >= n_events
        if done.any():
            out[idx[done]] = t - n_events * k
            keep = ~done
            idx, s, events = idx[keep], s[keep], events[keep]
    return out


# ---------------------------------------------------------------------------
# streamed TV between the n-event waiting time and NB(alpha, p)
#
# The waiting-time PMF follows from (1 - z + a z^k) M' = n (1 - k a z^(k-1)) M:
#   (m+1) P_{m+1} = (m+n) P_m - a (m - k + 1 + n k) P_{m-k+1}.
# It starts at a^n, which can underflow, so P is carried with a separate
# log scale. The NB PMF is restarted every ``stride`` steps from accurate
# log values (``anchors``) and extended by its ratio recurrence in between.
# Returns (sum |P - Q|, sum P, sum Q) over m < length.
# ---------------------------------------------------------------------------

_RESCALE = 1e200
_LOG_RESCALE = 200.0 * np.log(10.0)


@njit(cache=True, nogil=True)
def _waiting_nb_tv_numba(a, k, n, alpha, p, length, anchors, stride):
    ring = np.zeros(k)
    q = 1.0 - p
    scale = n * np.log(a)
    factor = np.exp(scale) if scale > -745.0 else 0.0
    cur = 1.0
    nb = 0.0
    tv = 0.0
    c_tv = 0.0
    mp = 0.0
    c_mp = 0.0
    mq = 0.0
    c_mq = 0.0
    for m in range(length):
        ring[m % k] = cur
        if m % stride == 0:
            nb = np.exp(anchors[m // stride])
        else:
            nb = nb * q * (alpha + m - 1.0) / m
        pt = cur * factor
        y = abs(pt - nb) - c_tv
        t = tv + y
        c_tv = (t - tv) - y
        tv = t
        y = pt - c_mp
        t = mp + y
        c_mp = (t - mp) - y
        mp = t
        y = nb - c_mq
        t = mq + y
        c_mq = (t - mq) - y
        mq = t
        lag = ring[(m - k + 1) % k] if m - k + 1 >= 0 else 0.0
        cur = ((m + n) * cur - a * (m - k + 1 + n * k) * lag) / (m + 1)
        if abs(cur) > _RESCALE:
            for i in range(k):
                ring[i] /= _RESCALE
            cur /= _RESCALE
            scale += _LOG_RESCALE
            factor = np.exp(scale) if scale > -745.0 else 0.0
    return tv, mp, mq


def _waiting_nb_tv_numpy(a, k, n, alpha, p, length, anchors, stride):
    # FFT route: single-event PMF by recursion, n-fold power by convolution
    head = np.ones(k)
    b = _recurrence_numpy(head, a, k, length)
    single = a * b
    result = None
    base = single
    e = n
    while e:
        if e & 1:
            result = base if result is None else fftconvolve(result, base)[:length]
        e >>= 1
        if e:
            base = fftconvolve(base, base)[:length]
    pw = np.clip(result, 0.0, None)
    m = np.arange(length)
    ratios = np.empty(length)
    ratios[0] = 1.0
    ratios[1:] = (1.0 - p) * (alpha + m[1:] - 1.0) / m[1:]
    nb = np.empty(length)
    for start in range(0, length, stride):
        stop = min(start + stride, length)
        block = ratios[start:stop].copy()
        block[0] = 1.0
        nb[start:stop] = np.exp(anchors[start // stride]) * np.cumprod(block)
    return float(np.abs(pw - nb).sum()), float(pw.sum()), float(nb.sum())


if JIT_ENABLED:
    recurrence = _recurrence_numba
    event_count_table = _event_count_numba
    simulate_waiting = _simulate_numba
    waiting_nb_tv = _waiting_nb_tv_numba
else:
    recurrence = _recurrence_numpy
    event_count_table = _event_count_numpy
    simulate_waiting = _simulate_numpy
    waiting_nb_tv = _waiting_nb_tv_numpy
