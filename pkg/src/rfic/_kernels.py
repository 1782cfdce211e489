"""Compiled inner loops. Each kernel processes one block of data and carries
its state in small arrays so long runs can be streamed block by block."""
import math

import numpy as np
from numba import njit

# transfer state: [a, b, c, d, logscale]
# dp state:       [m_plus, m_minus, offset]
# erg state:      [x, sum, n_done]


@njit(cache=True, nogil=True)
def transfer_block(h, J, st):
    q = math.exp(-2.0 * J)
    a, b, c, d, ls = st[0], st[1], st[2], st[3], st[4]
    for i in range(h.size):
        x = h[i]
        # T_x Q factored as e^{|x|} times a matrix with entries <= 1
        r = math.exp(-2.0 * abs(x))
        if x >= 0.0:
            a, b = a + b * q * r, a * q + b * r
            c, d = c + d * q * r, c * q + d * r
        else:
            a, b = a * r + b * q, a * q * r + b
            c, d = c * r + d * q, c * q * r + d
        m = max(max(a, b), max(c, d))
        a /= m
        b /= m
        c /= m
        d /= m
        ls += abs(x) + math.log(m)
    st[0], st[1], st[2], st[3], st[4] = a, b, c, d, ls


@njit(cache=True, nogil=True)
def dp_block(h, J, st):
    mp, mm, off = st[0], st[1], st[2]
    g = 2.0 * J
    for i in range(h.size):
        x = h[i]
        mp, mm = max(mp + x, mm - g - x), max(mp - g + x, mm - x)
        if (i & 1023) == 1023:
            off += mp
            mm -= mp
            mp = 0.0
    st[0], st[1], st[2] = mp, mm, off


@njit(cache=True, nogil=True)
def erg_block(h, J, st, burn_in):
    """X-chain with the telescoped increment of M+; sums increments of steps
    with global index > burn_in."""
    g = 2.0 * J
    x, acc, n = st[0], st[1], st[2]
    part = 0.0
    for i in range(h.size):
        z = 2.0 * h[i]
        inc = h[i] + max(0.0, -x - g - z)
        n += 1.0
        if n > burn_in:
            part += inc
        if (i & 4095) == 4095:
            acc += part
            part = 0.0
        x = min(max(x + z, -g), g)
    st[0], st[1], st[2] = x, acc + part, n


@njit(cache=True, nogil=True)
def x_chain_path(x0, h, J):
    g = 2.0 * J
    out = np.empty(h.size + 1)
    out[0] = x0
    x = x0
    for i in range(h.size):
        x = min(max(x + 2.0 * h[i], -g), g)
        out[i + 1] = x
    return out


@njit(cache=True, nogil=True)
def gamma_scan(S, start, gamma, stf, sti, t_out, u_out, up_out, su_out):
    """Alternating Gamma-extrema detection over a block of walk values.

    sti = [phase, first, last, initialised]; stf = [extreme value].
    Phase 0 tracks the running max and waits for a drop >= gamma; phase 1
    tracks the running min and waits for a rise >= gamma. Returns the number
    of records written (capacity must be >= len(S))."""
    phase, first, last, init = sti[0], sti[1], sti[2], sti[3]
    ext = stf[0]
    k = 0
    for j in range(S.size):
        n = start + j
        s = S[j]
        if init == 0:
            ext = s
            first = n
            last = n
            init = 1
            continue
        if phase == 0:
            if s > ext:
                ext = s
                first = n
                last = n
            elif s == ext:
                last = n
            elif ext - s >= gamma:
                t_out[k] = n
                u_out[k] = first
                up_out[k] = last
                su_out[k] = ext
                k += 1
                phase = 1
                ext = s
                first = n
                last = n
        else:
            if s < ext:
                ext = s
                first = n
                last = n
            elif s == ext:
                last = n
            elif s - ext >= gamma:
                t_out[k] = n
                u_out[k] = first
                up_out[k] = last
                su_out[k] = ext
                k += 1
                phase = 0
                ext = s
                first = n
                last = n
    sti[0], sti[1], sti[2], sti[3] = phase, first, last, init
    stf[0] = ext
    return k


@njit(cache=True, nogil=True)
def env_functionals(S, u, up, gamma, out_inner, out_full):
    """log-sums of exp(-2 S) around every Gamma-minimum (odd 0-based index)
    whose neighbouring maxima are both recorded."""
    half = 0.5 * gamma
    m = 0
    for k in range(1, u.size - 1, 2):
        lo = u[k - 1]
        hi = up[k + 1]
        c = u[k]
        base = S[c]
        tm = c
        while S[tm] - base < half:
            tm -= 1
        tp = c
        while S[tp] - base < half:
            tp += 1
        inner = 0.0
        full = 0.0
        for n in range(lo, hi + 1):
            w = math.exp(-2.0 * (S[n] - base))
            full += w
            if tm < n < tp:
                inner += w
        out_inner[m] = math.log(inner)
        out_full[m] = math.log(full)
        m += 1
    return m


@njit(cache=True, nogil=True)
def ladder_walk_block(h, weak, st, heights, epochs, cap, drop):
    """Direct simulation of ascending ladder records over a block of steps.

    st = [S, epoch, n_written]. Returns 0 normally, 1 if an epoch reached cap
    (unless ``drop``, in which case that walk is discarded and restarted)."""
    s, ep, k = st[0], st[1], int(st[2])
    for i in range(h.size):
        if k >= heights.size:
            break
        s += h[i]
        ep += 1.0
        hit = s >= 0.0 if weak else s > 0.0
        if hit:
            heights[k] = s
            epochs[k] = ep
            k += 1
            s = 0.0
            ep = 0.0
        elif ep >= cap:
            if drop:
                s = 0.0
                ep = 0.0
                continue
            st[0], st[1], st[2] = s, ep, k
            return 1
    st[0], st[1], st[2] = s, ep, k
    return 0


@njit(cache=True, nogil=True)
def lindley_block(z, st, edges, counts):
    """Lindley recursion y <- max(y + z, 0); counts visits per bin of edges
    (bin 0 is the atom y == 0). st = [y, zeros]."""
    y, zeros = st[0], st[1]
    nb = edges.size
    for i in range(z.size):
        y = y + z[i]
        if y <= 0.0:
            y = 0.0
            zeros += 1.0
            counts[0] += 1.0
        elif y <= edges[nb - 1]:
            j = np.searchsorted(edges, y)
            counts[j] += 1.0
    st[0], st[1] = y, zeros
