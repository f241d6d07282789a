"""Pure-Python transfer-block kernels (fallback for the compiled ``_kernels``).

All functions act on the first-order system ``(u, u')' = [[0, 1], [w, 0]] (u, u')``
with ``w = W - E`` constant on each piece.  Piece lengths may be negative
(backward propagation).
"""

import math

import numpy as np


def block(w, h):
    """Entries ``(a, b, c, d)`` of the transfer matrix over one constant piece."""
    if w > 0.0:
        s = math.sqrt(w)
        ch = math.cosh(s * h)
        sh = math.sinh(s * h)
        return ch, sh / s, s * sh, ch
    if w < 0.0:
        k = math.sqrt(-w)
        cs = math.cos(k * h)
        sn = math.sin(k * h)
        return cs, sn / k, -k * sn, cs
    return 1.0, h, 0.0, 1.0


def transfer_product(lengths, w):
    """``B_n ... B_1`` for pieces traversed in the given order."""
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    for i in range(len(lengths)):
        p, q, r, s = block(w[i], lengths[i])
        a, b, c, d = p * a + q * c, p * b + q * d, r * a + s * c, r * b + s * d
    return a, b, c, d


def propagate_pc(lengths, w, u, du):
    for i in range(len(lengths)):
        p, q, r, s = block(w[i], lengths[i])
        u, du = p * u + q * du, r * u + s * du
    return u, du


def trajectory_pc(lengths, w, u, du):
    """States at every edge: arrays of length ``len(lengths) + 1``."""
    n = len(lengths)
    us = np.empty(n + 1)
    dus = np.empty(n + 1)
    us[0], dus[0] = u, du
    for i in range(n):
        p, q, r, s = block(w[i], lengths[i])
        u, du = p * u + q * du, r * u + s * du
        us[i + 1], dus[i + 1] = u, du
    return us, dus
