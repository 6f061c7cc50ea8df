"""Naive scalar-loop attention kernel.

This is the independent reference the vectorized and compiled kernels are
checked against.  It deliberately avoids numpy reductions: every correlation,
softmax and superposition is an explicit Python loop over scalars, so a bug
in the vectorized code cannot hide here.  It is O(T^2 d) in Python-level
operations and only meant for small instances.
"""

from __future__ import annotations

import cmath
import math


def attention_loops(q, k, v, alpha, eps, scale, phase_decay, coherent_sum):
    """Triple-loop phase-aware attention on T x d nested lists or arrays.

    Returns six row-major nested lists mirroring the fused kernels:
    (correlation, phase_diff, similarity, scores, weights, output).
    """
    T = len(q)
    d = len(q[0])
    dv = len(v[0])

    qn = [math.sqrt(sum(abs(complex(q[i][c])) ** 2 for c in range(d))) for i in range(T)]
    kn = [math.sqrt(sum(abs(complex(k[j][c])) ** 2 for c in range(d))) for j in range(T)]

    corr = [[0j] * T for _ in range(T)]
    dphi = [[0.0] * T for _ in range(T)]
    sim = [[0.0] * T for _ in range(T)]
    scores = [[0.0] * T for _ in range(T)]
    for i in range(T):
        for j in range(T):
            s = 0j
            for c in range(d):
                s += complex(q[i][c]) * complex(k[j][c]).conjugate()
            corr[i][j] = s
            # principal argument in (-pi, pi], phase of an exact zero is 0
            a = cmath.phase(s) if s != 0 else 0.0
            if a <= -math.pi:
                a += 2.0 * math.pi
            dphi[i][j] = a
            sim[i][j] = s.real / (qn[i] * kn[j] + eps)
            w = sim[i][j] * scale
            if phase_decay:
                w *= math.exp(-alpha * abs(a))
            scores[i][j] = w

    weights = [[0.0] * T for _ in range(T)]
    for i in range(T):
        m = max(scores[i])
        exps = [math.exp(scores[i][j] - m) for j in range(T)]
        z = sum(exps)
        for j in range(T):
            weights[i][j] = exps[j] / z

    out = [[0j] * dv for _ in range(T)]
    for i in range(T):
        for j in range(T):
            rot = cmath.exp(1j * dphi[i][j]) if coherent_sum else 1.0
            f = weights[i][j] * rot
            for c in range(dv):
                out[i][c] += f * complex(v[j][c])

    return corr, dphi, sim, scores, weights, out
