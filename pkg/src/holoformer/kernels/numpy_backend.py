"""Vectorized numpy implementation of the fused attention kernel."""

from __future__ import annotations

import numpy as np

from .. import ctensor


def attention_forward(q, k, v, alpha, eps, scale, phase_decay, coherent_sum):
    """Fused phase-aware attention forward pass on T x d complex arrays.

    Returns (correlation, phase_diff, similarity, scores, weights, output).
    """
    q = np.ascontiguousarray(q, dtype=np.complex128)
    k = np.ascontiguousarray(k, dtype=np.complex128)
    v = np.ascontiguousarray(v, dtype=np.complex128)

    corr = q @ k.conj().T
    dphi = ctensor.angle(corr)
    qn = np.sqrt(np.sum(q.real**2 + q.imag**2, axis=1))
    kn = np.sqrt(np.sum(k.real**2 + k.imag**2, axis=1))
    sim = corr.real / (np.outer(qn, kn) + eps)

    scores = sim * scale
    if phase_decay:
        scores = scores * np.exp(-alpha * np.abs(dphi))
    weights = ctensor.row_softmax(scores)

    if coherent_sum:
        mix = weights * np.exp(1j * dphi)
    else:
        mix = weights.astype(np.complex128)
    out = mix @ v
    return corr, dphi, sim, scores, weights, out


def attention_output(q, k, v, alpha, eps, scale, phase_decay, coherent_sum):
    """Output-only forward pass; skips trace materialization.

    Same arithmetic as :func:`attention_forward` with buffers reused, for
    callers that only consume the attended values.
    """
    q = np.ascontiguousarray(q, dtype=np.complex128)
    k = np.ascontiguousarray(k, dtype=np.complex128)
    v = np.ascontiguousarray(v, dtype=np.complex128)

    corr = q @ k.conj().T
    ang = np.arctan2(corr.imag, corr.real)
    np.copyto(ang, 0.0, where=(corr == 0))
    np.copyto(ang, np.pi, where=(ang == -np.pi))

    qn = np.sqrt(np.sum(q.real**2 + q.imag**2, axis=1))
    kn = np.sqrt(np.sum(k.real**2 + k.imag**2, axis=1))
    w = corr.real * scale
    w /= np.outer(qn, kn) + eps
    if phase_decay:
        gate = np.abs(ang)
        gate *= -alpha
        np.exp(gate, out=gate)
        w *= gate
    w -= w.max(axis=-1, keepdims=True)
    np.exp(w, out=w)
    w /= w.sum(axis=-1, keepdims=True)

    if coherent_sum:
        mix = corr  # reuse the correlation buffer for the complex mix
        np.multiply(np.cos(ang), w, out=mix.real)
        np.multiply(np.sin(ang), w, out=mix.imag)
        return mix @ v
    return w.astype(np.complex128) @ v
