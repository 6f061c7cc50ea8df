"""Complex linear-algebra primitives.

Everything in this package runs on dense ``numpy`` arrays of dtype
``complex128`` (a pair of little-endian float64 per entry).  A "complex
matrix" is simply a rank-2 ``complex128`` array; this module provides the
handful of primitives the attention mechanism is built from: sesquilinear
inner products, principal phase extraction, stabilized row softmax and
complex layer normalization.

All functions are pure and never mutate their inputs.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError, DataError, DimensionError

TWO_PI = 2.0 * np.pi


def as_complex_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce ``x`` to a rank-2 complex128 array, validating finiteness."""
    z = np.asarray(x, dtype=np.complex128)
    if z.ndim != 2:
        raise DimensionError(f"{name} must be rank-2, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise DataError(f"{name} contains non-finite entries")
    return z


def cdot(a, b) -> complex:
    """Sesquilinear inner product sum_k a_k * conj(b_k).

    The second argument carries the conjugate.  With this convention the
    product is invariant under a simultaneous global phase rotation of both
    arguments, which is what makes the attention weights rotation-invariant.
    """
    a = np.asarray(a, dtype=np.complex128).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    if a.size != b.size or a.size == 0:
        raise DimensionError(f"cdot: lengths {a.size} and {b.size} incompatible")
    return complex(np.vdot(b, a))  # np.vdot conjugates its FIRST argument


def wrap_phase(x):
    """Map angles (radians) into the principal interval (-pi, pi]."""
    x = np.asarray(x, dtype=np.float64)
    m = np.mod(x, TWO_PI)  # [0, 2*pi)
    out = np.where(m > np.pi, m - TWO_PI, m)
    if out.ndim == 0:
        return float(out)
    return out


def angle(z):
    """Principal argument of ``z`` in (-pi, pi], with angle(0) defined as 0.

    numpy's own ``angle`` returns -pi for arguments on the branch cut with a
    negative imaginary zero and for -0.0+0j inputs; this wrapper pins the
    branch so that the result is always in the half-open interval and exact
    zeros map to phase 0 instead of propagating sign-of-zero artifacts.
    """
    z = np.asarray(z, dtype=np.complex128)
    a = wrap_phase(np.angle(z))
    out = np.where(z == 0, 0.0, a)
    if out.ndim == 0:
        return float(out)
    return out


def row_softmax(w) -> np.ndarray:
    """Row-wise softmax with row-max subtraction for overflow safety."""
    w = np.asarray(w, dtype=np.float64)
    shifted = w - np.max(w, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def complex_layer_norm(z, gain, bias, eps: float = 1e-8) -> np.ndarray:
    """Normalize each row of ``z`` to zero complex mean and unit RMS magnitude.

    Per row t:  z' = gain * (z - mu_t) / sigma_t + bias  where mu_t is the
    complex mean of the row and sigma_t = sqrt(mean |z - mu_t|^2 + eps).
    ``gain`` and ``bias`` are complex vectors broadcast along rows.
    """
    if eps <= 0:
        raise ConfigurationError(f"layer norm eps must be > 0, got {eps}")
    z = np.asarray(z, dtype=np.complex128)
    gain = np.asarray(gain, dtype=np.complex128)
    bias = np.asarray(bias, dtype=np.complex128)
    if gain.shape[-1] != z.shape[-1] or bias.shape[-1] != z.shape[-1]:
        raise DimensionError(
            f"gain/bias length {gain.shape[-1]}/{bias.shape[-1]} "
            f"does not match feature dim {z.shape[-1]}"
        )
    mu = np.mean(z, axis=-1, keepdims=True)
    centered = z - mu
    var = np.mean(centered.real**2 + centered.imag**2, axis=-1, keepdims=True)
    sigma = np.sqrt(var + eps)
    return gain * (centered / sigma) + bias


def frobenius_norm(z) -> float:
    """Euclidean norm of all entries, treating complex entries by modulus."""
    z = np.asarray(z)
    return float(np.sqrt(np.sum(z.real**2 + z.imag**2)))


def rotate(z, theta: float) -> np.ndarray:
    """Multiply every entry by the unit phasor exp(j*theta)."""
    z = np.asarray(z, dtype=np.complex128)
    return z * np.exp(1j * theta)
