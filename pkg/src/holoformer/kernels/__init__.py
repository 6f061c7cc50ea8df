"""Attention kernel backends.

Three implementations of the same fused forward pass:

* ``reference`` -- scalar triple loop, the correctness oracle;
* ``numpy`` -- vectorized fallback, always available;
* ``compiled`` -- Cython extension, used automatically when built.

The active backend is chosen at import time (compiled if importable, else
numpy) and can be pinned explicitly via :func:`set_backend` or the
``HOLOFORMER_BACKEND`` environment variable.
"""

from __future__ import annotations

import os

from . import numpy_backend

try:
    from . import _fused

    _HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on build
    _fused = None
    _HAVE_COMPILED = False

_BACKENDS = {"numpy": numpy_backend.attention_forward}
_OUTPUT_BACKENDS = {"numpy": numpy_backend.attention_output}
if _HAVE_COMPILED:
    _BACKENDS["compiled"] = _fused.attention_forward
    _OUTPUT_BACKENDS["compiled"] = _fused.attention_output

_active = "compiled" if _HAVE_COMPILED else "numpy"
_env = os.environ.get("HOLOFORMER_BACKEND", "").strip().lower()
if _env:
    if _env not in _BACKENDS:
        raise ImportError(
            f"HOLOFORMER_BACKEND={_env!r} is not available; "
            f"choices: {sorted(_BACKENDS)}"
        )
    _active = _env


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    """Pin the kernel backend ('numpy' or 'compiled')."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choices: {sorted(_BACKENDS)}")
    _active = name


def attention_forward(q, k, v, alpha, eps, scale, phase_decay, coherent_sum,
                      backend: str | None = None):
    """Dispatch the fused attention forward pass to the selected backend."""
    fn = _BACKENDS[backend or _active]
    return fn(q, k, v, alpha, eps, scale, phase_decay, coherent_sum)


def attention_output(q, k, v, alpha, eps, scale, phase_decay, coherent_sum,
                     backend: str | None = None):
    """Output-only forward pass (no trace materialization)."""
    fn = _OUTPUT_BACKENDS[backend or _active]
    return fn(q, k, v, alpha, eps, scale, phase_decay, coherent_sum)
