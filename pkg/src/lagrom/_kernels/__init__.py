"""Hot numerical kernels with a compiled core and a numpy fallback.

The compiled extension (built from _native.pyx at install time) is preferred
when importable; otherwise the numpy/scipy implementations take over with
identical semantics. Set LAGROM_FORCE_FALLBACK=1 to skip the extension, e.g.
for the comparison benchmark.
"""
import os

if os.environ.get("LAGROM_FORCE_FALLBACK", "").strip().lower() not in ("", "0", "false", "no"):
    from . import _fallback as _impl
else:
    try:
        from . import _native as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _fallback as _impl

IMPL = _impl.IMPL
tridiag_solve = _impl.tridiag_solve
cyclic_tridiag_solve = _impl.cyclic_tridiag_solve
laplacian5_periodic = _impl.laplacian5_periodic
upwind_advect_periodic = _impl.upwind_advect_periodic
bilinear_sample_periodic = _impl.bilinear_sample_periodic
locate_displaced_bilinear = _impl.locate_displaced_bilinear

__all__ = [
    "IMPL",
    "tridiag_solve",
    "cyclic_tridiag_solve",
    "laplacian5_periodic",
    "upwind_advect_periodic",
    "bilinear_sample_periodic",
    "locate_displaced_bilinear",
]
