"""Numerics for the non-self-adjoint almost Mathieu family h(delta) and its intertwiner."""

import os

__version__ = "0.1.0"

# ARTIFACT_THREADS caps BLAS/OpenMP threads; it only takes effect before numpy is first imported.
_threads = os.environ.get("ARTIFACT_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)
