"""Kernel selection: compiled extension when importable, else pure Python.

Set ``DECKPROB_PURE=1`` to force the Python kernel.
"""

from __future__ import annotations

import os

from deckprob.mc import _pykernel

PyKernel = _pykernel.Kernel

try:
    from deckprob.mc._ckernel import Kernel as CKernel
except ImportError:  # extension not built
    CKernel = None

if CKernel is not None and not os.environ.get("DECKPROB_PURE"):
    Kernel = CKernel
    COMPILED = True
else:
    Kernel = PyKernel
    COMPILED = False


def kernel_class(pure: bool | None = None):
    """``pure=None`` follows the import-time choice."""
    if pure is None:
        return Kernel
    if pure:
        return PyKernel
    if CKernel is None:
        raise ImportError("compiled kernel is not available in this build")
    return CKernel
