"""Numba acceleration switch for the hot numeric kernels.

Kernels in :mod:`textppm.kernels` are written in a loop style that numba can
compile. By default they are jit-compiled; setting the environment variable
``TEXTPPM_NUMBA=0`` before import selects the plain Python/numpy fallback,
which computes the same results but runs slower (noticeably so for the Gibbs
sampler). ``TEXTPPM_NUMBA=1`` insists on numba and fails loudly if it cannot
be imported.
"""

import os
import warnings

_FLAG = os.environ.get("TEXTPPM_NUMBA", "auto").strip().lower()

NUMBA_ENABLED = False

if _FLAG in ("0", "off", "false", "no"):
    _use_numba = False
elif _FLAG in ("1", "on", "true", "yes"):
    _use_numba = True
else:
    _use_numba = None  # auto: use numba when importable

if _use_numba is False:
    def jit_kernel(func):
        return func
else:
    try:
        from numba import njit

        def jit_kernel(func):
            return njit(cache=True, fastmath=False)(func)

        NUMBA_ENABLED = True
    except ImportError:
        if _use_numba is True:
            raise
        warnings.warn("numba not importable; kernels run un-jitted and will be slow")

        def jit_kernel(func):
            return func


def python_impl(kernel):
    """Return the un-jitted Python function behind a kernel.

    Used by the backend-parity tests and the benchmark to run both execution
    paths side by side within one process.
    """
    return getattr(kernel, "py_func", kernel)
