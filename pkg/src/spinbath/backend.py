"""Numerical backend selection.

The hot kernels exist twice: a compiled Cython extension (``spinbath._core``)
and a vectorized numpy fallback (``spinbath._core_py``) with identical
signatures.  The extension is preferred when importable; set the environment
variable SPINBATH_BACKEND to ``python`` or ``compiled`` to force one side.
Everything downstream calls through the names re-exported here, so the choice
is a process-wide, import-time decision.
"""

import os

_requested = os.environ.get("SPINBATH_BACKEND", "auto").strip().lower()

if _requested in ("auto", ""):
    try:
        from . import _core as _impl

        BACKEND_NAME = "compiled"
    except ImportError:
        from . import _core_py as _impl

        BACKEND_NAME = "python"
elif _requested == "compiled":
    from . import _core as _impl

    BACKEND_NAME = "compiled"
elif _requested == "python":
    from . import _core_py as _impl

    BACKEND_NAME = "python"
else:
    raise ImportError(
        f"SPINBATH_BACKEND={_requested!r} not understood; "
        "use 'auto', 'compiled' or 'python'"
    )

gamma0 = _impl.gamma0
exp_scaled_e1 = _impl.exp_scaled_e1
nu_tilde = _impl.nu_tilde
nu_tilde_prime = _impl.nu_tilde_prime
dispersion_radicand = _impl.dispersion_radicand
dispersion = _impl.dispersion
dispersion_prime = _impl.dispersion_prime
kernel_integrands = _impl.kernel_integrands
dinf_integrand = _impl.dinf_integrand


def backend_name():
    """Name of the active implementation: 'compiled' or 'python'."""
    return BACKEND_NAME
