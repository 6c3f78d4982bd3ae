"""Hot-loop kernels: compiled extension with a pure-python fallback.

The compiled backend (``_core``, Cython) and the fallback (``_pure``) expose
the same two entry points and are written with identical operation order, so
their outputs are bit-identical.  Selection happens once at import:

* ``UWSNSIM_PURE=1`` in the environment forces the fallback;
* otherwise the compiled extension is used when importable.
"""

import os

if os.environ.get("UWSNSIM_PURE"):
    from . import _pure as impl

    BACKEND = "pure"
else:
    try:
        from . import _core as impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from . import _pure as impl  # type: ignore[no-redef]

        BACKEND = "pure"

integrate_loop = impl.integrate_loop
run_central = impl.run_central

__all__ = ["BACKEND", "integrate_loop", "run_central", "impl"]
