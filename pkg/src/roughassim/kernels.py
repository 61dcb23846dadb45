"""Backend selection for the hot p-variation kernel.

The compiled Cython kernel is preferred; the pure-numpy fallback is used
when the extension was not built.  Both expose the same ``pvar_max_sum``
contract and are cross-checked in the test suite and in
``benchmarks/bench_pvariation.py``.
"""

try:
    from ._pvar_cy import pvar_max_sum  # noqa: F401

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    from ._pvar_py import pvar_max_sum  # noqa: F401

    BACKEND = "python"
