"""Hot construction kernels.

The numba backend is used by default. Set ``MDVRP_BACKEND=numpy`` before import
to run the pure-numpy implementation instead (also used automatically when
numba is not importable). Both backends consume random numbers identically.
"""
import importlib
import os

_NAMES = (
    "pick", "construct_depot", "construct_interleaved", "route_set_cost", "local_update",
    "colony_search", "decode_greedy",
)


def get_backend(name: str):
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown kernel backend {name!r}")
    return importlib.import_module(f"{__name__}._{name}")


def _default():
    wanted = os.environ.get("MDVRP_BACKEND", "numba").strip().lower()
    if wanted == "numba":
        try:
            return "numba", get_backend("numba")
        except ImportError:
            return "numpy", get_backend("numpy")
    return wanted, get_backend(wanted)


BACKEND, _impl = _default()

from ._numpy import power  # noqa: E402  shared by both backends

pick = _impl.pick
construct_depot = _impl.construct_depot
construct_interleaved = _impl.construct_interleaved
route_set_cost = _impl.route_set_cost
local_update = _impl.local_update
colony_search = _impl.colony_search
decode_greedy = _impl.decode_greedy

__all__ = ["BACKEND", "get_backend", "power", *_NAMES]
