"""Backend selection for the raster kernels.

The compiled ``_core`` extension is used when importable; otherwise the
pure Python ``_fallback`` module. Set ``FLOODRISK_PURE_PYTHON=1`` to force
the fallback.
"""

import os

import numpy as np

from . import _fallback

FLAT_SEED = _fallback.FLAT_SEED
TRACED = _fallback.TRACED

_NAMES = (
    "d8_directions",
    "mfd_masks",
    "fill_depressions",
    "flow_accumulation",
    "downstream_labels",
    "mfd_grow",
    "squared_edt",
    "jenks_dp",
)


def _load_compiled():
    if os.environ.get("FLOODRISK_PURE_PYTHON", "") not in ("", "0"):
        return None
    try:
        from . import _core
    except ImportError:
        return None
    return _core


_compiled = _load_compiled()
BACKEND = "compiled" if _compiled is not None else "python"


def available_backends():
    """Name -> module for every importable backend."""
    out = {"python": _fallback}
    if _compiled is not None:
        out["compiled"] = _compiled
    else:
        try:
            from . import _core
        except ImportError:
            pass
        else:
            out["compiled"] = _core
    return out


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _u8(a):
    return np.ascontiguousarray(a, dtype=np.uint8)


class Kernels:
    """Uniform, dtype-coercing front end over one backend module."""

    def __init__(self, module):
        self.module = module

    def d8_directions(self, z, valid, cellsize):
        return self.module.d8_directions(_f64(z), _u8(valid), float(cellsize))

    def mfd_masks(self, z, valid):
        return self.module.mfd_masks(_f64(z), _u8(valid))

    def fill_depressions(self, z, valid):
        return self.module.fill_depressions(_f64(z), _u8(valid))

    def flow_accumulation(self, codes, valid):
        return self.module.flow_accumulation(_u8(codes), _u8(valid))

    def downstream_labels(self, codes, valid, seeds):
        return self.module.downstream_labels(_u8(codes), _u8(valid), np.asarray(seeds, dtype=np.int64))

    def mfd_grow(self, mask, valid, seed_labels, seed_order, threshold_cells):
        return self.module.mfd_grow(
            _u8(mask),
            _u8(valid),
            np.asarray(seed_labels, dtype=np.int64),
            [int(s) for s in seed_order],
            float(threshold_cells),
        )

    def squared_edt(self, mask):
        return self.module.squared_edt(_u8(mask))

    def jenks_dp(self, values, weights, k):
        return self.module.jenks_dp(_f64(values), _f64(weights), int(k))


def get(name=None):
    """Kernel front end for backend ``name`` (default: the active one)."""
    if name is None:
        return _default
    return Kernels(available_backends()[name])


_default = Kernels(_compiled if _compiled is not None else _fallback)
for _name in _NAMES:
    globals()[_name] = getattr(_default, _name)
