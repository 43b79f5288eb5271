"""Atomic primitives.

Two families live here:

* numba intrinsics that lower to LLVM atomic instructions on elements of
  ``int64`` numpy arrays.  They are usable only from ``@njit`` code; the
  small ``*_py`` wrappers expose the same instructions to Python callers so
  that interpreter-level operations and compiled kernels synchronize on the
  same memory word.
* ``cas_attr``, a compare-and-set on a Python object attribute.  CPython
  offers no hardware CAS on object references, so the compare and the store
  run under a striped lock.  Plain attribute loads stay lock-free.
"""
from __future__ import annotations

import ctypes
import threading

import numpy as np
from numba import njit, types
from numba.core import cgutils
from numba.extending import intrinsic


def _element_ptr(context, builder, array_type, array, index):
    ary = context.make_array(array_type)(context, builder, array)
    return cgutils.get_item_pointer(context, builder, array_type, ary, [index])


@intrinsic
def fetch_add(typingctx, arr, idx, delta):
    """Atomically add ``delta`` to ``arr[idx]`` and return the old value."""
    def codegen(context, builder, sig, args):
        ptr = _element_ptr(context, builder, sig.args[0], args[0], args[1])
        return builder.atomic_rmw("add", ptr, args[2], "seq_cst")

    return types.int64(arr, idx, delta), codegen


@intrinsic
def load(typingctx, arr, idx):
    def codegen(context, builder, sig, args):
        ptr = _element_ptr(context, builder, sig.args[0], args[0], args[1])
        return builder.load_atomic(ptr, "seq_cst", 8)

    return types.int64(arr, idx), codegen


@intrinsic
def store(typingctx, arr, idx, value):
    def codegen(context, builder, sig, args):
        ptr = _element_ptr(context, builder, sig.args[0], args[0], args[1])
        builder.store_atomic(args[2], ptr, "seq_cst", 8)
        return context.get_dummy_value()

    return types.none(arr, idx, value), codegen


@intrinsic
def store_relaxed(typingctx, arr, idx, value):
    """Unordered single-word store.

    Used for thread-confined slots: it compiles to a plain ``mov`` but stops
    the optimizer from folding a run of increments into one addition.
    """
    def codegen(context, builder, sig, args):
        ptr = _element_ptr(context, builder, sig.args[0], args[0], args[1])
        builder.store_atomic(args[2], ptr, "monotonic", 8)
        return context.get_dummy_value()

    return types.none(arr, idx, value), codegen


@intrinsic
def compare_and_swap(typingctx, arr, idx, expected, new):
    """Atomically replace ``arr[idx]`` by ``new`` if it equals ``expected``."""
    def codegen(context, builder, sig, args):
        ptr = _element_ptr(context, builder, sig.args[0], args[0], args[1])
        pair = builder.cmpxchg(ptr, args[2], args[3], "seq_cst", "seq_cst")
        return builder.extract_value(pair, 1)

    return types.boolean(arr, idx, expected, new), codegen


_libc = ctypes.CDLL(None)
sched_yield = _libc.sched_yield
sched_yield.restype = ctypes.c_int
sched_yield.argtypes = ()


@njit(nogil=True)
def spin_barrier(arrivals, parties):
    """Single-use counting barrier; yields the CPU while waiting."""
    fetch_add(arrivals, 0, 1)
    while load(arrivals, 0) < parties:
        sched_yield()


@njit(nogil=True, cache=True)
def fetch_add_py(arr, delta):
    return fetch_add(arr, 0, delta)


@njit(nogil=True, cache=True)
def load_py(arr):
    return load(arr, 0)


@njit(nogil=True, cache=True)
def cas_py(arr, expected, new):
    return compare_and_swap(arr, 0, expected, new)


def new_word(value: int = 0) -> np.ndarray:
    """A fresh shared 64-bit word for the helpers above."""
    return np.full(1, value, dtype=np.int64)


_STRIPES = tuple(threading.Lock() for _ in range(64))


def cas_attr(obj, name: str, expected, new) -> bool:
    """Set ``obj.<name>`` to ``new`` iff it currently *is* ``expected``."""
    with _STRIPES[(id(obj) >> 4) & 63]:
        if getattr(obj, name) is expected:
            setattr(obj, name, new)
            return True
        return False
