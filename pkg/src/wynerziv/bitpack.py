"""Little-endian, header-free bit packing for quantizer messages.

Fields are laid out back to back; each field is written least
significant bit first, and the bit stream fills bytes starting at bit 0.
"""

import numpy as np


def uint_to_bits(values, width):
    """Expand non-negative integers into ``width`` bits each, LSB first."""
    values = np.asarray(values, dtype=np.int64).ravel()
    if width == 0:
        if np.any(values != 0):
            raise ValueError("non-zero value in a zero-width field")
        return np.zeros(0, dtype=np.uint8)
    if np.any(values < 0) or np.any(values >= (1 << width)):
        raise ValueError(f"value out of range for a {width}-bit field")
    shifts = np.arange(width, dtype=np.int64)
    return ((values[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def bits_to_uint(bits, width, count):
    """Inverse of :func:`uint_to_bits` for ``count`` fields."""
    if width == 0:
        return np.zeros(count, dtype=np.int64)
    bits = np.asarray(bits, dtype=np.int64)[: width * count].reshape(count, width)
    return (bits << np.arange(width, dtype=np.int64)).sum(axis=1)


def pack(bits):
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def unpack(data, n_bits):
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    if bits.size < n_bits:
        raise ValueError(f"need {n_bits} bits, payload has {bits.size}")
    return bits[:n_bits]
