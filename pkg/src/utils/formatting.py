"""Utility helpers for parsing command inputs and formatting outputs."""
from __future__ import annotations

import math
from typing import List

# CSV 統一的浮點格式，確保重跑時逐位元相同
CSV_FLOAT_FORMAT = "%.12g"

_GRID_DECIMALS = 10


def parse_grid(value: str) -> List[float]:
    """Parse "start:stop:step" (inclusive) or a single number into grid values.

    Examples:
        "0:1:0.5" -> [0.0, 0.5, 1.0]
        "0.3" -> [0.3]
    """
    parts = value.split(":")
    try:
        numbers = [float(part) for part in parts]
    except ValueError:
        raise ValueError(f"grid must be 'start:stop:step' or a number, got {value!r}") from None

    if len(numbers) == 1:
        return [numbers[0]]
    if len(numbers) != 3:
        raise ValueError(f"grid must be 'start:stop:step' or a number, got {value!r}")

    start, stop, step = numbers
    if step <= 0:
        raise ValueError(f"grid step must be positive, got {step}")
    if stop < start:
        raise ValueError(f"grid stop must not be below start, got {value!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, _GRID_DECIMALS) for i in range(count)]


def cell_label(alpha: float, beta: float) -> str:
    """File-name friendly label for one (alpha, beta) cell."""
    return f"alpha{alpha:g}_beta{beta:g}"
