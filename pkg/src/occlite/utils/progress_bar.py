from __future__ import annotations

import sys
from collections.abc import Iterable, Sequence
from typing import TypeVar

from tqdm import tqdm

T = TypeVar("T")


def tqdm_wrapper(
    items: Sequence[T] | Iterable[T],
    desc: str | None = None,
    unit: str = "stage",
    disable: bool = False,
) -> Iterable[T]:
    """Progress over a finite list of stages or checks.

    The bar goes to stderr and is cleared when done, so tables printed to
    stdout stay machine-readable.
    """
    items = list(items)
    return tqdm(
        items,
        desc=desc or "Progress",
        total=len(items),
        unit=unit,
        disable=disable,
        file=sys.stderr,
        leave=False,
    )
