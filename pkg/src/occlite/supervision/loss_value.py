from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
import pandas as pd

# Reporting order of the terms of the total loss
LOSS_TERMS = ("focal", "sem", "geo", "dice", "lovasz", "depth", "bev")


@dataclass(eq=False)
class LossValue:
    """A rich object that is the output of any occlite.supervision loss."""

    loss_name: str
    value: float
    # Gradient with respect to the logits the loss was computed on
    grad: np.ndarray

    def __float__(self) -> float:
        return self.value

    def __str__(self) -> str:
        return f"Loss: {self.loss_name} = {self.value:.6f}"

    def __repr__(self) -> str:
        return str(self)


@dataclass
class LossBreakdown:
    """Every term of the total loss and their unweighted sum."""

    terms: dict[str, float]

    @property
    def total(self) -> float:
        return total_loss(self.terms.values())

    def to_dict(self) -> dict[str, float]:
        return {**self.terms, "total": self.total}

    def to_df(self) -> pd.DataFrame:
        """Returns a DataFrame with one row per term and a final total row."""
        return pd.DataFrame(
            {
                "term": list(self.terms) + ["total"],
                "value": list(self.terms.values()) + [self.total],
            }
        )

    def __str__(self) -> str:
        return f"Loss breakdown\n{self.to_df()}"


def total_loss(terms: Iterable[float | LossValue]) -> float:
    """Unweighted sum of the given loss terms."""
    return float(sum(float(term) for term in terms))
