from __future__ import annotations

from typing import Literal

import pandas as pd
from tabulate import tabulate

from occlite.errors import UsageError

TableFormat = Literal["csv", "markdown"]
TABLE_FORMATS = ("csv", "markdown")


def emit_frame(df: pd.DataFrame, fmt: str) -> str:
    """Renders a DataFrame as CSV or a GitHub-style markdown table. Column
    order is the DataFrame's.
    """
    if fmt == "csv":
        return df.to_csv(index=False, lineterminator="\n")
    if fmt == "markdown":
        rows = df.astype(object).where(df.notna(), "").values.tolist()
        return (
            tabulate(
                rows,
                headers=list(df.columns),
                tablefmt="github",
                disable_numparse=True,
            )
            + "\n"
        )
    raise UsageError(
        f"Unknown table format '{fmt}', expected one of {list(TABLE_FORMATS)}"
    )
