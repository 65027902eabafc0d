"""Round tables laid out like the per-emission measurement tables."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Mapping

from ..qstate import Axis
from .rounds import RoundRecord

ROUND_COLUMNS = (
    "round",
    "sim1_basis",
    "sim1_bit",
    "auc_basis",
    "auc_bit",
    "sim2_basis",
    "sim2_bit",
    "class",
    "null_applied",
)
# Results as kets and classical bits after Null adjustment, named after the
# MB / Rs / CB headings of the printed tables.
EXTRA_COLUMNS = (
    "sim1_MB", "sim1_Rs", "sim1_CB",
    "auc_MB", "auc_Rs", "auc_CB",
    "sim2_MB", "sim2_Rs", "sim2_CB",
)

_KETS = {(Axis.Z, 0): "|0>", (Axis.Z, 1): "|1>", (Axis.X, 0): "|+>", (Axis.X, 1): "|->"}
_MB = {Axis.Z: "S_z", Axis.X: "S_x"}


def round_row(rec: RoundRecord) -> dict:
    (a1, a2, a3), (b1, b2, b3) = rec.axes, rec.raw_bits
    c1, c2, c3 = rec.bits
    return {
        "round": rec.round_index,
        "sim1_basis": a1.value,
        "sim1_bit": b1,
        "auc_basis": a3.value,
        "auc_bit": b3,
        "sim2_basis": a2.value,
        "sim2_bit": b2,
        "class": rec.round_class.value,
        "null_applied": int(rec.null_applied),
        "sim1_MB": _MB[a1],
        "sim1_Rs": _KETS[a1, b1],
        "sim1_CB": c1,
        "auc_MB": _MB[a3],
        "auc_Rs": _KETS[a3, b3],
        "auc_CB": c3,
        "sim2_MB": _MB[a2],
        "sim2_Rs": _KETS[a2, b2],
        "sim2_CB": c2,
    }


def write_round_table(
    target: str | Path | io.TextIOBase,
    rounds: Iterable[RoundRecord],
    header: Mapping[str, object] | None = None,
) -> None:
    """Write the CSV; ``header`` entries become leading ``# key=value`` lines."""
    own = isinstance(target, (str, Path))
    fh = open(target, "w", newline="") if own else target
    try:
        for k, v in (header or {}).items():
            fh.write(f"# {k}={v}\n")
        writer = csv.DictWriter(fh, fieldnames=ROUND_COLUMNS + EXTRA_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for rec in rounds:
            writer.writerow(round_row(rec))
    finally:
        if own:
            fh.close()


def read_round_table(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))
