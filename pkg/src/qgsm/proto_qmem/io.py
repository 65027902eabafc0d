"""Snapshot export/import and the challenge-table CSV."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from ..runtime import BasisReport
from .memory import CODE_OF_AXIS, AucLedger, QuantumMemoryBank

SNAPSHOT_VERSION = 1
CHALLENGE_COLUMNS = ("position", "auc_basis", "auc_bit", "sim_basis", "sim_bit", "matched", "key_bit")

_AXIS_CHARS = "ZX"
_AXIS_BYTES = np.frombuffer(_AXIS_CHARS.encode("ascii"), dtype=np.uint8)


def _pack_axes(codes: np.ndarray) -> str:
    return _AXIS_BYTES[codes].tobytes().decode("ascii")


def _pack_bits(values: np.ndarray) -> str:
    return (values.astype(np.uint8) + ord("0")).tobytes().decode("ascii")


def _unpack(text: str, alphabet: str) -> np.ndarray:
    raw = np.frombuffer(text.encode("ascii"), dtype=np.uint8)
    out = np.full(raw.shape, 255, dtype=np.uint8)
    for code, ch in enumerate(alphabet):
        out[raw == ord(ch)] = code
    if (out == 255).any():
        raise ValueError(f"snapshot field contains characters outside {alphabet!r}")
    return out


def snapshot_dict(ledger: AucLedger, bank: QuantumMemoryBank) -> dict:
    if ledger.N != bank.capacity:
        raise ValueError("ledger and bank sizes differ")
    return {
        "version": SNAPSHOT_VERSION,
        "N": ledger.N,
        "seed": ledger.seed,
        "ledger_axes": _pack_axes(ledger.axes),
        "ledger_bits": _pack_bits(ledger.bits),
        "bank_axes": _pack_axes(bank.axes),
        "bank_bits": _pack_bits(bank.bits),
        "consumed": _pack_bits(bank.consumed),
    }


def snapshot_from_dict(data: dict) -> tuple[AucLedger, QuantumMemoryBank]:
    if data.get("version") != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {data.get('version')!r}")
    fields = ("ledger_axes", "ledger_bits", "bank_axes", "bank_bits", "consumed")
    if any(len(data[f]) != data["N"] for f in fields):
        raise ValueError("snapshot field lengths disagree with N")
    ledger = AucLedger(_unpack(data["ledger_axes"], _AXIS_CHARS), _unpack(data["ledger_bits"], "01"), int(data["seed"]))
    bank = QuantumMemoryBank(
        _unpack(data["bank_axes"], _AXIS_CHARS),
        _unpack(data["bank_bits"], "01"),
        _unpack(data["consumed"], "01").astype(bool),
    )
    return ledger, bank


def save_snapshot(path: str | Path, ledger: AucLedger, bank: QuantumMemoryBank) -> Path:
    path = Path(path)
    path.write_text(json.dumps(snapshot_dict(ledger, bank), sort_keys=True))
    return path


def load_snapshot(path: str | Path) -> tuple[AucLedger, QuantumMemoryBank]:
    return snapshot_from_dict(json.loads(Path(path).read_text()))


def challenge_rows(ledger: AucLedger, report: BasisReport) -> list[dict]:
    rows = []
    for pos, axis, bit in zip(report.positions, report.axes, report.bits):
        entry = ledger.entry(pos)
        matched = CODE_OF_AXIS[entry.axis] == CODE_OF_AXIS[axis]
        rows.append(
            {
                "position": pos,
                "auc_basis": entry.axis.value,
                "auc_bit": entry.bit,
                "sim_basis": axis.value,
                "sim_bit": bit,
                "matched": int(matched),
                "key_bit": entry.bit if matched else "",
            }
        )
    return rows


def write_challenge_csv(target, rows: list[dict], header: dict | None = None) -> None:
    """Write rows to a path or open text file; ``header`` becomes ``# k=v`` lines."""
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as fh:
            write_challenge_csv(fh, rows, header)
        return
    for key, value in (header or {}).items():
        target.write(f"# {key}={value}\n")
    writer = csv.DictWriter(target, fieldnames=CHALLENGE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


__all__ = [
    "CHALLENGE_COLUMNS",
    "challenge_rows",
    "load_snapshot",
    "save_snapshot",
    "snapshot_dict",
    "snapshot_from_dict",
    "write_challenge_csv",
]
