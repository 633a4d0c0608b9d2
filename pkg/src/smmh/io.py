"""File formats: item banks, response matrices, chains and run manifests."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core_models import ItemBank


class DataError(ValueError):
    """Malformed or inconsistent input data."""


def read_item_bank(path) -> ItemBank:
    """Read a CSV with header ``a,b`` and one item per row."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader, [])]
            if header != ["a", "b"]:
                raise DataError(f"{path}: expected header 'a,b', got {','.join(header)!r}")
            rows = [r for r in reader if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read item file {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no items")
    try:
        a, b = np.array([[float(c) for c in r] for r in rows]).T
    except ValueError as exc:
        raise DataError(f"{path}: every row needs two decimal numbers ({exc})") from exc
    if (a <= 0).any():
        raise DataError(f"{path}: discriminations must be positive (row {int(np.argmax(a <= 0)) + 1})")
    return ItemBank.from_arrays(a, b)


def write_item_bank(path, bank: ItemBank) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "b"])
        for a, b in zip(bank.a, bank.b):
            w.writerow([repr(float(a)), repr(float(b))])


def read_responses(path) -> np.ndarray:
    """Read a 0/1 matrix, one person per row. A non-numeric first row is a header."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read response file {path}: {exc}") from exc
    if rows and not all(c.strip() in ("0", "1") for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no responses")
    width = len(rows[0])
    for k, r in enumerate(rows):
        if len(r) != width:
            raise DataError(f"{path}: row {k + 1} has {len(r)} columns, expected {width}")
        if not all(c.strip() in ("0", "1") for c in r):
            raise DataError(f"{path}: row {k + 1} contains values other than 0/1")
    return np.array([[int(c) for c in r] for r in rows], dtype=np.int64)


def write_responses(path, data) -> None:
    data = np.asarray(data, dtype=np.int64)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"item{i + 1}" for i in range(data.shape[1])])
        w.writerows(data.tolist())


def write_csv(path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def write_chain_long(path, result) -> None:
    """Kept Gibbs draws as ``iter,param,index,value`` rows."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "param", "index", "value"])
        for k, it in enumerate(result.iterations):
            it = int(it)
            for name in ("theta", "disc", "easi"):
                for idx, v in enumerate(getattr(result, name)[k]):
                    w.writerow([it, name, idx, repr(float(v))])
            w.writerow([it, "mu_th", 0, repr(float(result.mu_th[k]))])
            w.writerow([it, "mu_al", 0, repr(float(result.mu_al[k]))])


@dataclass
class RunManifest:
    command: str
    seed: int | None
    config: dict = field(default_factory=dict)
    versions: dict = field(default_factory=dict)
    wall_time: dict = field(default_factory=dict)
    acceptance: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    error: str | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def write(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")
