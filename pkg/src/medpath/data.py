"""Observed mediation datasets and their CSV interchange format.

CSV dialect: comma separated, UTF-8, header row required, '.' decimal.
Column-to-role mapping is the caller's job (the CLI does it via flags).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

__all__ = ["Dataset"]


@dataclass(frozen=True)
class Dataset:
    """A complete-case sample of exposure, mediator, outcome and confounders."""

    exposure: np.ndarray
    mediator: np.ndarray
    outcome: np.ndarray
    confounders: np.ndarray  # shape (n, p), p may be 0
    exposure_name: str = "S"
    mediator_name: str = "M"
    outcome_name: str = "Y"
    confounder_names: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        s = np.asarray(self.exposure, dtype=float)
        m = np.asarray(self.mediator, dtype=float)
        y = np.asarray(self.outcome, dtype=float)
        w = np.asarray(self.confounders, dtype=float)
        if w.ndim == 1:
            w = w[:, None]
        if w.size == 0:
            w = w.reshape(len(s), 0)
        object.__setattr__(self, "exposure", s)
        object.__setattr__(self, "mediator", m)
        object.__setattr__(self, "outcome", y)
        object.__setattr__(self, "confounders", w)
        n = len(s)
        if len(m) != n or len(y) != n or w.shape[0] != n:
            raise InputError("all columns must have the same length")
        if n == 0:
            raise InputError("dataset is empty")
        for name, col in (("exposure", s), ("mediator", m), ("outcome", y)):
            if not np.all(np.isfinite(col)):
                raise InputError(f"{name} contains missing or non-finite values")
        if w.size and not np.all(np.isfinite(w)):
            raise InputError("confounders contain missing or non-finite values")
        names = tuple(self.confounder_names)
        if not names:
            names = tuple(f"X{j + 1}" for j in range(w.shape[1]))
        if len(names) != w.shape[1]:
            raise InputError("confounder_names length must match confounder columns")
        object.__setattr__(self, "confounder_names", names)

    @property
    def n(self) -> int:
        return len(self.exposure)

    @property
    def n_confounders(self) -> int:
        return self.confounders.shape[1]

    @classmethod
    def from_csv(
        cls,
        path,
        exposure: str,
        mediator: str,
        outcome: str,
        confounders: tuple[str, ...] = (),
    ) -> "Dataset":
        """Load a dataset from a headered CSV, mapping columns to roles by name."""
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise InputError(f"{path}: missing header row")
            missing = [
                c
                for c in (exposure, mediator, outcome, *confounders)
                if c not in reader.fieldnames
            ]
            if missing:
                raise InputError(f"{path}: columns not found: {', '.join(missing)}")
            rows = list(reader)
        if not rows:
            raise InputError(f"{path}: no data rows")

        def column(name):
            try:
                return np.array([float(r[name]) for r in rows])
            except (TypeError, ValueError) as exc:
                raise InputError(f"{path}: non-numeric value in column {name!r}") from exc

        w = (
            np.column_stack([column(c) for c in confounders])
            if confounders
            else np.empty((len(rows), 0))
        )
        return cls(
            exposure=column(exposure),
            mediator=column(mediator),
            outcome=column(outcome),
            confounders=w,
            exposure_name=exposure,
            mediator_name=mediator,
            outcome_name=outcome,
            confounder_names=tuple(confounders),
        )

    def to_csv(self, path) -> None:
        """Write the dataset with a header row; floats use shortest round-trip form."""
        header = [self.exposure_name, self.mediator_name, self.outcome_name]
        header += list(self.confounder_names)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(self.n):
                row = [
                    repr(float(self.exposure[i])),
                    repr(float(self.mediator[i])),
                    repr(float(self.outcome[i])),
                ]
                row += [repr(float(v)) for v in self.confounders[i]]
                writer.writerow(row)
