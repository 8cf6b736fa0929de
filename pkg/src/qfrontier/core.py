"""Domain types, dataset ingestion and the dominance matrix.

Every estimator in the package consumes a :class:`Dataset` and returns a
:class:`FrontierFit`. Arrays stored on these objects are made read-only at
construction so instances can be shared freely.
"""

from __future__ import annotations

import csv
import enum
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class FrontierError(Exception):
    """Base class for all errors raised by the package."""


class SchemaError(FrontierError, ValueError):
    """A required column is missing or the table shape is wrong."""


class ParseError(FrontierError, ValueError):
    """A cell could not be read as a finite number."""


class DomainError(FrontierError, ValueError):
    """A value lies outside the domain an operation is defined on."""


class EstimationError(FrontierError, RuntimeError):
    """The underlying mathematical program did not reach optimality."""


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


class LevelKind(str, enum.Enum):
    QUANTILE = "quantile"
    EXPECTILE = "expectile"


@dataclass(frozen=True)
class QuantileLevel:
    """A level in the open unit interval, tagged as quantile or expectile."""

    value: float
    kind: LevelKind = LevelKind.QUANTILE

    def __post_init__(self):
        v = float(self.value)
        if not (0.0 < v < 1.0) or math.isnan(v):
            raise DomainError(f"level must lie in (0,1), got {self.value!r}")
        object.__setattr__(self, "value", v)
        object.__setattr__(self, "kind", LevelKind(self.kind))

    @classmethod
    def quantile(cls, value: float) -> "QuantileLevel":
        return cls(value, LevelKind.QUANTILE)

    @classmethod
    def expectile(cls, value: float) -> "QuantileLevel":
        return cls(value, LevelKind.EXPECTILE)

    def __float__(self):
        return self.value


def as_level(level, kind: LevelKind) -> QuantileLevel:
    """Coerce a float or QuantileLevel to a level of the requested kind."""
    if isinstance(level, QuantileLevel):
        if level.kind is not kind:
            raise DomainError(f"expected a {kind.value} level, got a {level.kind.value} level")
        return level
    return QuantileLevel(level, kind)


@dataclass(frozen=True)
class Dataset:
    """n observations of a d-dimensional nonnegative input and a scalar output.

    Parameters
    ----------
    inputs : array_like, shape (n, d) or (n,)
        Input quantities. A 1-D array is read as a single input.
    outputs : array_like, shape (n,)
        Output quantities.
    labels : sequence of str, optional
        Observation identifiers.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(self.outputs, dtype=float).reshape(-1)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise SchemaError(f"inputs must be an (n, d) array with n, d >= 1, got shape {x.shape}")
        if x.shape[0] != y.shape[0]:
            raise SchemaError(f"{x.shape[0]} input rows but {y.shape[0]} outputs")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise DomainError("inputs and outputs must be finite")
        if np.any(x < 0):
            row = int(np.argwhere(x < 0)[0, 0])
            raise DomainError(f"inputs must be nonnegative (row {row})")
        labels = self.labels
        if labels is not None:
            labels = tuple(str(v) for v in labels)
            if len(labels) != y.shape[0]:
                raise SchemaError(f"{len(labels)} labels for {y.shape[0]} observations")
        object.__setattr__(self, "inputs", _frozen(x))
        object.__setattr__(self, "outputs", _frozen(y))
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]

    def shifted(self, c: float) -> "Dataset":
        """Copy with ``c`` added to every output."""
        return Dataset(self.inputs, self.outputs + c, self.labels)


class Method(str, enum.Enum):
    CQR = "CQR"
    CER = "CER"
    ICQR = "ICQR"
    ICER = "ICER"
    ORDER_ALPHA = "ORDER_ALPHA"
    CONVEXIFIED_ORDER_ALPHA = "CONVEXIFIED_ORDER_ALPHA"
    FDH = "FDH"

    @property
    def is_regression(self) -> bool:
        return self in (Method.CQR, Method.CER, Method.ICQR, Method.ICER)

    @property
    def is_isotonic(self) -> bool:
        return self in (Method.ICQR, Method.ICER)


@dataclass(frozen=True)
class FrontierFit:
    """Result of fitting one estimator at one level.

    ``intercepts`` and ``slopes`` are ``None`` for the partial-frontier
    methods. Residual parts are always filled from ``outputs - fitted``.
    """

    method: Method
    level: QuantileLevel
    fitted: np.ndarray
    residual_pos: np.ndarray
    residual_neg: np.ndarray
    objective: float
    intercepts: Optional[np.ndarray] = None
    slopes: Optional[np.ndarray] = None
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        for name in ("fitted", "residual_pos", "residual_neg", "intercepts", "slopes"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, _frozen(v))

    @property
    def n(self) -> int:
        return self.fitted.shape[0]

    @classmethod
    def from_fitted(cls, method, level, outputs, fitted, objective=float("nan"), **kw):
        r = np.asarray(outputs, float) - np.asarray(fitted, float)
        return cls(method, level, fitted, np.maximum(r, 0.0), np.maximum(-r, 0.0), float(objective), **kw)


@dataclass(frozen=True)
class DominanceMatrix:
    """Binary n x n matrix with ``entries[i, h]`` set when obs i precedes obs h."""

    entries: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.entries)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise SchemaError(f"dominance matrix must be square, got shape {p.shape}")
        if not np.all((p == 0) | (p == 1)):
            raise DomainError("dominance matrix entries must be 0 or 1")
        object.__setattr__(self, "entries", _frozen(p, dtype=bool))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def is_reflexive(self) -> bool:
        return bool(np.all(np.diag(self.entries)))

    def is_transitive(self) -> bool:
        p = self.entries.astype(np.int64)
        # (P @ P)[i, k] > 0 iff some h has p_ih = p_hk = 1
        return not np.any(((p @ p) > 0) & ~self.entries)

    def validate(self) -> "DominanceMatrix":
        if not self.is_reflexive():
            raise DomainError("dominance matrix is not reflexive")
        if not self.is_transitive():
            raise DomainError("dominance matrix is not transitive")
        return self


def dominance_matrix(dataset: Dataset) -> DominanceMatrix:
    """Componentwise dominance: ``p_ih = 1`` iff ``x_i <= x_h`` in every input.

    Equal input vectors dominate each other.
    """
    x = dataset.inputs
    p = np.all(x[:, None, :] <= x[None, :, :], axis=2)
    return DominanceMatrix(p)


def load_dataset(
    path,
    x_columns: Sequence[str],
    y_column: str,
    log_transform: bool = False,
    label_column: Optional[str] = None,
) -> Dataset:
    """Read a comma-separated file with a header row into a :class:`Dataset`.

    With ``log_transform`` the natural log is applied to inputs and output,
    which then must be strictly positive.
    """
    x_columns = list(x_columns)
    if not x_columns:
        raise SchemaError("at least one input column is required")
    if not os.path.exists(path):
        raise SchemaError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path} is empty") from None
        wanted = x_columns + [y_column]
        missing = [c for c in wanted if c not in header]
        if label_column is not None and label_column not in header:
            missing.append(label_column)
        if missing:
            raise SchemaError(f"missing column(s) {missing} in {path}")
        idx = [header.index(c) for c in wanted]
        lab_idx = header.index(label_column) if label_column is not None else None
        rows, labels = [], []
        for r, rec in enumerate(reader):
            if not rec or all(not s.strip() for s in rec):
                continue
            vals = []
            for c, j in zip(wanted, idx):
                cell = rec[j].strip() if j < len(rec) else ""
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"row {r}: column {c!r} is not numeric ({cell!r})") from None
                if not math.isfinite(v):
                    raise ParseError(f"row {r}: column {c!r} is not finite ({cell!r})")
                if log_transform:
                    if v <= 0:
                        raise DomainError(f"row {r}: column {c!r} must be > 0 for log transform, got {v}")
                    v = math.log(v)
                vals.append(v)
            rows.append(vals)
            if lab_idx is not None:
                labels.append(rec[lab_idx].strip() if lab_idx < len(rec) else "")
    if not rows:
        raise SchemaError(f"{path} has no data rows")
    a = np.array(rows, dtype=float)
    return Dataset(a[:, :-1], a[:, -1], tuple(labels) if lab_idx is not None else None)


def write_dataset(dataset: Dataset, path, x_columns: Sequence[str], y_column: str,
                  label_column: Optional[str] = None) -> None:
    """Write ``dataset`` in the format :func:`load_dataset` reads (no log applied)."""
    x_columns = list(x_columns)
    if len(x_columns) != dataset.d:
        raise SchemaError(f"{len(x_columns)} column names for {dataset.d} inputs")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        head = ([label_column] if label_column else []) + x_columns + [y_column]
        w.writerow(head)
        for i in range(dataset.n):
            row = [repr(float(v)) for v in dataset.inputs[i]] + [repr(float(dataset.outputs[i]))]
            if label_column:
                lab = dataset.labels[i] if dataset.labels is not None else str(i)
                row = [lab] + row
            w.writerow(row)
