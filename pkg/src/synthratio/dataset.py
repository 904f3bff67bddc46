"""Tabular ingestion and encoding.

A :class:`Dataset` is an immutable named-column table of numeric and
categorical values.  :func:`encode_pair` turns an (observed, synthetic) pair
into a pair of dense :class:`FeatureMatrix` objects: categoricals are dummy
coded against the observed table's levels and, by default, both tables are
standardized jointly so they live in one coordinate system.  Per-table
scaling would erase exactly the distributional differences the density ratio
is meant to measure, which is why pooled statistics are the default.
"""

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingValueError, ParseError, SchemaError, UnseenLabelError

NUMERIC = "numeric"
CATEGORICAL = "categorical"

_MISSING_TOKENS = ("", "NA")


def _parse_numeric(cell):
    """Return a finite float, or None if the cell is not numeric."""
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


@dataclass(frozen=True)
class Dataset:
    """Named-column table with per-column kind (numeric or categorical).

    Numeric columns are float arrays with NaN marking missing cells;
    categorical columns are tuples of labels with None marking missing.
    Missing cells are tolerated at rest but any operation that consumes
    values raises :class:`MissingValueError`.
    """

    columns: tuple  # of (name, kind)
    values: tuple  # per column: ndarray (numeric) or tuple of str|None

    def __post_init__(self):
        n_rows = {len(v) for v in self.values}
        if len(self.columns) != len(self.values) or len(n_rows) > 1:
            raise SchemaError("columns and values are inconsistent")

    @property
    def n_rows(self):
        return len(self.values[0]) if self.values else 0

    @property
    def names(self):
        return tuple(name for name, _ in self.columns)

    @property
    def kinds(self):
        return dict(self.columns)

    def column(self, name):
        return self.values[self.names.index(name)]

    def levels(self, name):
        """Sorted distinct labels of a categorical column (missing excluded)."""
        if self.kinds[name] != CATEGORICAL:
            raise SchemaError(f"column {name!r} is not categorical")
        return tuple(sorted({v for v in self.column(name) if v is not None}))

    @classmethod
    def from_arrays(cls, named_columns):
        """Build from ``[(name, values), ...]``; float arrays become numeric."""
        columns, values = [], []
        for name, vals in named_columns:
            arr = np.asarray(vals)
            if arr.dtype.kind in "fiu":
                columns.append((name, NUMERIC))
                values.append(arr.astype(np.float64))
            else:
                columns.append((name, CATEGORICAL))
                values.append(tuple(str(v) for v in vals))
        return cls(tuple(columns), tuple(values))

    @classmethod
    def from_matrix(cls, X, names=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if names is None:
            names = [f"X{j + 1}" for j in range(X.shape[1])]
        return cls.from_arrays([(n, X[:, j]) for j, n in enumerate(names)])


def load_csv(path, type_hints=None):
    """Read an RFC-4180 style CSV (UTF-8, comma, header row) into a Dataset.

    Column kinds are inferred by parsing: a column whose non-missing cells all
    parse as finite reals is numeric, anything else is categorical.
    ``type_hints`` maps column names to kinds and overrides inference; a
    hinted-numeric column with an unparsable cell is a parse error naming the
    column and (1-based) data row.  ``NA`` and empty cells become missing.
    """
    type_hints = dict(type_hints or {})
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = rows[0]
    if len(set(header)) != len(header):
        raise ParseError(f"{path}: duplicate column names in header")
    unknown = set(type_hints) - set(header)
    if unknown:
        raise ParseError(f"{path}: type hints for unknown columns {sorted(unknown)}")
    p = len(header)
    for i, row in enumerate(rows[1:], start=1):
        if len(row) != p:
            raise ParseError(f"{path}: row {i} has {len(row)} fields, expected {p}")
    raw_cols = list(zip(*rows[1:])) if len(rows) > 1 else [()] * p
    columns, values = [], []
    for name, cells in zip(header, raw_cols):
        parsed = [None if c in _MISSING_TOKENS else c for c in cells]
        numeric = [None if c is None else _parse_numeric(c) for c in parsed]
        hinted = type_hints.get(name)
        if hinted not in (None, NUMERIC, CATEGORICAL):
            raise ParseError(f"{path}: invalid type hint {hinted!r} for column {name!r}")
        inferred_numeric = all(
            num is not None for cell, num in zip(parsed, numeric) if cell is not None
        )
        kind = hinted if hinted is not None else (NUMERIC if inferred_numeric else CATEGORICAL)
        if kind == NUMERIC:
            if not inferred_numeric:
                bad = next(
                    i
                    for i, (cell, num) in enumerate(zip(parsed, numeric), start=1)
                    if cell is not None and num is None
                )
                raise ParseError(
                    f"{path}: column {name!r}, row {bad}: cannot parse as numeric"
                )
            col = np.array(
                [np.nan if num is None else num for num in numeric], dtype=np.float64
            )
        else:
            col = tuple(parsed)
        columns.append((name, kind))
        values.append(col)
    return Dataset(tuple(columns), tuple(values))


@dataclass(frozen=True)
class PairEncoder:
    """Fitted encoding transform: dummy coding plus optional pooled scaling.

    Holds everything needed to map a raw Dataset with the observed table's
    schema onto the encoded coordinate system of an existing fit.
    """

    columns: tuple  # (name, kind)
    levels: dict  # categorical column -> full observed level tuple
    derived_names: tuple  # names after dummy coding, before dropping
    kept: tuple  # bool per derived column (zero-variance columns dropped)
    means: "tuple | None"  # pooled means of kept columns (None if unscaled)
    sds: "tuple | None"

    @property
    def output_names(self):
        return tuple(n for n, keep in zip(self.derived_names, self.kept) if keep)

    def transform(self, dataset, table_label="data"):
        """Encode a Dataset onto the fitted coordinate system."""
        if tuple(dataset.columns) != tuple(self.columns):
            raise SchemaError(
                f"{table_label}: schema mismatch, expected columns "
                f"{list(self.columns)}, got {list(dataset.columns)}"
            )
        raw = _raw_encode(dataset, self.levels, table_label)
        data = raw[:, np.asarray(self.kept, dtype=bool)]
        if self.means is not None:
            data = (data - np.asarray(self.means)) / np.asarray(self.sds)
        return data

    def to_dict(self):
        return {
            "columns": [list(c) for c in self.columns],
            "levels": {k: list(v) for k, v in self.levels.items()},
            "derived_names": list(self.derived_names),
            "kept": [bool(k) for k in self.kept],
            "means": None if self.means is None else list(self.means),
            "sds": None if self.sds is None else list(self.sds),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            columns=tuple((str(n), str(k)) for n, k in d["columns"]),
            levels={k: tuple(v) for k, v in d["levels"].items()},
            derived_names=tuple(d["derived_names"]),
            kept=tuple(bool(k) for k in d["kept"]),
            means=None if d["means"] is None else tuple(d["means"]),
            sds=None if d["sds"] is None else tuple(d["sds"]),
        )


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense numeric matrix, row-aligned with its source Dataset."""

    data: np.ndarray
    column_names: tuple
    scaling: "tuple | None"  # (means, sds) per column, or None
    encoder: PairEncoder = field(repr=False, default=None)

    @property
    def n_rows(self):
        return self.data.shape[0]

    @property
    def n_cols(self):
        return self.data.shape[1]

    def destandardized(self):
        """Undo the stored scaling, recovering the raw encoded values."""
        if self.scaling is None:
            return self.data.copy()
        means, sds = self.scaling
        return self.data * np.asarray(sds) + np.asarray(means)


def _raw_encode(dataset, levels, table_label):
    """Dummy-code a Dataset against reference levels; reject missing cells."""
    blocks = []
    for name, kind in dataset.columns:
        col = dataset.column(name)
        if kind == NUMERIC:
            arr = np.asarray(col, dtype=np.float64)
            if np.isnan(arr).any():
                row = int(np.flatnonzero(np.isnan(arr))[0]) + 1
                raise MissingValueError(
                    f"{table_label}: missing value in column {name!r}, row {row}"
                )
            blocks.append(arr[:, None])
        else:
            table_levels = levels[name]
            for row, label in enumerate(col, start=1):
                if label is None:
                    raise MissingValueError(
                        f"{table_label}: missing value in column {name!r}, row {row}"
                    )
                if label not in table_levels:
                    raise UnseenLabelError(
                        f"{table_label}: column {name!r} has label {label!r} "
                        f"not present in the observed data"
                    )
            # reference level = alphabetically first observed level
            labels = np.asarray(col, dtype=object)
            dummies = np.column_stack(
                [(labels == lv).astype(np.float64) for lv in table_levels[1:]]
            ) if len(table_levels) > 1 else np.empty((len(col), 0))
            blocks.append(dummies)
    return np.hstack(blocks) if blocks else np.empty((dataset.n_rows, 0))


def _derived_names(columns, levels):
    names = []
    for name, kind in columns:
        if kind == NUMERIC:
            names.append(name)
        else:
            names.extend(f"{name}={lv}" for lv in levels[name][1:])
    return tuple(names)


def encode_pair(observed, synthetic, standardize=True):
    """Encode an (observed, synthetic) pair into aligned feature matrices.

    Both tables must share the schema, and every synthetic label must occur
    in the observed table.  Dummy coding uses the alphabetically first
    observed level as reference (k-1 columns per categorical).  Pooled
    zero-variance columns are dropped with a warning.  With ``standardize``
    set, the pooled row-union mean and standard deviation (ddof=1) of each
    remaining column are applied to both tables.

    Returns
    -------
    (FeatureMatrix, FeatureMatrix)
        Row-aligned with ``observed`` and ``synthetic`` respectively; both
        carry the fitted :class:`PairEncoder`.
    """
    if tuple(observed.columns) != tuple(synthetic.columns):
        raise SchemaError(
            f"schema mismatch: observed columns {list(observed.columns)} vs "
            f"synthetic columns {list(synthetic.columns)}"
        )
    levels = {
        name: observed.levels(name)
        for name, kind in observed.columns
        if kind == CATEGORICAL
    }
    raw_obs = _raw_encode(observed, levels, "observed")
    raw_syn = _raw_encode(synthetic, levels, "synthetic")
    derived = _derived_names(observed.columns, levels)

    pooled = np.vstack([raw_obs, raw_syn])
    means = pooled.mean(axis=0)
    sds = pooled.std(axis=0, ddof=1) if pooled.shape[0] > 1 else np.zeros(pooled.shape[1])
    kept = sds > 0
    dropped = [n for n, keep in zip(derived, kept) if not keep]
    if dropped:
        warnings.warn(
            f"dropping zero-variance pooled column(s): {dropped}", stacklevel=2
        )

    if standardize:
        scale_means = tuple(means[kept])
        scale_sds = tuple(sds[kept])
    else:
        scale_means = scale_sds = None

    encoder = PairEncoder(
        columns=tuple(observed.columns),
        levels=levels,
        derived_names=derived,
        kept=tuple(bool(k) for k in kept),
        means=scale_means,
        sds=scale_sds,
    )
    out_names = encoder.output_names
    scaling = (scale_means, scale_sds) if standardize else None
    fm_obs = FeatureMatrix(encoder.transform(observed, "observed"), out_names,
                           scaling, encoder)
    fm_syn = FeatureMatrix(encoder.transform(synthetic, "synthetic"), out_names,
                           scaling, encoder)
    return fm_obs, fm_syn
