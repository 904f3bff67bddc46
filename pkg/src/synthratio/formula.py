"""Tiny regression formula language: ``y ~ a + b + log1p(c) + pow(d,2)``.

Just enough to express tabular regressions with simple transforms; no
interactions, no nesting.  Categorical predictors expand to dummy columns
against the reference table's levels, numeric predictors may be wrapped in
``log1p`` or ``pow``.
"""

import re
from dataclasses import dataclass

import numpy as np

from .dataset import CATEGORICAL, NUMERIC
from .errors import InputError, MissingValueError

_TERM_RE = re.compile(
    r"^(?:(?P<func>log1p)\((?P<arg>[^\s(),]+)\)"
    r"|pow\((?P<pow_arg>[^\s(),]+)\s*,\s*(?P<exponent>-?\d+(?:\.\d+)?)\)"
    r"|(?P<name>[^\s(),]+))$"
)


@dataclass(frozen=True)
class Term:
    column: str
    transform: str = "identity"  # identity | log1p | pow
    exponent: float = 1.0

    @property
    def label(self):
        if self.transform == "log1p":
            return f"log1p({self.column})"
        if self.transform == "pow":
            exp = self.exponent
            exp_str = str(int(exp)) if float(exp).is_integer() else str(exp)
            return f"pow({self.column},{exp_str})"
        return self.column


@dataclass(frozen=True)
class Formula:
    response: str
    terms: tuple


def parse_formula(text):
    """Parse ``response ~ term + term + ...`` into a Formula."""
    parts = text.split("~")
    if len(parts) != 2:
        raise InputError(f"formula must contain exactly one '~': {text!r}")
    response = parts[0].strip()
    if not response:
        raise InputError("formula has an empty response")
    raw_terms = [t.strip() for t in parts[1].split("+")]
    if not raw_terms or any(not t for t in raw_terms):
        raise InputError(f"formula has an empty term: {text!r}")
    terms = []
    for raw in raw_terms:
        m = _TERM_RE.match(raw)
        if m is None:
            raise InputError(f"cannot parse formula term {raw!r}")
        if m.group("func"):
            terms.append(Term(m.group("arg"), "log1p"))
        elif m.group("pow_arg"):
            terms.append(Term(m.group("pow_arg"), "pow", float(m.group("exponent"))))
        else:
            terms.append(Term(m.group("name")))
    return Formula(response=response, terms=tuple(terms))


def _numeric_column(dataset, name):
    if name not in dataset.names:
        raise InputError(f"unknown column {name!r} in formula")
    if dataset.kinds[name] != NUMERIC:
        raise InputError(f"column {name!r} must be numeric here")
    values = np.asarray(dataset.column(name), dtype=np.float64)
    if np.isnan(values).any():
        row = int(np.flatnonzero(np.isnan(values))[0]) + 1
        raise MissingValueError(f"missing value in column {name!r}, row {row}")
    return values


def build_design(dataset, formula, reference=None):
    """Design matrix (with intercept), response vector, and column names.

    ``reference`` supplies the categorical levels (defaults to ``dataset``
    itself); pass the observed table so synthetic designs align column for
    column.
    """
    reference = dataset if reference is None else reference
    y = _numeric_column(dataset, formula.response)
    columns = [np.ones(dataset.n_rows)]
    names = ["Intercept"]
    for term in formula.terms:
        if term.column not in dataset.names:
            raise InputError(f"unknown column {term.column!r} in formula")
        kind = dataset.kinds[term.column]
        if kind == CATEGORICAL:
            if term.transform != "identity":
                raise InputError(
                    f"transform {term.transform!r} cannot apply to categorical "
                    f"column {term.column!r}"
                )
            levels = reference.levels(term.column)
            labels = dataset.column(term.column)
            for row, lab in enumerate(labels, start=1):
                if lab is None:
                    raise MissingValueError(
                        f"missing value in column {term.column!r}, row {row}"
                    )
                if lab not in levels:
                    raise InputError(
                        f"column {term.column!r} has label {lab!r} absent from "
                        f"the reference table"
                    )
            arr = np.asarray(labels, dtype=object)
            for level in levels[1:]:
                columns.append((arr == level).astype(np.float64))
                names.append(f"{term.column}={level}")
        else:
            values = _numeric_column(dataset, term.column)
            if term.transform == "log1p":
                if values.min() <= -1:
                    raise InputError(
                        f"log1p needs values > -1 in column {term.column!r}"
                    )
                values = np.log1p(values)
            elif term.transform == "pow":
                values = values**term.exponent
            columns.append(values)
            names.append(term.label)
    return np.column_stack(columns), y, tuple(names)
