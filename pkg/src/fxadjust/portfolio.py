"""Reading portfolio / result files and writing byte-stable CSV.

A portfolio file has up to three sections::

    # comments start with '#'
    [fx]
    nu = 0
    tau = 0.1

    [borrowers]
    id,pd,sigma,r
    A,0.01,0.2,0

    [pairs]
    id1,id2,rho
    A,B,0.2

Borrowers may carry the optional columns ``a0,mu,debt,f0`` describing the
asset process and the debt; these are needed for ``simulate --mode gbm_path``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np

from .errors import FxAdjustError
from .model import AssetProcess, BorrowerParams, DebtSpec

BORROWER_COLUMNS = ("id", "pd", "sigma", "r")
PROCESS_COLUMNS = ("a0", "mu", "debt", "f0")
PAIR_COLUMNS = ("id1", "id2", "rho")
FX_KEYS = ("nu", "tau")
SIG_DIGITS = 12


class InputError(FxAdjustError):
    """Malformed or inconsistent input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        super().__init__(message)

    def __str__(self) -> str:
        where = ":".join(str(x) for x in (self.path, self.line) if x is not None)
        msg = super().__str__()
        return f"{where}: {msg}" if where else msg


@dataclass
class BorrowerRow:
    id: str
    params: BorrowerParams
    line: int
    asset: AssetProcess | None = None
    debt: DebtSpec | None = None


@dataclass
class PairRow:
    id1: str
    id2: str
    rho: float
    line: int


@dataclass
class Portfolio:
    borrowers: dict[str, BorrowerRow] = field(default_factory=dict)
    pairs: list[PairRow] = field(default_factory=list)
    fx: dict[str, float] = field(default_factory=dict)
    path: str | None = None


def format_number(x: float) -> str:
    """Fixed notation with 12 significant digits, trailing zeros trimmed."""
    x = float(x)
    if x == 0.0:
        return "0"
    return np.format_float_positional(x, precision=SIG_DIGITS, unique=False, fractional=False, trim="-")


def write_csv(out: TextIO, header: Iterable[str], rows: Iterable[Iterable[object]]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([format_number(v) if isinstance(v, float) else v for v in row])


def _content_lines(text: str) -> Iterator[tuple[int, str]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield lineno, line


def _parse_float(value: str, column: str, path: str | None, line: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise InputError(f"{column}: not a number: {value!r}", path, line) from None


def _split(line: str) -> list[str]:
    return [cell.strip() for cell in next(csv.reader(io.StringIO(line)))]


class _Table:
    """Header-indexed rows of one CSV section."""

    def __init__(self, path: str | None, required: tuple[str, ...], optional: tuple[str, ...] = ()):
        self.path = path
        self.required = required
        self.optional = optional
        self.columns: list[str] | None = None
        self.rows: list[tuple[int, dict[str, str]]] = []

    def feed(self, lineno: int, line: str) -> None:
        cells = _split(line)
        if self.columns is None:
            missing = [c for c in self.required if c not in cells]
            if missing:
                raise InputError(f"header: missing column(s) {', '.join(missing)}", self.path, lineno)
            unknown = [c for c in cells if c not in self.required + self.optional]
            if unknown:
                raise InputError(f"header: unknown column(s) {', '.join(unknown)}", self.path, lineno)
            self.columns = cells
            return
        if len(cells) != len(self.columns):
            raise InputError(
                f"row: expected {len(self.columns)} fields, got {len(cells)}", self.path, lineno
            )
        self.rows.append((lineno, dict(zip(self.columns, cells))))


def parse_portfolio(text: str, path: str | None = None) -> Portfolio:
    """Parse and validate a portfolio document.

    Raises :class:`InputError` for syntax errors, bad values, duplicate ids
    and pairs referring to unknown borrowers. Positive semidefiniteness of
    each pair is left to the model types.
    """
    borrowers = _Table(path, BORROWER_COLUMNS, PROCESS_COLUMNS)
    pairs = _Table(path, PAIR_COLUMNS)
    fx: dict[str, float] = {}
    section = None
    for lineno, line in _content_lines(text):
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("fx", "borrowers", "pairs"):
                raise InputError(f"section: unknown section [{section}]", path, lineno)
            continue
        if section is None:
            raise InputError("section: content before the first [section] header", path, lineno)
        if section == "fx":
            key, sep, value = line.partition("=")
            key = key.strip().lower()
            if not sep or key not in FX_KEYS:
                raise InputError(f"fx: expected 'nu = <number>' or 'tau = <number>', got {line!r}", path, lineno)
            fx[key] = _parse_float(value.strip(), key, path, lineno)
        elif section == "borrowers":
            borrowers.feed(lineno, line)
        else:
            pairs.feed(lineno, line)

    portfolio = Portfolio(fx=fx, path=path)
    for lineno, row in borrowers.rows:
        bid = row["id"]
        if not bid:
            raise InputError("id: empty borrower id", path, lineno)
        if bid in portfolio.borrowers:
            raise InputError(f"id: duplicate borrower id {bid!r}", path, lineno)
        values = {c: _parse_float(row[c], c, path, lineno) for c in ("pd", "sigma", "r")}
        try:
            params = BorrowerParams(values["pd"], values["sigma"], values["r"])
        except FxAdjustError as exc:
            raise InputError(str(exc), path, lineno) from None
        entry = BorrowerRow(bid, params, lineno)
        present = [c for c in PROCESS_COLUMNS if row.get(c, "") != ""]
        if present:
            if len(present) != len(PROCESS_COLUMNS):
                absent = [c for c in PROCESS_COLUMNS if c not in present]
                raise InputError(f"{absent[0]}: process columns must be given together", path, lineno)
            proc = {c: _parse_float(row[c], c, path, lineno) for c in PROCESS_COLUMNS}
            try:
                entry.asset = AssetProcess(proc["a0"], proc["mu"], params.sigma)
                entry.debt = DebtSpec(proc["debt"], proc["f0"])
            except FxAdjustError as exc:
                raise InputError(str(exc), path, lineno) from None
        portfolio.borrowers[bid] = entry

    for lineno, row in pairs.rows:
        for key in ("id1", "id2"):
            if row[key] not in portfolio.borrowers:
                raise InputError(f"{key}: unknown borrower id {row[key]!r}", path, lineno)
        rho = _parse_float(row["rho"], "rho", path, lineno)
        if not -1.0 <= rho <= 1.0:
            raise InputError(f"rho: must lie in [-1, 1], got {rho!r}", path, lineno)
        portfolio.pairs.append(PairRow(row["id1"], row["id2"], rho, lineno))
    return portfolio


def load_portfolio(path: str | Path) -> Portfolio:
    return parse_portfolio(Path(path).read_text(), str(path))


def read_table(text: str, required: tuple[str, ...], optional: tuple[str, ...] = (),
               path: str | None = None) -> list[tuple[int, dict[str, str]]]:
    """Rows of a plain header + CSV file (comments allowed), keyed by column."""
    table = _Table(path, required, optional)
    for lineno, line in _content_lines(text):
        table.feed(lineno, line)
    if table.columns is None:
        raise InputError("header: file is empty", path, 1)
    return table.rows


def parse_key_values(text: str, keys: tuple[str, ...], path: str | None = None) -> dict[str, str]:
    """``key = value`` lines; an optional single ``[section]`` header is ignored."""
    out: dict[str, str] = {}
    for lineno, line in _content_lines(text):
        if line.startswith("[") and line.endswith("]"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower()
        if not sep or key not in keys:
            raise InputError(f"{key or 'line'}: expected one of {', '.join(keys)} as 'key = value'", path, lineno)
        out[key] = value.strip()
    return out
