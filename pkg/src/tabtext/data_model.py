"""Schemas, cell values, and rows shared by every other module.

A table is described by a declarative :class:`TableSchema` (usually loaded from
a YAML sidecar file) and parsed from delimiter-separated text into typed
:class:`Row` records. Missing values keep their original token verbatim so the
"keep original" serialization policy can reproduce them exactly.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Mapping, Optional, Union

import yaml

from .errors import RowParseError, SchemaError, SchemaMismatchError

DEFAULT_MISSING_TOKENS = frozenset({"", "na", "nan", "null"})

PLACEHOLDER = "{value}"


class ColumnKind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    BINARY = "binary"
    FREE_TEXT = "free_text"
    TIMESTAMP = "timestamp"


@dataclass(frozen=True)
class ColumnSpec:
    """One column: its kind plus the text used when serializing it."""

    name: str
    kind: ColumnKind
    label: Optional[str] = None
    descriptive_template: Optional[str] = None
    unit: Optional[str] = None

    def __post_init__(self):
        if not self.name:
            raise SchemaError("column name must be non-empty")
        if self.label is None:
            object.__setattr__(self, "label", self.name)
        if "." in (self.label or "")[-1:]:
            raise SchemaError(f"label for '{self.name}' must not end with a period")
        if self.descriptive_template is not None:
            if self.descriptive_template.count(PLACEHOLDER) != 1:
                raise SchemaError(
                    f"descriptive_template for '{self.name}' must contain exactly "
                    f"one '{PLACEHOLDER}' placeholder"
                )


@dataclass(frozen=True)
class TableMeta:
    table_title: str = ""
    description: str = ""


@dataclass(frozen=True)
class TableSchema:
    meta: TableMeta
    columns: tuple[ColumnSpec, ...]
    entity_column: str
    time_column: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("column names must be unique")
        if self.entity_column not in names:
            raise SchemaError(f"entity_column '{self.entity_column}' is not a declared column")
        if self.time_column is not None and self.time_column not in names:
            raise SchemaError(f"time_column '{self.time_column}' is not a declared column")
        n_ts = sum(1 for c in self.columns if c.kind is ColumnKind.TIMESTAMP)
        if n_ts > 1:
            raise SchemaError("at most one column may have kind 'timestamp'")

    def column(self, name: str) -> ColumnSpec:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def value_columns(self) -> tuple[ColumnSpec, ...]:
        """Columns that carry data, i.e. everything but entity/time columns."""
        skip = {self.entity_column, self.time_column}
        return tuple(c for c in self.columns if c.name not in skip)


@dataclass(frozen=True)
class CellValue:
    """One cell. Missing cells keep the original token in ``raw``."""

    raw: str
    parsed: Optional[float] = None
    missing: bool = False

    @staticmethod
    def present(raw: str) -> "CellValue":
        return CellValue(raw, _parse_finite(raw), False)

    @staticmethod
    def absent(original_token: str) -> "CellValue":
        return CellValue(original_token, None, True)

    @property
    def original_token(self) -> str:
        return self.raw


def _parse_finite(raw: str) -> Optional[float]:
    try:
        value = float(raw)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


@dataclass(frozen=True)
class Row:
    entity_id: str
    cells: Mapping[str, CellValue]
    timestamp: Optional[float] = None


def load_schema(path: Union[str, Path]) -> TableSchema:
    """Load a YAML schema sidecar file."""
    doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    return schema_from_dict(doc)


def schema_from_dict(doc: dict) -> TableSchema:
    try:
        meta = TableMeta(
            table_title=doc.get("meta", {}).get("table_title", ""),
            description=doc.get("meta", {}).get("description", ""),
        )
        columns = tuple(
            ColumnSpec(
                name=c["name"],
                kind=ColumnKind(c["kind"]),
                label=c.get("label"),
                descriptive_template=c.get("descriptive_template"),
                unit=c.get("unit"),
            )
            for c in doc["columns"]
        )
        return TableSchema(
            meta=meta,
            columns=columns,
            entity_column=doc["entity_column"],
            time_column=doc.get("time_column"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"malformed schema document: {exc}") from exc


def parse_table(
    data: Union[bytes, str, IO[str]],
    schema: TableSchema,
    *,
    delimiter: str = ",",
    missing_tokens: Iterable[str] = DEFAULT_MISSING_TOKENS,
) -> list[Row]:
    """Parse delimiter-separated text with a header row into typed rows.

    Fields whose lowercased value is in ``missing_tokens`` become missing cells
    that keep the original token. Numeric parsing is attempted for every field;
    ``parsed`` is set only when the value is a finite number.
    """
    missing = {t.lower() for t in missing_tokens}
    if isinstance(data, bytes):
        handle: IO[str] = io.StringIO(data.decode("utf-8"))
    elif isinstance(data, str):
        handle = io.StringIO(data)
    else:
        handle = data

    reader = csv.reader(handle, delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaMismatchError("input has no header row") from None

    positions: dict[str, int] = {}
    for col in schema.columns:
        if col.name not in header:
            raise SchemaMismatchError(f"header is missing schema column '{col.name}'")
        positions[col.name] = header.index(col.name)

    rows: list[Row] = []
    for lineno, record in enumerate(reader, start=2):
        if not record:
            continue
        cells: dict[str, CellValue] = {}
        for col in schema.columns:
            idx = positions[col.name]
            raw = record[idx] if idx < len(record) else ""
            if raw.lower() in missing:
                cells[col.name] = CellValue.absent(raw)
            else:
                cells[col.name] = CellValue.present(raw)

        entity_id = cells[schema.entity_column].raw
        timestamp = None
        if schema.time_column is not None:
            tcell = cells[schema.time_column]
            if tcell.missing or tcell.parsed is None:
                raise RowParseError(
                    f"unparseable timestamp {tcell.raw!r} in column "
                    f"'{schema.time_column}'",
                    lineno,
                )
            timestamp = tcell.parsed
        rows.append(Row(entity_id=entity_id, cells=cells, timestamp=timestamp))
    return rows
