"""Persistence: data-module files, cross-module dedup, the summary table,
and checkpoint manifests.

Module files are line-oriented UTF-8 text for auditability: three header
lines (module, primes, sum), then one `seed,child` record per line with a
`*` suffix marking special children; `#` starts a comment. Displayed sums
are rounded down to 7 decimals so a printed total never overstates the
ledger. Checkpoints are a single JSON manifest written atomically.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "DataModule",
    "DedupReport",
    "SummaryRow",
    "SummaryTable",
    "reciprocal_sum_floor7",
    "format_floor7",
    "write_module",
    "read_module",
    "module_filename",
    "dedup",
    "summary_table",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_NAME",
]

_SCALE = 10 ** 36
_DISPLAY_DEN = 10 ** 7


def reciprocal_sum_floor7(primes: Iterable[int]) -> Fraction:
    """Sum of 1/q rounded down to 7 decimals, via exact directed fixed point."""
    lo = 0
    for q in primes:
        lo += _SCALE // q
    return Fraction(lo // (_SCALE // _DISPLAY_DEN), _DISPLAY_DEN)


def format_floor7(value: Fraction) -> str:
    """Render a denominator-10^7 fraction as 0.NNNNNNN (already floored)."""
    scaled = value.numerator * _DISPLAY_DEN // value.denominator
    whole, frac = divmod(scaled, _DISPLAY_DEN)
    return f"{whole}.{frac:07d}"


@dataclass(frozen=True)
class DataModule:
    """One committed batch of 2-chain expansions.

    records hold every generated pair in order; count and module_sum cover
    only the distinct ordinary primes first confirmed in this module.
    """

    id: int
    records: tuple[tuple[int, int, bool], ...]
    count: int
    module_sum: Fraction  # denominator 10^7, rounded down

    def new_ordinary_primes(self, already_seen: set[int]) -> list[int]:
        """First-appearance ordinary children against a running seen-set."""
        out = []
        for _, child, special in self.records:
            if not special and child not in already_seen:
                already_seen.add(child)
                out.append(child)
        return out


def module_filename(module_id: int) -> str:
    return f"module-{module_id:04d}.txt"


def write_module(module: DataModule, directory: Path | str) -> Path:
    """Write the module file; re-reading yields an equal value."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / module_filename(module.id)
    lines = [
        f"module: {module.id}",
        f"primes: {module.count}",
        f"sum: {format_floor7(module.module_sum)}",
    ]
    for seed, child, special in module.records:
        lines.append(f"{seed},{child}{'*' if special else ''}")
    tmp = path.with_suffix(".tmp")
    try:
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"writing module file {path}: {exc}") from exc
    return path


def read_module(path: Path | str) -> DataModule:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"reading module file {path}: {exc}") from exc
    header: dict[str, str] = {}
    records: list[tuple[int, int, bool]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" in line and not line[0].isdigit():
            key, _, val = line.partition(":")
            header[key.strip()] = val.strip()
            continue
        try:
            seed_s, child_s = line.split(",")
            special = child_s.endswith("*")
            records.append((int(seed_s), int(child_s.rstrip("*")), special))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: malformed record {raw!r}") from exc
    try:
        module_id = int(header["module"])
        count = int(header["primes"])
        module_sum = Fraction(header["sum"])
    except KeyError as exc:
        raise ValueError(f"{path}: missing header line {exc}") from exc
    return DataModule(id=module_id, records=tuple(records),
                      count=count, module_sum=module_sum)


@dataclass(frozen=True)
class DedupReport:
    """Cross-module duplicate audit with first-appearance attribution."""

    duplicates: dict[int, tuple[int, ...]]   # prime -> module ids (2+)
    attributed_counts: dict[int, int]        # module id -> distinct new primes
    attributed_sums: dict[int, Fraction]     # module id -> floor7 sum of those
    total_count: int
    total_sum: Fraction

    @property
    def duplicate_count(self) -> int:
        return len(self.duplicates)


def dedup(modules: Sequence[DataModule]) -> DedupReport:
    """Attribute every ordinary child to its first module; report repeats.

    Independent of the stored per-module counts, so it doubles as an audit
    of them. Idempotent by construction.
    """
    ids = [m.id for m in modules]
    if ids != sorted(ids):
        raise ValueError("modules must be given in id order")
    seen: dict[int, int] = {}
    appearances: dict[int, list[int]] = {}
    counts: dict[int, int] = {}
    sums: dict[int, Fraction] = {}
    for m in modules:
        new: list[int] = []
        for _, child, special in m.records:
            if special:
                continue
            mods = appearances.setdefault(child, [])
            if m.id not in mods:
                mods.append(m.id)
            if child not in seen:
                seen[child] = m.id
                new.append(child)
        counts[m.id] = len(new)
        sums[m.id] = reciprocal_sum_floor7(new)
    duplicates = {p: tuple(mods) for p, mods in sorted(appearances.items())
                  if len(mods) > 1}
    total_count = sum(counts.values())
    total_sum = sum(sums.values(), Fraction(0))
    return DedupReport(duplicates=duplicates, attributed_counts=counts,
                       attributed_sums=sums, total_count=total_count,
                       total_sum=total_sum)


@dataclass(frozen=True)
class SummaryRow:
    label: str
    primes: int
    total_primes: int
    module_sum: Fraction
    total_sum: Fraction


@dataclass(frozen=True)
class SummaryTable:
    rows: tuple[SummaryRow, ...]

    def to_csv(self) -> str:
        out = ["Module,Primes,TotalPrimes,ModuleSum,TotalSum"]
        for r in self.rows:
            out.append(f"{r.label},{r.primes},{r.total_primes},"
                       f"{format_floor7(r.module_sum)},{format_floor7(r.total_sum)}")
        return "\n".join(out) + "\n"

    def to_text(self) -> str:
        widths = (8, 10, 12, 11, 11)
        head = ("Module", "Primes", "TotalPrimes", "ModuleSum", "TotalSum")
        lines = ["".join(h.rjust(w) for h, w in zip(head, widths))]
        for r in self.rows:
            cells = (r.label, str(r.primes), str(r.total_primes),
                     format_floor7(r.module_sum), format_floor7(r.total_sum))
            lines.append("".join(c.rjust(w) for c, w in zip(cells, widths)))
        return "\n".join(lines) + "\n"


def summary_table(
    modules: Sequence[DataModule],
    special_count: int = 0,
    special_sum: Fraction = Fraction(0),
) -> SummaryTable:
    """Per-module rows plus a trailing row for special confirmations."""
    rows: list[SummaryRow] = []
    total_primes = 0
    total_sum = Fraction(0)
    for m in modules:
        total_primes += m.count
        total_sum += m.module_sum
        rows.append(SummaryRow(str(m.id), m.count, total_primes,
                               m.module_sum, total_sum))
    if special_count or special_sum:
        total_primes += special_count
        total_sum += special_sum
        rows.append(SummaryRow("Special", special_count, total_primes,
                               special_sum, total_sum))
    return SummaryTable(tuple(rows))


CHECKPOINT_NAME = "checkpoint.json"


def save_checkpoint(directory: Path | str, state: dict) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / CHECKPOINT_NAME
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(state, sort_keys=True, indent=1), encoding="utf-8")
    os.replace(tmp, path)
    return path


def load_checkpoint(directory: Path | str) -> dict | None:
    path = Path(directory) / CHECKPOINT_NAME
    if not path.exists():
        return None
    return json.loads(path.read_text(encoding="utf-8"))
