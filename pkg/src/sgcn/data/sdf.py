"""SDF / V2000 molfile reading and writing.

Only the fields needed for molecular graphs are kept: element symbols,
coordinates, bonds with their types, formal charges and SD data items.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# atom-block charge codes of the V2000 format
_CHARGE_CODES = {0: 0, 1: 3, 2: 2, 3: 1, 4: 0, 5: -1, 6: -2, 7: -3}


class SdfFormatError(ValueError):
    pass


@dataclass
class MolRecord:
    name: str
    symbols: list[str]
    coords: np.ndarray  # (n, 3)
    bonds: list[tuple[int, int, int]]  # 0-based (a, b, type)
    charges: list[int]
    data: dict[str, str] = field(default_factory=dict)

    @property
    def n_atoms(self) -> int:
        return len(self.symbols)

    def same_as(self, other: MolRecord) -> bool:
        return (
            self.name == other.name
            and self.symbols == other.symbols
            and np.array_equal(self.coords, other.coords)
            and self.bonds == other.bonds
            and self.charges == other.charges
            and self.data == other.data
        )


def _int_field(line: str, lo: int, hi: int, what: str, lineno: int) -> int:
    text = line[lo:hi].strip()
    try:
        return int(text) if text else 0
    except ValueError:
        raise SdfFormatError(f"line {lineno}: cannot read {what} from {line!r}") from None


def _parse_record(lines: list[str], start: int) -> MolRecord:
    if len(lines) < 4:
        raise SdfFormatError(f"line {start + 1}: record shorter than the molfile header")
    name = lines[0].strip()
    counts = lines[3]
    lineno = start + 4
    if len(counts.rstrip()) < 6:
        raise SdfFormatError(f"line {lineno}: malformed counts line {counts!r}")
    n_atoms = _int_field(counts, 0, 3, "atom count", lineno)
    n_bonds = _int_field(counts, 3, 6, "bond count", lineno)
    if "V3000" in counts:
        raise SdfFormatError(f"line {lineno}: V3000 records are not supported")
    if len(lines) < 4 + n_atoms + n_bonds:
        raise SdfFormatError(f"line {lineno}: record ends before its atom/bond blocks")

    symbols, coords, charges = [], [], []
    for a in range(n_atoms):
        line = lines[4 + a]
        ln = start + 5 + a
        try:
            coords.append([float(line[0:10]), float(line[10:20]), float(line[20:30])])
        except ValueError:
            raise SdfFormatError(f"line {ln}: bad coordinates in {line!r}") from None
        symbol = line[31:34].strip()
        if not symbol:
            raise SdfFormatError(f"line {ln}: missing element symbol")
        symbols.append(symbol)
        charges.append(_CHARGE_CODES.get(_int_field(line, 36, 39, "charge", ln), 0))

    bonds = []
    for b in range(n_bonds):
        line = lines[4 + n_atoms + b]
        ln = start + 5 + n_atoms + b
        i = _int_field(line, 0, 3, "bond atom", ln)
        j = _int_field(line, 3, 6, "bond atom", ln)
        kind = _int_field(line, 6, 9, "bond type", ln)
        if not (1 <= i <= n_atoms and 1 <= j <= n_atoms) or i == j:
            raise SdfFormatError(f"line {ln}: bond index out of range in {line!r}")
        bonds.append((i - 1, j - 1, kind))

    data: dict[str, str] = {}
    pos = 4 + n_atoms + n_bonds
    charge_block_seen = False
    while pos < len(lines):
        line = lines[pos]
        if line.startswith("M  END"):
            pos += 1
            break
        if line.startswith("M  CHG"):
            # the first CHG line resets every atom-block charge
            if not charge_block_seen:
                charges = [0] * n_atoms
                charge_block_seen = True
            fields = line[6:].split()
            count = int(fields[0])
            for p in range(count):
                atom, value = int(fields[1 + 2 * p]), int(fields[2 + 2 * p])
                if not 1 <= atom <= n_atoms:
                    raise SdfFormatError(f"line {start + pos + 1}: charge on missing atom {atom}")
                charges[atom - 1] = value
        pos += 1

    while pos < len(lines):
        line = lines[pos]
        if line.startswith(">"):
            lt, gt = line.find("<"), line.rfind(">")
            key = line[lt + 1:gt] if 0 <= lt < gt else line[1:].strip()
            pos += 1
            value = []
            while pos < len(lines) and lines[pos].strip():
                value.append(lines[pos])
                pos += 1
            data[key] = "\n".join(value)
        pos += 1

    return MolRecord(name, symbols, np.array(coords, dtype=np.float64).reshape(-1, 3), bonds, charges, data)


def parse_sdf(text: str) -> list[MolRecord]:
    records, block, start = [], [], 0
    lines = text.splitlines()
    for lineno, line in enumerate(lines):
        if line.startswith("$$$$"):
            records.append(_parse_record(block, start))
            block, start = [], lineno + 1
        else:
            block.append(line)
    if any(ln.strip() for ln in block):
        records.append(_parse_record(block, start))
    return records


def read_sdf(path) -> list[MolRecord]:
    return parse_sdf(Path(path).read_text())


def format_record(rec: MolRecord) -> str:
    out = [rec.name, "  sgcn          3D", "", ]
    out.append(f"{rec.n_atoms:3d}{len(rec.bonds):3d}  0  0  0  0  0  0  0  0999 V2000")
    for symbol, (x, y, z) in zip(rec.symbols, rec.coords):
        out.append(f"{x:10.4f}{y:10.4f}{z:10.4f} {symbol:<3s} 0  0  0  0  0  0  0  0  0  0  0  0")
    for a, b, kind in rec.bonds:
        out.append(f"{a + 1:3d}{b + 1:3d}{kind:3d}  0")
    charged = [(i + 1, c) for i, c in enumerate(rec.charges) if c]
    for lo in range(0, len(charged), 8):
        chunk = charged[lo:lo + 8]
        out.append("M  CHG" + f"{len(chunk):3d}" + "".join(f" {a:3d} {c:3d}" for a, c in chunk))
    out.append("M  END")
    for key, value in rec.data.items():
        out.extend([f">  <{key}>", value, ""])
    out.append("$$$$")
    return "\n".join(out) + "\n"


def write_sdf(path, records) -> None:
    Path(path).write_text("".join(format_record(r) for r in records))
