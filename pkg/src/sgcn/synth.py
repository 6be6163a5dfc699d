"""Synthetic cis/trans corpus for exercising the molecular pipeline offline.

Every molecule is a substituted alkene ``R1-CH=CH-R2``. Both geometric
isomers share the same bonds and atom types, so the label (1 = cis, 0 =
trans) can only be read from the 3-d coordinates. Each molecule is written
in a random orientation; extra conformers are Gaussian jitters of the base
geometry followed by a fresh random orientation.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .augment import sample_rotation, write_conformer_pool
from .data.sdf import MolRecord, write_sdf

BOND = 1.5
SUBSTITUENT_ATOMS = ("C", "C", "C", "N", "O", "Cl", "F", "S")


def _grow_chain(rng, anchor, direction, length):
    """Zig-zag chain leaving ``anchor`` roughly along ``direction``."""
    direction = direction / np.linalg.norm(direction)
    pts, prev = [], anchor
    for step in range(length):
        wobble = rng.normal(0.0, 0.35, size=3)
        wobble -= wobble.dot(direction) * direction
        side = np.cross(direction, [0.0, 0.0, 1.0])
        side = side / (np.linalg.norm(side) or 1.0)
        zig = (0.5 if step % 2 == 0 else -0.5) * side
        d = direction + zig + wobble
        prev = prev + BOND * d / np.linalg.norm(d)
        pts.append(prev)
    return pts


def make_isomer(rng: np.random.Generator, cis: bool, name: str) -> MolRecord:
    len1, len2 = rng.integers(1, 4, size=2)
    symbols = ["C", "C"]
    coords = [np.array([-0.67, 0.0, 0.0]), np.array([0.67, 0.0, 0.0])]
    bonds = [(0, 1, 2)]
    up = np.array([np.cos(np.radians(120)), np.sin(np.radians(120)), 0.0])
    arms = [(0, coords[0], up, len1)]
    mirror = np.array([-up[0], up[1] if cis else -up[1], 0.0])
    arms.append((1, coords[1], mirror, len2))
    for root, anchor, direction, length in arms:
        prev = root
        for k, p in enumerate(_grow_chain(rng, anchor, direction, int(length))):
            symbols.append("C" if k < int(length) - 1 else str(rng.choice(SUBSTITUENT_ATOMS)))
            coords.append(p)
            idx = len(symbols) - 1
            bonds.append((prev, idx, 1))
            prev = idx
    xyz = np.array(coords) @ sample_rotation(3, rng).T + rng.normal(0.0, 2.0, size=3)
    return MolRecord(name, symbols, np.round(xyz, 4), bonds, [0] * len(symbols))


def jitter_conformers(rng, coords, count: int, sigma: float = 0.1) -> list[np.ndarray]:
    """``count`` geometries: the input plus jittered, re-oriented copies."""
    confs = [coords]
    center = coords.mean(axis=0)
    for _ in range(count - 1):
        moved = (coords - center + rng.normal(0.0, sigma, size=coords.shape)) @ sample_rotation(3, rng).T
        confs.append(np.round(moved + center, 4))
    return confs


def make_isomer_corpus(out_dir, n_molecules: int = 400, n_conformers: int = 5,
                       sigma: float = 0.1, seed: int = 0) -> Path:
    """Write ``molecules.sdf``, ``labels.csv`` and ``conformers.txt`` to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    records, pools, rows = [], {}, ["id,target"]
    for i in range(n_molecules):
        cis = bool(i % 2)
        rec = make_isomer(rng, cis, f"mol{i:05d}")
        records.append(rec)
        pools[rec.name] = jitter_conformers(rng, rec.coords, n_conformers, sigma)
        rows.append(f"{rec.name},{int(cis)}")
    write_sdf(out / "molecules.sdf", records)
    (out / "labels.csv").write_text("\n".join(rows) + "\n")
    write_conformer_pool(out / "conformers.txt", pools)
    return out
