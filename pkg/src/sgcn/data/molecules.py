"""Molecular graphs from parsed SDF records."""
from __future__ import annotations

import networkx as nx
import numpy as np

from ..graph import SpatialGraph
from .sdf import MolRecord

ATOM_VOCAB = ("C", "N", "O", "S", "F", "Cl", "Br", "I", "P")
# one-hot over ATOM_VOCAB + "other", then charge, heavy neighbours,
# attached hydrogens, in-ring, aromatic
FEATURE_NAMES = tuple(f"is_{s}" for s in ATOM_VOCAB) + (
    "is_other",
    "formal_charge",
    "heavy_neighbors",
    "attached_hydrogens",
    "in_ring",
    "aromatic",
)
N_FEATURES = len(FEATURE_NAMES)
MAX_RING_SIZE = 12
AROMATIC_BOND = 4


def ring_atoms(n_atoms: int, bonds, max_size: int = MAX_RING_SIZE) -> set[int]:
    """Atoms lying on some elementary cycle with at most ``max_size`` atoms."""
    g = nx.Graph()
    g.add_nodes_from(range(n_atoms))
    g.add_edges_from((a, b) for a, b, _ in bonds if a != b)
    members: set[int] = set()
    # only bonds inside a biconnected block can close a cycle
    for block in nx.biconnected_components(g):
        if len(block) < 3 or block <= members:
            continue
        for cycle in nx.simple_cycles(g.subgraph(block), length_bound=max_size):
            members.update(cycle)
            if members >= block:
                break
    return members


def atom_features(rec: MolRecord) -> np.ndarray:
    n = rec.n_atoms
    feats = np.zeros((n, N_FEATURES))
    is_h = np.array([s == "H" for s in rec.symbols], dtype=bool)
    heavy = np.zeros(n, dtype=int)
    hydrogens = np.zeros(n, dtype=int)
    aromatic = np.zeros(n, dtype=bool)
    for a, b, kind in rec.bonds:
        for x, y in ((a, b), (b, a)):
            if is_h[y]:
                hydrogens[x] += 1
            else:
                heavy[x] += 1
        if kind == AROMATIC_BOND:
            aromatic[a] = aromatic[b] = True
    rings = ring_atoms(n, rec.bonds)
    for i, symbol in enumerate(rec.symbols):
        slot = ATOM_VOCAB.index(symbol) if symbol in ATOM_VOCAB else len(ATOM_VOCAB)
        feats[i, slot] = 1.0
    base = len(ATOM_VOCAB) + 1
    feats[:, base] = rec.charges
    feats[:, base + 1] = heavy
    feats[:, base + 2] = hydrogens
    feats[list(rings), base + 3] = 1.0
    feats[:, base + 4] = aromatic
    return feats


def featurize(rec: MolRecord, self_loops: bool = False, label=None) -> SpatialGraph:
    """Graph with one node per atom in file order and undirected bond edges.

    Hydrogens present in the file stay as nodes (in the ``other`` slot);
    nothing is added when they are absent. Positions are ``None`` when a
    multi-atom record has every coordinate exactly zero (no geometry).
    """
    n = rec.n_atoms
    neighbors = [set() for _ in range(n)]
    for a, b, _ in rec.bonds:
        neighbors[a].add(b)
        neighbors[b].add(a)
    if self_loops:
        for i in range(n):
            neighbors[i].add(i)
    positions = None if n > 1 and not np.any(rec.coords) else rec.coords
    return SpatialGraph.from_neighbors(
        atom_features(rec),
        positions,
        [sorted(nb) for nb in neighbors],
        label=label,
        undirected=True,
        name=rec.name,
    )


def append_positions(graph: SpatialGraph) -> SpatialGraph:
    """Node features with the coordinates appended (the pos-GCN input)."""
    return graph.replace(features=np.concatenate([graph.features, graph.positions], axis=1))
