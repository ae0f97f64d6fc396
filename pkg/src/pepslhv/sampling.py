"""Classical sampling of measurement outcomes through the hidden-variable model.

A shot draws one edge index per lattice edge from the per-edge product
distribution, then draws each site's outcome from the Born probabilities of
its normalized output operator.  All randomness is counter-based (Philox)
and keyed by (seed, shot, slot), so any partition of the shot range across
workers reproduces identical records.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from pepslhv.construction import PepsInstance
from pepslhv.decomposition import (
    DUAL_ATOL,
    TRACE_FLOOR,
    EdgeDistributions,
    _site_transposed_flags,
    site_operator_family,
)
from pepslhv.errors import PositivityViolationError, UsageError
from pepslhv.measurements import Povm

DEFAULT_CHUNK = 1 << 16


@dataclass(frozen=True)
class MeasurementPlan:
    """One POVM (by index into the instance's measurement set) per site."""

    povm_indices: tuple

    @classmethod
    def uniform(cls, instance: PepsInstance, label: str) -> "MeasurementPlan":
        idx, _ = instance.measurement_set.by_label(label)
        return cls(povm_indices=(idx,) * instance.lattice.n_sites)

    @classmethod
    def from_labels(cls, instance: PepsInstance, labels: Sequence[str]) -> "MeasurementPlan":
        if len(labels) != instance.lattice.n_sites:
            raise UsageError(
                f"plan has {len(labels)} sites, instance has {instance.lattice.n_sites}"
            )
        return cls(
            povm_indices=tuple(instance.measurement_set.by_label(l)[0] for l in labels)
        )

    def povms(self, instance: PepsInstance) -> list:
        povms = []
        for s, idx in enumerate(self.povm_indices):
            if not 0 <= idx < len(instance.measurement_set.povms):
                raise UsageError(f"plan references POVM {idx} which does not exist")
            p = instance.measurement_set.povms[idx]
            if p.dim != instance.site_maps[s].d:
                raise UsageError(f"plan POVM dim mismatch at site {s}")
            povms.append(p)
        return povms


@dataclass(frozen=True)
class ShotRecord:
    shot: int
    outcomes: tuple
    hidden: Optional[tuple] = None

    def to_json(self) -> str:
        obj = {"shot": self.shot, "outcomes": list(self.outcomes)}
        if self.hidden is not None:
            obj["hidden"] = list(self.hidden)
        return json.dumps(obj, separators=(",", ":"))


@dataclass(frozen=True)
class ShotBatch:
    start_shot: int
    outcomes: np.ndarray  # (n_shots, n_sites) int
    hidden: Optional[np.ndarray]  # (n_shots, n_edges) int, if emitted

    @property
    def n_shots(self) -> int:
        return self.outcomes.shape[0]

    def records(self) -> Iterator[ShotRecord]:
        for i in range(self.n_shots):
            hidden = tuple(int(x) for x in self.hidden[i]) if self.hidden is not None else None
            yield ShotRecord(
                shot=self.start_shot + i,
                outcomes=tuple(int(x) for x in self.outcomes[i]),
                hidden=hidden,
            )


def derive_seed(seed: int, label: str) -> int:
    """Stable labeled sub-seed so one --seed flag drives every subsystem."""
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def shot_uniforms(
    seed: int, start_shot: int, n_shots: int, n_slots: int, label: str = "edges"
) -> np.ndarray:
    """Uniform variates, row i belonging to shot start_shot + i.

    Implemented with a Philox counter advanced to the absolute slot
    position, so shot i's row is independent of where the batch starts.
    Separate labels keep the edge and site streams disjoint.
    """
    if n_shots < 0 or n_slots < 1:
        raise UsageError("bad uniform block shape")
    # Philox advances in blocks of four 64-bit outputs; give each shot a
    # whole number of blocks so any start_shot lands on a block boundary.
    blocks_per_shot = -(-n_slots // 4)
    bitgen = np.random.Philox(key=np.uint64(derive_seed(seed, label)))
    bitgen.advance(start_shot * blocks_per_shot)
    u = np.random.Generator(bitgen).random((n_shots, 4 * blocks_per_shot))
    return np.ascontiguousarray(u[:, :n_slots])


def sample_hidden(edge_dists, seed: int, shot: int) -> np.ndarray:
    """Edge assignment for one shot; deterministic in (seed, shot)."""
    probs = edge_dists.probs if isinstance(edge_dists, EdgeDistributions) else tuple(edge_dists)
    E = len(probs)
    u = shot_uniforms(seed, shot, 1, E, label="edges")[0]
    out = np.empty(E, dtype=np.int64)
    for e, p in enumerate(probs):
        cdf = np.cumsum(p)
        cdf[-1] = 1.0
        out[e] = min(int(np.searchsorted(cdf, u[e], side="right")), p.size - 1)
    return out


def _site_cdf_table(instance: PepsInstance, s: int, povm: Povm, cache: dict) -> np.ndarray:
    """Cumulative Born probabilities per extreme index tuple, ((D^2)^v, K)."""
    m = instance.site_maps[s]
    flags = _site_transposed_flags(instance, s)
    key = (id(m), flags, id(povm))
    if key in cache:
        return cache[key]
    stack = np.stack(povm.elements)
    family = site_operator_family(m, instance.basis, flags)
    rows = np.empty((len(family), povm.n_outcomes))
    for r, O in enumerate(family):
        tr = float(np.real(np.trace(O)))
        if tr < TRACE_FLOOR:
            raise PositivityViolationError(
                f"site {s}: output trace {tr:.3e} at tuple {r} (certificate stale or absent)",
                witness=(s, r, None, tr),
            )
        probs = np.real(np.einsum("ab,eba->e", O / tr, stack))
        bad = int(np.argmin(probs))
        if probs[bad] < -DUAL_ATOL:
            raise PositivityViolationError(
                f"site {s}: tr(sigma X_{bad}) = {probs[bad]:.3e} at tuple {r}",
                witness=(s, r, bad, float(probs[bad])),
            )
        probs = np.clip(probs, 0.0, 1.0)
        cdf = np.cumsum(probs)
        rows[r] = cdf / cdf[-1]
    cache[key] = rows
    return rows


def _run_chunk(
    instance: PepsInstance,
    plan_povms: list,
    edge_cdfs: list,
    site_tables: list,
    seed: int,
    start: int,
    count: int,
) -> tuple:
    lat = instance.lattice
    E, N = lat.n_edges, lat.n_sites
    n = instance.D**2
    U_edge = shot_uniforms(seed, start, count, E, label="edges")
    U_site = shot_uniforms(seed, start, count, N, label="sites")
    lam = np.empty((count, E), dtype=np.int64)
    for e in range(E):
        lam[:, e] = np.minimum(
            np.searchsorted(edge_cdfs[e], U_edge[:, e], side="right"), n - 1
        )
    outcomes = np.empty((count, N), dtype=np.int64)
    for s in range(N):
        flat = np.zeros(count, dtype=np.int64)
        for e, _ in lat.incident_edges(s):
            flat = flat * n + lam[:, e]
        rows = site_tables[s][flat]
        u = U_site[:, s][:, None]
        idx = np.sum(rows <= u, axis=1)
        outcomes[:, s] = np.minimum(idx, plan_povms[s].n_outcomes - 1)
    return lam, outcomes


def sample_outcomes(
    instance: PepsInstance,
    assignment,
    plan: MeasurementPlan,
    seed: int,
    shot: int,
) -> ShotRecord:
    """Outcomes at every site for a fixed hidden edge assignment."""
    lat = instance.lattice
    assignment = np.asarray(assignment, dtype=np.int64)
    if assignment.shape != (lat.n_edges,):
        raise UsageError("assignment length must equal the edge count")
    n = instance.D**2
    if np.any(assignment < 0) or np.any(assignment >= n):
        raise UsageError("edge index out of range")
    povms = plan.povms(instance)
    cache: dict = {}
    U = shot_uniforms(seed, shot, 1, lat.n_sites, label="sites")[0]
    outcomes = []
    for s in range(lat.n_sites):
        table = _site_cdf_table(instance, s, povms[s], cache)
        flat = 0
        for e, _ in lat.incident_edges(s):
            flat = flat * n + int(assignment[e])
        row = table[flat]
        u = U[s]
        idx = min(int(np.sum(row <= u)), povms[s].n_outcomes - 1)
        outcomes.append(idx)
    return ShotRecord(shot=shot, outcomes=tuple(outcomes), hidden=tuple(int(x) for x in assignment))


def run_shots(
    instance: PepsInstance,
    plan: MeasurementPlan,
    n_shots: int,
    seed: int,
    edge_dists: Optional[EdgeDistributions] = None,
    emit_hidden: bool = False,
    start_shot: int = 0,
    workers: int = 1,
    chunk: int = DEFAULT_CHUNK,
) -> ShotBatch:
    """Sample n_shots records; deterministic per shot regardless of chunking."""
    if n_shots < 0:
        raise UsageError("n_shots must be >= 0")
    from pepslhv.decomposition import edge_distribution

    if edge_dists is None:
        edge_dists = edge_distribution(instance)
    lat = instance.lattice
    povms = plan.povms(instance)
    n = instance.D**2
    edge_cdfs = []
    for p in edge_dists.probs:
        cdf = np.cumsum(p)
        cdf[-1] = 1.0
        edge_cdfs.append(cdf)
    cache: dict = {}
    site_tables = [_site_cdf_table(instance, s, povms[s], cache) for s in range(lat.n_sites)]

    spans = [
        (start_shot + off, min(chunk, n_shots - off))
        for off in range(0, n_shots, chunk)
    ] or []

    def work(span):
        return _run_chunk(instance, povms, edge_cdfs, site_tables, seed, span[0], span[1])

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, spans))
    else:
        parts = [work(sp) for sp in spans]

    if parts:
        lam = np.concatenate([p[0] for p in parts])
        outcomes = np.concatenate([p[1] for p in parts])
    else:
        lam = np.empty((0, lat.n_edges), dtype=np.int64)
        outcomes = np.empty((0, lat.n_sites), dtype=np.int64)
    return ShotBatch(
        start_shot=start_shot,
        outcomes=outcomes,
        hidden=lam if emit_hidden else None,
    )
