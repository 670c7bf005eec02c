"""Deterministic synthetic power reports for the matmul / tiled matmul /
Needleman-Wunsch scenarios.

These stand in for simulator power logs.  The constants are plumbing chosen
so the qualitative trends (DRAM pressure, kernel DRAM intensity, SM load
uniformity) come out ordinally right; they are not measurements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .floorplan import SUBUNIT_KINDS, ChipSpec, generate_layer0, l2_geometry
from .powertrace import ComponentPower, PowerReport

KERNELS = ("matmul_linear", "matmul_tiled", "needleman_wunsch")
KERNEL_DRAM_FACTOR = {"matmul_linear": 1.0, "matmul_tiled": 0.3, "needleman_wunsch": 1.5}

L2_BYTES = 786432  # 768 KB
REDUCED_L2_BYTES = L2_BYTES // 4
BYTES_PER_ELEMENT = 4
BLOCK_THREADS = 32 * 32

DRAM_BASE_W = 1.0
DRAM_PRESSURE_W = 12.0
DRAM_SKEW = (0.5, 0.2, 0.1, 0.1, 0.05, 0.05)

# per-SM sub-unit power at activity 1, and always-on leakage per sub-unit
SM_DYNAMIC_W = {"RF": 0.6, "EXE": 2.0, "L1SHM": 0.4, "SCHED": 0.2, "LDST": 0.4}
SM_STATIC_W = 0.05

MIN_RATIO, MAX_RATIO = 0.8, 1.3


@dataclass(frozen=True)
class Scenario:
    kernel: str
    size: int
    reduced_l2: bool = False

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}; expected one of {KERNELS}")
        if int(self.size) != self.size or self.size <= 0:
            raise ValueError(f"tensor size must be a positive integer, got {self.size!r}")


def cache_pressure(size: int, reduced_l2: bool) -> float:
    data_bytes = BYTES_PER_ELEMENT * size * size
    l2 = REDUCED_L2_BYTES if reduced_l2 else L2_BYTES
    return min(max(3.0 * data_bytes / l2 - 1.0, 0.0), 1.0)


def active_sms(size: int, sm_count: int = 16) -> int:
    return min(sm_count, math.ceil(size / 32) ** 2)


def load_imbalance(size: int, sm_count: int = 16) -> float:
    """Tail imbalance across SMs: 1 below one full wave of blocks, then
    inversely proportional to the number of waves."""
    waves = size * size / (BLOCK_THREADS * sm_count)
    return min(1.0, 1.0 / waves)


def sm_activity(size: int, sm_count: int = 16) -> list[float]:
    """Relative dynamic load per SM, in dispatch order.

    Idle SMs get 0.  When fewer SMs are active the kernel's work is
    concentrated, scaled by sqrt(sm_count / active).
    """
    n_active = active_sms(size, sm_count)
    conc = math.sqrt(sm_count / n_active)
    beta = load_imbalance(size, sm_count)
    return [conc * (1.0 - beta * i / (sm_count - 1)) if i < n_active else 0.0
            for i in range(sm_count)]


def dram_total_power(s: Scenario) -> float:
    k = KERNEL_DRAM_FACTOR[s.kernel]
    p = cache_pressure(s.size, s.reduced_l2)
    # miss traffic grows as capacity shrinks
    spill = L2_BYTES / (REDUCED_L2_BYTES if s.reduced_l2 else L2_BYTES)
    return k * (DRAM_BASE_W + DRAM_PRESSURE_W * p * spill)


def dram_weights(s: Scenario, spec: ChipSpec | None = None) -> dict:
    """Per-DRAM-unit share of DRAM power: uniform without cache pressure,
    otherwise skewed toward the units nearest the L2 block."""
    spec = spec or ChipSpec(reduced_l2=s.reduced_l2)
    drams = [u for u in generate_layer0(spec).units if u.name.startswith("DRAM")]
    if cache_pressure(s.size, s.reduced_l2) == 0.0:
        return {u.name: 1.0 / len(drams) for u in drams}
    w2, h2, x2, y2 = l2_geometry(spec)
    cx, cy = x2 + 0.5 * w2, y2 + 0.5 * h2
    ranked = sorted(
        range(len(drams)),
        key=lambda i: (round(math.hypot(drams[i].center[0] - cx, drams[i].center[1] - cy), 12), i),
    )
    if len(drams) == len(DRAM_SKEW):
        skew = DRAM_SKEW
    else:
        raw = [0.5 ** r for r in range(len(drams))]
        skew = [w / sum(raw) for w in raw]
    return {drams[i].name: skew[r] for r, i in enumerate(ranked)}


def _entry(name, avg):
    return ComponentPower(name, MIN_RATIO * avg, avg, MAX_RATIO * avg)


def fixture_report(s: Scenario, spec: ChipSpec | None = None) -> PowerReport:
    spec = spec or ChipSpec(reduced_l2=s.reduced_l2)
    p = cache_pressure(s.size, s.reduced_l2)
    k = KERNEL_DRAM_FACTOR[s.kernel]
    entries = []
    for i, a in enumerate(sm_activity(s.size, spec.sm_count)):
        for kind in SUBUNIT_KINDS:
            entries.append(_entry(f"SM{i}_{kind}P", SM_STATIC_W + SM_DYNAMIC_W[kind] * a))
    entries.append(_entry("L2CP", 1.0 + 2.0 * p))
    entries.append(_entry("MCP", 0.5 + 1.5 * p * k))
    entries.append(_entry("NOCP", 0.5 + 0.5 * p))
    total = dram_total_power(s)
    for unit, w in dram_weights(s, spec).items():
        entries.append(_entry(f"{unit}P", total * w))
    return PowerReport(entries)
