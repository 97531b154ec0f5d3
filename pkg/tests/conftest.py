"""Shared fixtures.

The first compiled-kernel call pays a JIT cost; the warmup fixture spends
it once, before any test that times a run.
"""

import dataclasses

import pytest

from warpcsf import SolverParams, WarpingFunction, flow, make_preset


@dataclasses.dataclass
class TinyConfig:
    """Minimal duck-typed stand-in for ScenarioConfig in API-level tests."""

    warp: object
    curve: object
    solver: SolverParams
    lemma32_c0: float = 0.0
    comparison_bounds: tuple = None


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    w = WarpingFunction.constant(1.0)
    cfg = TinyConfig(
        warp=w,
        curve=make_preset("circle", z0=-3.0, n=16),
        solver=SolverParams(t_end=0.001, sample_dt=0.001),
    )
    flow.run(cfg)
