"""Single-element omega-limit detection and the lim-sup / lim-inf diagnostic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolve import Trajectory
from .fraclap import Field

CONVERGED = "Converged"
NON_CONVERGED = "NonConverged"


@dataclass
class OmegaEstimate:
    phi: Field
    t_converged: float
    cauchy_gap: float
    status: str
    gaps: np.ndarray

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


def omega_limit(traj: Trajectory, tol_omega: float = 1e-6, K: int = 3) -> OmegaEstimate:
    """Declare convergence when the last ``K`` consecutive sup-norm gaps are all ``<= tol_omega``.

    With fewer than ``K + 1`` snapshots every available gap is used.
    """
    if len(traj) < 3:
        raise ValueError(f"need at least 3 snapshots, got {len(traj)}")
    K = min(K, len(traj) - 1)
    gaps = np.max(np.abs(np.diff(traj.values[-(K + 1):], axis=0)), axis=1)
    status = CONVERGED if np.all(gaps <= tol_omega) else NON_CONVERGED
    t_conv = float(traj.times[-(K + 1)]) if status == CONVERGED else float("nan")
    return OmegaEstimate(traj.field(len(traj) - 1), t_conv, float(gaps.max()), status, gaps)


@dataclass
class LiminfReport:
    status: str  # PASS | FAIL
    late_max: float
    late_min: float
    thresh: float
    hypothesis_met: bool


def liminf_check(traj: Trajectory, thresh: float) -> LiminfReport:
    """If the late-window sup-norm ever exceeds ``thresh`` it must stay above ``thresh/10``.

    The late window is the last half of the snapshots. When the sup-norm never
    exceeds ``thresh`` late on, the implication holds vacuously.
    """
    norms = traj.sup_norms
    late = norms[len(norms) // 2:]
    late_max, late_min = float(late.max()), float(late.min())
    hyp = late_max > thresh
    ok = (not hyp) or late_min > thresh / 10.0
    return LiminfReport("PASS" if ok else "FAIL", late_max, late_min, thresh, hyp)
