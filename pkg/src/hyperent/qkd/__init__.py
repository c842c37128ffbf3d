"""Three-photon key distribution: protocol simulation and analysis."""

from .analysis import (
    BellReport,
    SiftReport,
    bell_report,
    cglmp,
    cglmp_exact,
    chsh,
    correlation_E,
    exact_expectations,
    key_stats,
    no_signaling_pvalues,
    sift,
    verdict,
)
from .protocol import (
    EveModel,
    QkdState,
    RoundRecords,
    SimulationResult,
    TallyTable,
    apply_eve,
    build_state,
    oam_bases,
    pol_projectors,
    simulate,
)

__all__ = [
    "BellReport", "SiftReport", "bell_report", "cglmp", "chsh", "correlation_E",
    "cglmp_exact", "exact_expectations", "key_stats", "no_signaling_pvalues", "sift", "verdict",
    "EveModel", "QkdState", "RoundRecords", "SimulationResult", "TallyTable",
    "apply_eve", "build_state", "oam_bases", "pol_projectors", "simulate",
]
