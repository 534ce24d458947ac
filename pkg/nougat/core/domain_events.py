# nougat/core/domain_events.py
"""
Domain Events - Things that happen while a detector or a campaign runs

Each payload builder returns a plain dict so events stay JSON friendly.
"""

from typing import Any, Dict, List, Optional


# =============================================================================
# Event Types (Constants)
# =============================================================================

class EventTypes:
    """All domain event type constants"""

    # Streaming
    WINDOWS_WARM = "WindowsWarm"
    DICTIONARY_GROWN = "DictionaryGrown"
    CHANGE_POINT_FLAGGED = "ChangePointFlagged"
    DRIFT_REPAIRED = "DriftRepaired"

    # Monte Carlo
    MONTE_CARLO_RUN_FAILED = "MonteCarloRunFailed"
    MONTE_CARLO_PROGRESS = "MonteCarloProgress"


# =============================================================================
# Event Payload Builders
# =============================================================================

def windows_warm_payload(t: int, n_ref: int, n_test: int, dictionary_size: int) -> Dict[str, Any]:
    """Build payload for WindowsWarm event"""
    return {
        "t": t,
        "n_ref": n_ref,
        "n_test": n_test,
        "dictionary_size": dictionary_size,
    }


def dictionary_grown_payload(t: int, new_size: int, atom: List[float]) -> Dict[str, Any]:
    """Build payload for DictionaryGrown event"""
    return {
        "t": t,
        "dictionary_size": new_size,
        "atom": atom,
    }


def change_point_payload(
    t: int,
    detector: str,
    statistic: float,
    score: float,
    threshold: float,
) -> Dict[str, Any]:
    """Build payload for ChangePointFlagged event"""
    return {
        "t": t,
        "detector": detector,
        "statistic": statistic,
        "score": score,
        "threshold": threshold,
    }


def drift_repaired_payload(t: int, max_abs_correction: float) -> Dict[str, Any]:
    """Build payload for DriftRepaired event"""
    return {
        "t": t,
        "max_abs_correction": max_abs_correction,
    }


def monte_carlo_run_failed_payload(
    run_index: int,
    seed: int,
    error: str,
    error_code: Optional[str] = None,
) -> Dict[str, Any]:
    """Build payload for MonteCarloRunFailed event"""
    return {
        "run_index": run_index,
        "seed": seed,
        "error": error,
        "error_code": error_code,
    }


def monte_carlo_progress_payload(completed: int, total: int, failed: int) -> Dict[str, Any]:
    """Build payload for MonteCarloProgress event"""
    return {
        "completed": completed,
        "total": total,
        "failed": failed,
    }
