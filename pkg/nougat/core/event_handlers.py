# nougat/core/event_handlers.py
"""
Event Handlers - React to detector and harness events

Handlers only log; the CLI registers them on the bus it hands to the
pipeline and the Monte Carlo harness.
"""

import logging
from collections import Counter
from typing import Optional

from .domain_events import EventTypes
from .events import Event, EventBus, EventPriority, event_bus

logger = logging.getLogger(__name__)


def on_windows_warm(event: Event) -> None:
    p = event.payload
    logger.info(f"Windows warm at t={p['t']} (N_ref={p['n_ref']}, N_test={p['n_test']}, L={p['dictionary_size']})")


def on_dictionary_grown(event: Event) -> None:
    p = event.payload
    logger.info(f"Dictionary grew to L={p['dictionary_size']} at t={p['t']}")


def on_change_point(event: Event) -> None:
    p = event.payload
    logger.info(
        f"Change point flagged by {p['detector']} at t={p['t']}: "
        f"score {p['score']:.6g} > {p['threshold']:.6g}"
    )


def on_drift_repaired(event: Event) -> None:
    logger.debug(f"Window statistics repaired at t={event.payload['t']}")


def on_run_failed(event: Event) -> None:
    p = event.payload
    logger.debug(f"Run {p['run_index']} failed [{p['error_code']}]: {p['error']}")


class AlarmCounter:
    """Counts ChangePointFlagged events per detector"""

    def __init__(self):
        self.counts: Counter = Counter()
        self.first: dict = {}

    def __call__(self, event: Event) -> None:
        detector = event.payload["detector"]
        self.counts[detector] += 1
        self.first.setdefault(detector, event.payload["t"])


def register_event_handlers(bus: Optional[EventBus] = None) -> EventBus:
    """
    Subscribe the logging handlers

    Registered handlers:
    - WindowsWarm, DictionaryGrown, ChangePointFlagged -> INFO log
    - DriftRepaired -> DEBUG log
    - MonteCarloRunFailed -> DEBUG log (the harness already warns)
    """
    bus = bus or event_bus
    logger.debug("Registering event handlers...")
    bus.subscribe(EventTypes.WINDOWS_WARM, on_windows_warm, EventPriority.LOW)
    bus.subscribe(EventTypes.DICTIONARY_GROWN, on_dictionary_grown, EventPriority.LOW)
    bus.subscribe(EventTypes.CHANGE_POINT_FLAGGED, on_change_point, EventPriority.LOW)
    bus.subscribe(EventTypes.DRIFT_REPAIRED, on_drift_repaired, EventPriority.LOW)
    bus.subscribe(EventTypes.MONTE_CARLO_RUN_FAILED, on_run_failed, EventPriority.LOW)
    return bus
