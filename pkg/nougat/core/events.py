# nougat/core/events.py
"""
Event Bus - In-process notifications from pipelines and campaigns

Numerical code calls ``emit`` and never learns who is listening. The CLI
attaches logging handlers and an alarm counter; tests read the history.
Delivery is synchronous and in priority order, so an alarm sink sees a
ChangePointFlagged event before the step that raised it returns.
"""

import logging
import uuid
from collections import Counter, deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Callable, Deque, Dict, List, Optional

logger = logging.getLogger(__name__)

HISTORY_SIZE = 1000


class EventPriority(Enum):
    """Handler order; lower runs first"""
    HIGH = 1      # Alarm sinks
    NORMAL = 5    # Standard consumers
    LOW = 10      # Logging, progress


@dataclass
class Event:
    """One notification with a JSON-friendly payload"""
    event_type: str
    payload: Dict[str, Any]
    source: Optional[str] = None
    timestamp: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    event_id: str = field(default_factory=lambda: str(uuid.uuid4()))

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "event_type": self.event_type,
            "source": self.source,
            "payload": self.payload,
            "timestamp": self.timestamp.isoformat(),
        }


Handler = Callable[[Event], None]


@dataclass
class _Subscription:
    handler: Handler
    priority: EventPriority
    seq: int


class EventBus:
    """
    Process-wide synchronous bus

    A handler that raises is logged with its traceback and counted in
    ``failures``; the remaining handlers and the publisher carry on.
    History keeps the last HISTORY_SIZE events of every type.
    """

    _instance: Optional["EventBus"] = None

    def __new__(cls):
        if cls._instance is None:
            instance = super().__new__(cls)
            instance._subscriptions = {}
            instance._history = deque(maxlen=HISTORY_SIZE)
            instance._seq = 0
            instance.failures = Counter()
            cls._instance = instance
        return cls._instance

    _subscriptions: Dict[str, List[_Subscription]]
    _history: Deque[Event]
    failures: Counter

    def subscribe(self, event_type: str, handler: Handler, priority: EventPriority = EventPriority.NORMAL) -> None:
        """Attach handler; equal priorities run in subscription order"""
        self._seq += 1
        subs = self._subscriptions.setdefault(event_type, [])
        subs.append(_Subscription(handler, priority, self._seq))
        subs.sort(key=lambda s: (s.priority.value, s.seq))
        logger.debug(f"Subscribed {getattr(handler, '__name__', handler)} to {event_type} ({priority.name})")

    def unsubscribe(self, event_type: str, handler: Handler) -> bool:
        """Detach handler; False when it was not subscribed"""
        subs = self._subscriptions.get(event_type, [])
        kept = [s for s in subs if s.handler != handler]
        self._subscriptions[event_type] = kept
        return len(kept) < len(subs)

    def publish(self, event: Event) -> None:
        """Record event and deliver it to every handler in priority order"""
        self._history.append(event)
        for sub in self._subscriptions.get(event.event_type, ()):
            try:
                sub.handler(event)
            except Exception as e:
                self.failures[event.event_type] += 1
                logger.error(
                    f"Handler {getattr(sub.handler, '__name__', sub.handler)} failed on {event.event_type}: {e}",
                    exc_info=True,
                )

    def emit(self, event_type: str, payload: Dict[str, Any], source: Optional[str] = None) -> Event:
        """Build and publish an event"""
        event = Event(event_type=event_type, payload=payload, source=source)
        self.publish(event)
        return event

    def get_history(self, event_type: Optional[str] = None, limit: int = 100) -> List[Event]:
        """Most recent events, oldest first, optionally of one type"""
        events = [e for e in self._history if event_type is None or e.event_type == event_type]
        return events[-limit:]

    def get_subscriptions(self) -> Dict[str, int]:
        """Handler count per event type"""
        return {event_type: len(subs) for event_type, subs in self._subscriptions.items() if subs}

    def clear(self) -> None:
        """Drop subscriptions, history and failure counts"""
        self._subscriptions.clear()
        self._history.clear()
        self.failures.clear()


event_bus = EventBus()
