import asyncio
import logging
from collections import defaultdict
from pathlib import Path
from typing import Awaitable, Callable, Dict, List, Optional, Union
from uuid import NAMESPACE_URL, uuid5

from src.shared.events import DomainEvent

logger = logging.getLogger(__name__)

EventHandler = Callable[[DomainEvent], Union[None, Awaitable[None]]]


class ApplicationEventBus:
    """In-process event bus that also appends every event to a JSONL audit log"""

    def __init__(self, log_path: Optional[Path] = None, run_id: str = ""):
        self.log_path = log_path
        self.run_id = run_id
        self.published: List[DomainEvent] = []
        self._handlers: Dict[str, List[EventHandler]] = defaultdict(list)
        self._sequence = 0

    def bind_run(self, run_id: str) -> None:
        """Attach subsequent events to a new run"""
        self.run_id = run_id
        self._sequence = 0

    def subscribe(self, event_type: str, handler: EventHandler) -> None:
        """Register a handler for an event type ("*" receives everything)"""
        self._handlers[event_type].append(handler)

    async def publish(self, event: DomainEvent) -> None:
        """Publish an event"""
        self._sequence += 1
        if self.run_id:
            event.metadata.setdefault("run_id", self.run_id)
            event.event_id = uuid5(NAMESPACE_URL, f"review-digest:{self.run_id}:{self._sequence}")
        self.published.append(event)

        if self.log_path is not None:
            try:
                await asyncio.to_thread(self._append, event.to_json())
            except OSError as e:
                logger.error(f"Failed to write event {event.event_type} to {self.log_path}: {e}")
                raise

        for handler in self._handlers.get(event.event_type, []) + self._handlers.get("*", []):
            try:
                result = handler(event)
                if asyncio.iscoroutine(result):
                    await result
            except Exception as e:
                logger.error(f"Error handling event {event.event_type}: {e}")

    def _append(self, line: str) -> None:
        assert self.log_path is not None
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def events_of(self, event_type: str) -> List[DomainEvent]:
        return [e for e in self.published if e.event_type == event_type]
