import json

import pytest

from src.event_bus import ApplicationEventBus
from src.shared.events import (
    DomainEvent,
    RecordDroppedEvent,
    StageCompletedEvent,
    SummaryLengthWarningEvent,
    create_event_from_type,
)


@pytest.mark.unit
class TestDomainEvents:
    def test_event_json_round_trip_keeps_concrete_type(self):
        # Arrange
        event = SummaryLengthWarningEvent(aggregate_id="hotel_a|rooms", data={"words": 20})

        # Act
        restored = DomainEvent.from_json(event.to_json())

        # Assert
        assert isinstance(restored, SummaryLengthWarningEvent)
        assert restored.event_id == event.event_id
        assert restored.data == {"words": 20}

    def test_create_event_from_unknown_type_raises_error(self):
        with pytest.raises(ValueError):
            create_event_from_type("no.such.event")


@pytest.mark.unit
class TestApplicationEventBus:
    async def test_event_ids_are_stable_per_run_and_sequence(self):
        # Arrange
        first, second = ApplicationEventBus(run_id="run1"), ApplicationEventBus(run_id="run1")

        # Act
        for bus in (first, second):
            await bus.publish(StageCompletedEvent(aggregate_id="discover"))
            await bus.publish(StageCompletedEvent(aggregate_id="refine"))

        # Assert
        assert [e.event_id for e in first.published] == [e.event_id for e in second.published]
        assert first.published[0].event_id != first.published[1].event_id
        assert first.published[0].metadata["run_id"] == "run1"

    async def test_bind_run_restarts_sequence(self):
        # Arrange
        bus = ApplicationEventBus(run_id="a")
        await bus.publish(RecordDroppedEvent())

        # Act
        bus.bind_run("b")
        await bus.publish(RecordDroppedEvent())

        # Assert
        assert bus.published[1].metadata["run_id"] == "b"
        assert bus.published[0].event_id != bus.published[1].event_id

    async def test_publish_appends_to_log_and_notifies_subscribers(self, tmp_path):
        # Arrange
        log = tmp_path / ".runs" / "events.jsonl"
        bus = ApplicationEventBus(log_path=log, run_id="r")
        seen = []
        bus.subscribe("record.dropped", lambda e: seen.append(e.aggregate_id))

        async def _async_handler(event):
            seen.append(f"any:{event.event_type}")

        bus.subscribe("*", _async_handler)

        # Act
        await bus.publish(RecordDroppedEvent(aggregate_id="r1"))

        # Assert
        lines = log.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["event_type"] == "record.dropped"
        assert seen == ["r1", "any:record.dropped"]

    async def test_failing_handler_does_not_stop_publication(self):
        # Arrange
        bus = ApplicationEventBus()

        def _broken(event):
            raise RuntimeError("boom")

        bus.subscribe("record.dropped", _broken)

        # Act
        await bus.publish(RecordDroppedEvent())

        # Assert
        assert len(bus.events_of("record.dropped")) == 1
