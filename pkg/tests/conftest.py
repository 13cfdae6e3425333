import pytest

from calmkit.server import ServerConfig, StudyServer, VirtualClock
from calmkit.timeutil import MINUTE_MS, day_minute_to_utc_ms

# Virtual studies are pinned to an arbitrary epoch day; participants
# registered on day 0 start their study on day 1.
ANCHOR_DAY = 20_000


def at(day: int, minute: int, offset_minutes: int = 0) -> int:
    """UTC ms for (study-anchor day + day, local minute of day)."""
    return day_minute_to_utc_ms(ANCHOR_DAY + day, minute, offset_minutes)


def run_until(server: StudyServer, clock: VirtualClock, t_end: int, step_min: int = 1):
    """Advance the virtual clock minute-wise, ticking the scheduler."""
    while clock.now_ms() < t_end:
        clock.advance(step_min * MINUTE_MS)
        server.tick()


@pytest.fixture
def clock():
    return VirtualClock(at(0, 10 * 60))


@pytest.fixture
def server(clock):
    srv = StudyServer(clock=clock, config=ServerConfig(study_seed=5))
    yield srv
    srv.close()
