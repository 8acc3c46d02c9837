import pytest

from simsync.client import Session
from simsync.server import WorldServer
from simsync.world import ClockConfig, World

BOX_XML = (
    '<model name="box"><link name="body"><visual name="shell">'
    '<geometry><box size="1 1 1"/></geometry></visual></link></model>'
)


@pytest.fixture
def server():
    srv = WorldServer(World(ClockConfig(rate=0.0)), port=0).start()
    yield srv
    srv.stop()


@pytest.fixture
def session(server):
    s = Session(server.address)
    yield s
    s.close()
