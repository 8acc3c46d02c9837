import socket
import threading
import time

import pytest

from simsync.client import RequestFailed, RequestTimeout, Session, SessionClosed
from simsync.math3d import Pose, Vector3
from simsync.states import LightState, LinkState, VisualState
from simsync.world import World

from conftest import BOX_XML


class SilentServer:
    """Accepts connections and optionally replies with scripted lines."""

    def __init__(self, script=None):
        self._script = script or (lambda line: None)
        self._sock = socket.socket()
        self._sock.bind(("127.0.0.1", 0))
        self._sock.listen(1)
        self.address = self._sock.getsockname()
        self._thread = threading.Thread(target=self._serve, daemon=True)
        self._thread.start()

    def _serve(self):
        conn, _ = self._sock.accept()
        rf = conn.makefile("rb")
        for line in rf:
            reply = self._script(line)
            if reply:
                conn.sendall(reply)

    def close(self):
        self._sock.close()


class TestSessionBasics:
    def test_connection_refused_context(self):
        with pytest.raises(ConnectionError) as err:
            Session(("127.0.0.1", 1))
        assert "127.0.0.1:1" in str(err.value)

    def test_ids_strictly_increase(self, server):
        with Session(server.address) as s:
            s.advance_clock(0)
            s.advance_clock(0)
            s.get_model_states([])
            assert s._next_id == 4

    def test_request_counts(self, server, session):
        session.spawn_model("m", BOX_XML)
        session.get_model_states(["m"])
        session.get_model_states(["m"])
        session.set_model_states([])
        assert session.request_counts["get_model_states"] == 2
        assert session.request_counts["set_model_states"] == 1
        assert session.request_counts["spawn_model"] == 1

    def test_request_timeout(self):
        silent = SilentServer()
        try:
            s = Session(silent.address, request_timeout=0.2)
            with pytest.raises(RequestTimeout):
                s.advance_clock(0)
            s.close()
        finally:
            silent.close()

    def test_unknown_response_id_discarded(self, caplog):
        def script(line):
            # reply with a bogus id first, then the real one
            import json

            request = json.loads(line)
            bogus = b'{"id":999999,"ok":true,"body":{}}\n'
            real = (f'{{"id":{request["id"]},"ok":true,"body":{{"sim_time_ns":0}}}}').encode() + b"\n"
            return bogus + real

        silent = SilentServer(script)
        try:
            with caplog.at_level("WARNING"):
                s = Session(silent.address, request_timeout=2.0)
                assert s.advance_clock(0) == 0
                s.close()
            assert "unknown request id" in caplog.text
        finally:
            silent.close()

    def test_closed_session_raises(self, server):
        s = Session(server.address)
        s.close()
        with pytest.raises(SessionClosed):
            s.advance_clock(0)

    def test_pending_failed_on_disconnect(self):
        from simsync.server import WorldServer

        srv = WorldServer(World(), port=0).start()
        s = Session(srv.address, request_timeout=2.0)
        assert s.advance_clock(0) == 0
        srv.stop()
        deadline = time.time() + 2.0
        while not s._closed and time.time() < deadline:
            time.sleep(0.01)
        with pytest.raises((RequestFailed, SessionClosed, RequestTimeout)):
            s.advance_clock(0)
        s.close()


class TestTypedHelpers:
    def test_link_visual_light_roundtrip(self, server, session):
        session.spawn_model("rig", BOX_XML)
        (link,) = session.get_link_states([("rig", "body")])
        assert link is not None and link.model_name == "rig"
        moved = LinkState("rig", "body", Pose(Vector3(1, 1, 1)), link.twist)
        assert session.set_link_states([moved]) == ["OK"]
        (link2,) = session.get_link_states([("rig", "body")])
        assert link2.pose.position == Vector3(1, 1, 1)

        (visual,) = session.get_visual_states([("rig", "body", "shell")])
        assert visual.visible is True
        hidden = VisualState("rig", "body", "shell", visual.material, visual.transparency, False)
        assert session.set_visual_states([hidden]) == ["OK"]
        assert session.get_visual_states([("rig", "body", "shell")])[0].visible is False

        # lights are registered server-side (there is no spawn op for them)
        server.world.add_light(LightState("sun"))
        (light,) = session.get_light_states(["sun"])
        assert light is not None
        assert session.set_light_states([LightState("sun", attenuation_linear=0.5)]) == ["OK"]
        assert session.get_light_states(["sun"])[0].attenuation_linear == 0.5

    def test_missing_keys_are_none(self, session):
        assert session.get_link_states([("no", "pe")]) == [None]
        assert session.get_visual_states([("n", "o", "pe")]) == [None]
        assert session.get_light_states(["nope"]) == [None]
