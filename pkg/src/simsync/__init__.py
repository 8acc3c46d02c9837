"""simsync: a self-contained simulation world server plus the client-side
framework to build tasks on top of it.

Subpackages are imported explicitly (``from simsync import btree``) so that
lightweight pieces such as the behaviour-tree library stay importable without
pulling in networking code.
"""

__version__ = "0.1.0"

DEFAULT_PORT = 9900
PORT_ENV_VAR = "SIMSYNC_PORT"
