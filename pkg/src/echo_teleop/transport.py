"""Byte transports: a real serial port and the in-process sim loopback.

Both carry identical protocol bytes; the transport string selects one:

    sim:<scenario>       loopback against a SimWorld ("sim:egg", "sim:wave",
                         or "sim:/path/to/custom.cfg")
    serial:<dev>[:baud]  POSIX serial device, default 115200 baud
    /dev/<name>          shorthand for serial:<dev>
"""

from __future__ import annotations

import os

from .errors import TransportUnavailable, UnknownScenario
from .sim import ScenarioConfig, SimWorld, load_scenario_config

DEFAULT_BAUD = 115200


class LoopbackTransport:
    """In-process pipe to a SimWorld; read/write move real protocol bytes."""

    def __init__(self, world: SimWorld):
        self.world = world

    def read(self) -> bytes:
        return self.world.read_host_bytes()

    def write(self, data: bytes) -> None:
        self.world.write_host_bytes(data)

    def close(self) -> None:
        pass


class SerialTransport:
    """Raw nonblocking POSIX serial port (termios, 8N1)."""

    def __init__(self, device: str, baud: int = DEFAULT_BAUD):
        import termios

        try:
            self._fd = os.open(device, os.O_RDWR | os.O_NOCTTY | os.O_NONBLOCK)
        except OSError as exc:
            raise TransportUnavailable(f"cannot open {device}: {exc}") from exc
        try:
            speed = getattr(termios, f"B{baud}")
        except AttributeError as exc:
            raise TransportUnavailable(f"unsupported baud rate {baud}") from exc
        try:
            attrs = termios.tcgetattr(self._fd)
            attrs[0] = 0  # iflag: raw input
            attrs[1] = 0  # oflag: raw output
            attrs[2] = termios.CS8 | termios.CREAD | termios.CLOCAL  # cflag
            attrs[3] = 0  # lflag: no canonical mode, no echo
            attrs[4] = speed  # ispeed
            attrs[5] = speed  # ospeed
            termios.tcsetattr(self._fd, termios.TCSANOW, attrs)
        except termios.error as exc:
            os.close(self._fd)
            raise TransportUnavailable(f"{device} is not a serial port: {exc}") from exc

    def read(self) -> bytes:
        try:
            return os.read(self._fd, 4096)
        except BlockingIOError:
            return b""

    def write(self, data: bytes) -> None:
        os.write(self._fd, data)

    def close(self) -> None:
        os.close(self._fd)


def open_transport(spec: str, baud: int = DEFAULT_BAUD, **world_kwargs):
    """Build a transport from its CLI string; raises TransportUnavailable."""
    if spec.startswith("sim:"):
        name = spec[len("sim:") :]
        try:
            cfg = load_scenario_config(name)
        except UnknownScenario as exc:
            raise TransportUnavailable(str(exc)) from exc
        return LoopbackTransport(SimWorld(cfg, **world_kwargs))
    if spec.startswith("serial:"):
        rest = spec[len("serial:") :]
        if ":" in rest:
            device, _, baud_text = rest.rpartition(":")
            try:
                baud = int(baud_text)
            except ValueError as exc:
                raise TransportUnavailable(f"bad baud in {spec!r}") from exc
        else:
            device = rest
        return SerialTransport(device, baud)
    if spec.startswith("/dev/"):
        return SerialTransport(spec, baud)
    raise TransportUnavailable(f"unrecognized transport {spec!r}")


def loopback_for_config(cfg: ScenarioConfig, **world_kwargs) -> LoopbackTransport:
    return LoopbackTransport(SimWorld(cfg, **world_kwargs))
