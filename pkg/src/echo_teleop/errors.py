"""Exception types raised across the Echo host stack."""


class EchoError(Exception):
    """Base class for every error raised by this package."""


# protocol
class OversizedPayload(EchoError):
    """Frame payload exceeds the 64-byte wire limit."""


# sensing
class CountsOutOfRange(EchoError):
    """ADC sample outside the 12-bit range."""


class NonPositiveResistance(EchoError):
    """Sensor resistance must be strictly positive."""


class ForceOutOfRange(EchoError):
    """Force outside the [0, f_max] range of the channel."""


# recorder
class AlreadyRecording(EchoError):
    """An episode is already open for this session."""


class NotRecording(EchoError):
    """No episode is currently open."""


class NonMonotonicTimestamp(EchoError):
    """Sample timestamp does not advance past the previous one."""


class StorageFailure(EchoError):
    """Dataset file or directory could not be written."""


class MalformedRow(EchoError):
    """Episode file row failed to parse."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class VersionMismatch(EchoError):
    """Episode file was written by an unsupported format version."""


class ConfigMismatch(EchoError):
    """Replay target was built from a different configuration."""


# sim / service
class ConfigInvalid(EchoError):
    """Scenario or session configuration failed validation."""


class UnknownScenario(EchoError):
    """No scenario config with the requested name."""


class InvalidMode(EchoError):
    """Sensitivity mode outside {1, 2, 4}."""


class TransportUnavailable(EchoError):
    """Requested transport could not be opened."""


class CalibrationMissing(EchoError):
    """Calibration file not found or unreadable."""
