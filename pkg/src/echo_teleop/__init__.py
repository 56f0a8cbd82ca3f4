"""Host software stack for the Echo joint-matching teleoperation device.

Hardware-free by design: the sim transport speaks the same wire protocol as
the real board, so the full loop (sensing, control, force feedback, dataset
recording, telemetry) runs and tests without any hardware attached.
"""

from .control import ControlState, Event, FeedbackGains
from .protocol import FrameParser, crc16, encode_frame
from .recorder import EpisodeRecord, SessionRecorder, load_episode, replay
from .sensing import adc_to_angle, force_to_voltage, linearized_voltage, voltage_to_force
from .sim import ContactObject, FollowerSim, ScenarioConfig, SimWorld, run_egg_scenario
from .types import (
    Calibration,
    ForceChannelParams,
    GripperState,
    MasterState,
    Pose,
    SensitivityMode,
    SlaveCommand,
)

__version__ = "0.1.0"
