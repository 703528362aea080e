"""Round-synchronous multi-party execution."""
from .config import RuntimeConfig, load_config, parse_config
from .engine import DirectEngine, IoCounter, Party, open_value, stream_rng
from .execute import Transcript, run_simulated, run_tcp
from .transport import InMemoryHub, InMemoryTransport, TcpTransport
from .wire import RoundMessage, decode_frame, encode_frame

__all__ = [
    "DirectEngine",
    "InMemoryHub",
    "InMemoryTransport",
    "IoCounter",
    "Party",
    "RoundMessage",
    "RuntimeConfig",
    "TcpTransport",
    "Transcript",
    "decode_frame",
    "encode_frame",
    "load_config",
    "open_value",
    "parse_config",
    "run_simulated",
    "run_tcp",
    "stream_rng",
]
