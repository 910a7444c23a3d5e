"""Master/worker runtime, wire protocol and transports."""

from .protocol import (
    Assign,
    BadMagicError,
    BadVersionError,
    Error,
    LengthOverrunError,
    MalformedPayloadError,
    ProtocolError,
    Result,
    Shutdown,
    TruncatedFrameError,
    UnknownVariantError,
    WireMessage,
    decode,
    encode,
)
from .runtime import (
    DuplicateResultError,
    MasterConfig,
    RunAborted,
    RunStats,
    TileStat,
    WorkerFailure,
    run_master,
    run_worker,
)
from .transport import (
    ConnectionLost,
    LocalTransport,
    ReorderingTransport,
    TcpMasterTransport,
    TransportError,
    connect_worker,
    local_transport,
    tcp_transport,
)

__all__ = [
    "Assign",
    "BadMagicError",
    "BadVersionError",
    "ConnectionLost",
    "DuplicateResultError",
    "Error",
    "LengthOverrunError",
    "LocalTransport",
    "MalformedPayloadError",
    "MasterConfig",
    "ProtocolError",
    "ReorderingTransport",
    "Result",
    "RunAborted",
    "RunStats",
    "Shutdown",
    "TcpMasterTransport",
    "TileStat",
    "TransportError",
    "TruncatedFrameError",
    "UnknownVariantError",
    "WireMessage",
    "WorkerFailure",
    "connect_worker",
    "decode",
    "encode",
    "local_transport",
    "run_master",
    "run_worker",
    "tcp_transport",
]
