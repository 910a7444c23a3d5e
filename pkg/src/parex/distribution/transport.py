"""Byte-frame transports between one master and ``n`` workers.

The master side of every transport offers ``send(worker, frame)`` and a
blocking ``recv() -> (worker, frame)`` fed by a single queue that all
connections write into.  A ``None`` frame from ``recv`` never escapes: a
closed or broken connection raises :class:`ConnectionLost` instead.

Workers see an endpoint with ``recv() -> frame | None`` (``None`` on EOF)
and ``send(frame)``.
"""

from __future__ import annotations

import logging
import queue
import random
import socket
import threading
import time
from typing import Callable, Protocol

from . import protocol
from .protocol import Variant

__all__ = [
    "Transport",
    "WorkerEndpoint",
    "TransportError",
    "ConnectionLost",
    "LocalTransport",
    "local_transport",
    "TcpMasterTransport",
    "tcp_transport",
    "connect_worker",
    "ReorderingTransport",
]

log = logging.getLogger(__name__)

_EOF = None


class TransportError(Exception):
    pass


class ConnectionLost(TransportError):
    def __init__(self, worker: int, reason: str = "connection closed") -> None:
        super().__init__(f"worker {worker}: {reason}")
        self.worker = worker


class WorkerEndpoint(Protocol):
    def recv(self) -> bytes | None: ...

    def send(self, frame: bytes) -> None: ...


class Transport(Protocol):
    n_workers: int

    def send(self, worker: int, frame: bytes) -> None: ...

    def recv(self, timeout: float | None = None) -> tuple[int, bytes]: ...

    def close(self) -> None: ...


def _variant(frame: bytes) -> int:
    return frame[5] if len(frame) > 5 else -1


class _QueueEndpoint:
    def __init__(self, worker: int, inbox: queue.Queue, outbox: queue.Queue) -> None:
        self.worker = worker
        self.inbox = inbox
        self.outbox = outbox

    def recv(self) -> bytes | None:
        return self.inbox.get()

    def send(self, frame: bytes) -> None:
        self.outbox.put((self.worker, frame))


class _MasterBase:
    n_workers: int

    def __init__(self) -> None:
        self._results: queue.Queue = queue.Queue()
        self._closed = False

    def recv(self, timeout: float | None = None) -> tuple[int, bytes]:
        try:
            worker, frame = self._results.get(timeout=timeout)
        except queue.Empty:
            raise TransportError(f"no message within {timeout} s") from None
        if frame is _EOF:
            raise ConnectionLost(worker)
        return worker, frame

    def __enter__(self):
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class LocalTransport(_MasterBase):
    """``n`` worker loops on threads, linked to the master by queues.

    Frames are passed as encoded bytes, exactly as they would cross a
    socket, so payloads are identical to the TCP transport.
    """

    def __init__(self, n_workers: int, worker_main: Callable[[WorkerEndpoint], None] | None = None) -> None:
        if n_workers < 1:
            raise ValueError(f"need at least one worker, got {n_workers}")
        super().__init__()
        if worker_main is None:
            from .runtime import run_worker as worker_main
        self.n_workers = n_workers
        self._inboxes = [queue.Queue() for _ in range(n_workers)]
        self._threads = []
        for i in range(n_workers):
            endpoint = _QueueEndpoint(i, self._inboxes[i], self._results)
            t = threading.Thread(target=self._serve, args=(worker_main, endpoint), name=f"parex-worker-{i}", daemon=True)
            t.start()
            self._threads.append(t)

    def _serve(self, worker_main, endpoint: _QueueEndpoint) -> None:
        try:
            worker_main(endpoint)
        except Exception:
            log.exception("worker %d crashed", endpoint.worker)
            self._results.put((endpoint.worker, _EOF))

    def send(self, worker: int, frame: bytes) -> None:
        if self._closed:
            raise TransportError("transport is closed")
        if not self._threads[worker].is_alive():
            raise ConnectionLost(worker, "worker thread has exited")
        self._inboxes[worker].put(frame)

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        shutdown = protocol.encode(protocol.Shutdown())
        for box in self._inboxes:
            box.put(shutdown)
        for t in self._threads:
            t.join(timeout=30)


def local_transport(n_workers: int) -> LocalTransport:
    return LocalTransport(n_workers)


class _SocketEndpoint:
    def __init__(self, sock: socket.socket) -> None:
        self.sock = sock
        self.stream = sock.makefile("rb")

    def recv(self) -> bytes | None:
        return protocol.read_frame(self.stream)

    def send(self, frame: bytes) -> None:
        self.sock.sendall(frame)

    def close(self) -> None:
        self.stream.close()
        self.sock.close()


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            break
        buf += chunk
    return bytes(buf)


class TcpMasterTransport(_MasterBase):
    """Listening side of the TCP transport; one connection per worker.

    Construction binds the socket (port 0 picks a free port, see
    :attr:`address`).  :meth:`accept_workers` blocks until the expected
    number of workers has connected and passed the handshake.  Peers that
    fail the handshake are dropped and do not count.
    """

    def __init__(self, host: str, port: int, expect_workers: int, accept_timeout: float | None = 60.0) -> None:
        if expect_workers < 1:
            raise ValueError(f"need at least one worker, got {expect_workers}")
        super().__init__()
        self.n_workers = expect_workers
        self.accept_timeout = accept_timeout
        try:
            self._listener = socket.create_server((host, port))
        except OSError as exc:
            raise TransportError(f"cannot listen on {host}:{port}: {exc}") from exc
        self._conns: list[socket.socket] = []
        self._readers: list[threading.Thread] = []

    @property
    def address(self) -> tuple[str, int]:
        return self._listener.getsockname()[:2]

    def accept_workers(self) -> "TcpMasterTransport":
        self._listener.settimeout(self.accept_timeout)
        while len(self._conns) < self.n_workers:
            try:
                conn, peer = self._listener.accept()
            except socket.timeout:
                raise TransportError(
                    f"only {len(self._conns)} of {self.n_workers} workers connected within {self.accept_timeout} s"
                ) from None
            conn.settimeout(self.accept_timeout)
            try:
                protocol.check_handshake(_recv_exact(conn, len(protocol.MAGIC) + 1))
                conn.sendall(protocol.handshake_bytes())
            except (protocol.ProtocolError, OSError) as exc:
                log.warning("rejecting worker %s: %s", peer, exc)
                conn.close()
                continue
            conn.settimeout(None)
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            worker = len(self._conns)
            self._conns.append(conn)
            t = threading.Thread(target=self._read_loop, args=(worker, conn), name=f"parex-reader-{worker}", daemon=True)
            t.start()
            self._readers.append(t)
            log.info("worker %d connected from %s", worker, peer)
        return self

    def _read_loop(self, worker: int, conn: socket.socket) -> None:
        stream = conn.makefile("rb")
        try:
            while True:
                frame = protocol.read_frame(stream)
                if frame is None:
                    break
                self._results.put((worker, frame))
        except (OSError, protocol.ProtocolError, ValueError) as exc:
            if not self._closed:
                log.warning("worker %d stream failed: %s", worker, exc)
        finally:
            self._results.put((worker, _EOF))

    def send(self, worker: int, frame: bytes) -> None:
        if self._closed:
            raise TransportError("transport is closed")
        try:
            self._conns[worker].sendall(frame)
        except OSError as exc:
            raise ConnectionLost(worker, str(exc)) from exc

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        shutdown = protocol.encode(protocol.Shutdown())
        for conn in self._conns:
            try:
                conn.sendall(shutdown)
                conn.shutdown(socket.SHUT_WR)
            except OSError:
                pass
        for t in self._readers:
            t.join(timeout=30)
        for conn in self._conns:
            conn.close()
        self._listener.close()


def tcp_transport(host: str, port: int, expect_workers: int, accept_timeout: float | None = 60.0) -> TcpMasterTransport:
    """Bind, then wait for ``expect_workers`` workers to connect."""
    return TcpMasterTransport(host, port, expect_workers, accept_timeout).accept_workers()


def connect_worker(host: str, port: int, timeout: float = 30.0) -> _SocketEndpoint:
    """Open a worker connection and complete the version handshake.

    Refused connections are retried until ``timeout`` so workers may be
    started before the master is listening.
    """
    deadline = time.monotonic() + timeout
    while True:
        try:
            sock = socket.create_connection((host, port), timeout=max(0.1, deadline - time.monotonic()))
            break
        except OSError as exc:
            if time.monotonic() >= deadline:
                raise TransportError(f"cannot connect to {host}:{port}: {exc}") from exc
            time.sleep(0.1)
    sock.sendall(protocol.handshake_bytes())
    reply = _recv_exact(sock, len(protocol.MAGIC) + 1)
    try:
        protocol.check_handshake(reply)
    except protocol.ProtocolError:
        sock.close()
        raise
    sock.settimeout(None)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    return _SocketEndpoint(sock)


class ReorderingTransport:
    """Test wrapper that delivers the worker replies in a shuffled order.

    It counts ASSIGN frames going out; when the master asks for a reply,
    all outstanding replies are first collected from the wrapped transport
    and then handed out in a seeded random order.
    """

    def __init__(self, inner: Transport, seed: int = 0) -> None:
        self.inner = inner
        self.n_workers = inner.n_workers
        self._rng = random.Random(seed)
        self._outstanding = 0
        self._buffer: list[tuple[int, bytes]] = []

    def send(self, worker: int, frame: bytes) -> None:
        if _variant(frame) == Variant.ASSIGN:
            self._outstanding += 1
        self.inner.send(worker, frame)

    def recv(self, timeout: float | None = None) -> tuple[int, bytes]:
        if not self._buffer:
            while self._outstanding:
                self._buffer.append(self.inner.recv(timeout))
                self._outstanding -= 1
            self._rng.shuffle(self._buffer)
        if not self._buffer:
            return self.inner.recv(timeout)
        return self._buffer.pop()

    def close(self) -> None:
        self.inner.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc) -> None:
        self.close()
