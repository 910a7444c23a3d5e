import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# Lines recorded by the acceptance tests, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def detail(request):
    """Free-text measurements attached to the criterion line of a test."""
    notes: list[str] = []
    request.node.criterion_notes = notes
    return notes


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        notes = "; ".join(getattr(item, "criterion_notes", []))
        if rep.skipped and isinstance(rep.longrepr, tuple):
            notes = (notes + "; " if notes else "") + str(rep.longrepr[2]).removeprefix("Skipped: ")
        number, title = marker.args
        line = f"criterion {number:>2} {status}: {title}" + (f" ({notes})" if notes else "")
        ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_image(rng, width, height):
    from parex.image_io import ImageBuffer

    return ImageBuffer(rng.integers(0, 256, size=(height, width), dtype=np.uint8))


def random_mask(rng, width, height, missing=0.3):
    from parex.image_io import PixelMask

    return PixelMask(rng.random((height, width)) >= missing)


class TcpPool:
    """A TCP master transport with ``n`` worker threads connected over loopback."""

    def __init__(self, n):
        import threading

        from parex.distribution import TcpMasterTransport, connect_worker, run_worker

        self.transport = TcpMasterTransport("127.0.0.1", 0, n, accept_timeout=30)
        host, port = self.transport.address

        def serve():
            endpoint = connect_worker(host, port)
            try:
                run_worker(endpoint)
            finally:
                endpoint.close()

        self.threads = [threading.Thread(target=serve, daemon=True) for _ in range(n)]
        for t in self.threads:
            t.start()
        self.transport.accept_workers()

    def __enter__(self):
        return self.transport

    def __exit__(self, *exc):
        self.transport.close()
        for t in self.threads:
            t.join(timeout=30)


class Tap:
    """Transport wrapper that records every frame the master sends."""

    def __init__(self, inner):
        self.inner = inner
        self.n_workers = inner.n_workers
        self.sent = []

    def send(self, worker, frame):
        self.sent.append((worker, frame))
        self.inner.send(worker, frame)

    def recv(self, timeout=None):
        return self.inner.recv(timeout)

    def close(self):
        self.inner.close()
