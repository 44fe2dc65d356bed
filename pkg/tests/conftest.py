from __future__ import annotations

import os

import pytest

from sketch import telemetry


@pytest.fixture(scope="session", autouse=True)
def state_dir(tmp_path_factory):
    """Point the process-wide state dir (logs, session file) at a tmp dir."""
    d = tmp_path_factory.mktemp("state")
    os.environ["SKETCH_STATE_DIR"] = str(d)
    telemetry.configure(state_dir=d)
    return d


@pytest.fixture(scope="session")
def ort():
    """The external onnxruntime oracle; one call runs a batch of models."""
    import ort_runner

    ort_runner.ensure_oracle()
    return ort_runner.run_models
