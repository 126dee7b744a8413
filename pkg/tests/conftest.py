import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from eegdecode import synth

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def strong_ds():
    return synth.generate(synth.calibration_preset("strong", rng_seed=11))


@pytest.fixture(scope="session")
def null_ds():
    return synth.generate(synth.calibration_preset("null", rng_seed=12))


@pytest.fixture(scope="session")
def small_ds():
    """Three groups, a handful of subjects, behaviour model with every response type."""
    cfg = synth.SynthConfig(
        n_subjects_per_group={"C": 4, "D": 4, "S": 4},
        n_trials=24,
        channels=("Fz", "Cz", "Pz", "Oz"),
        sample_rate_hz=100.0,
        effects=(synth.EffectSpec(("D", "S"), ("Pz",), (300.0, 600.0), 2.0),),
        behavior=synth.PAPER_BEHAVIOR,
        n_sentences=12,
        rng_seed=5,
    )
    return synth.generate(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
