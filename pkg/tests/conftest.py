"""
Shared fixtures: a small 16 kHz chirp family, a dictionary trained on it
and a held-out noisy clip. Expensive fixtures are session-scoped.
"""

import os
import sys
from dataclasses import replace

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from data.generate_synthetic_data import SynthSpec, synth_corpus  # noqa: E402
from models.directional.dictionary import train_dictionary  # noqa: E402
from models.directional.vmf_mixture import EmConfig  # noqa: E402
from models.segmentation.pipeline import PipelineParams, segment_recording  # noqa: E402
from models.utils.preprocessing import StftParams  # noqa: E402

SAMPLE_RATE = 16000


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture(scope="session")
def chirp_spec():
    return SynthSpec(
        duration_s=6.0,
        event_count=4,
        event_kind="chirp",
        freq_range_hz=(2000.0, 3500.0),
        event_duration_range_ms=(200.0, 350.0),
        noise_kind="white",
        snr_db=20.0,
        sample_rate=SAMPLE_RATE,
        n_clips=1,
        seed=7,
    )


@pytest.fixture(scope="session")
def train_corpus(chirp_spec):
    return synth_corpus(replace(chirp_spec, snr_db=30.0, n_clips=4, seed=11))


@pytest.fixture(scope="session")
def small_em():
    return EmConfig(num_components=12, max_iters=40, seed=42)


@pytest.fixture(scope="session")
def trained(train_corpus, small_em):
    """(dictionary, mixture, trace) for the chirp family, 10 atoms kept."""
    clips, labels = zip(*train_corpus)
    return train_dictionary(clips, labels, StftParams(), 5, small_em, keep=10)


@pytest.fixture(scope="session")
def dictionary(trained):
    return trained[0]


@pytest.fixture(scope="session")
def test_pair(chirp_spec):
    return synth_corpus(replace(chirp_spec, seed=23))[0]


@pytest.fixture(scope="session")
def params():
    return PipelineParams()


@pytest.fixture(scope="session")
def segmented(test_pair, dictionary, params):
    return segment_recording(test_pair[0], dictionary, params)
