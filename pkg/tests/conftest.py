import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def demo_corpus(tmp_path_factory):
    """Small on-disk WAV corpus plus manifest for pipeline tests."""
    from vtfusion.synth import make_demo_corpus

    outdir = tmp_path_factory.mktemp("corpus")
    manifest_path = make_demo_corpus(outdir, n_segments=8, seed=7,
                                     sample_rate=11000, duration=0.8)
    return manifest_path
