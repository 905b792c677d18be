import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from secmimo.corrmat import CorrelationSpec, build_correlation
from secmimo.rates import simulate_realizations

from oracles import make_config

FIG1_SEED = 12345
FIG1_REALIZATIONS = 1000


@pytest.fixture(scope="session")
def fig1_batches():
    """Channel statistics at the flagship scale (N=256, K=16, M=4), one batch
    per correlation level; shared by the heavier statistical tests."""
    out = {}
    for zeta in (0.2, 0.6):
        config = make_config(zeta=zeta)
        corr = build_correlation(CorrelationSpec.exponential(zeta), config.N)
        batch = simulate_realizations(config, FIG1_REALIZATIONS, FIG1_SEED,
                                      corr=corr)
        out[zeta] = (config, corr, batch)
    return out
