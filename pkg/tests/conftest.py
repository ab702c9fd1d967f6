import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dht.channel import Dmc
from dht.singleletter import TaciInstance


@pytest.fixture
def dsbs_bsc():
    """Default study instance: symmetric binary source q=0.1 through BSC(0.1)."""

    def make(tau: float = 1.0) -> TaciInstance:
        return TaciInstance.dsbs(0.1, Dmc.bsc(0.1), tau)

    return make
