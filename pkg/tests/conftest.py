import os
import time

import numpy as np
import pytest

from ymflow import cli, config, liealg, runner


@pytest.fixture(scope="session")
def alg():
    return liealg.su2()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


class ScenarioCache:
    """Runs each shipped scenario at most once per test session."""

    def __init__(self, root):
        self.root = root
        self._done = {}
        self.elapsed = {}

    def __call__(self, name):
        if name not in self._done:
            cfg = config.load_config(cli.scenario_path(name))
            out = os.path.join(self.root, name)
            t0 = time.perf_counter()
            code, rep = runner.run_config(cfg, out)
            self.elapsed[name] = time.perf_counter() - t0
            self._done[name] = (code, rep, out)
        return self._done[name]


@pytest.fixture(scope="session")
def scenario_run(tmp_path_factory):
    return ScenarioCache(str(tmp_path_factory.mktemp("scenarios")))
