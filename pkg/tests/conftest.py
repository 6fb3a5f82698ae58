import random

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return random.Random(1234)


_RUNS = {}


@pytest.fixture(scope="session")
def swat_run():
    """Cached scenario runs keyed by (attack, enforced) or a config dict."""
    from enforcemint.swat.scenario import attack_config, config_from_dict, run_scenario

    def get(attack=None, enforced=False, plcs=None):
        key = (attack, enforced, tuple(sorted((plcs or {}).items())))
        if key not in _RUNS:
            if attack is not None:
                cfg = attack_config(attack, enforced)
            else:
                cfg = config_from_dict({"plcs": plcs or {}})
            _RUNS[key] = run_scenario(cfg)
        return _RUNS[key]

    return get
