"""deterministic growth-plus-redistribution variant."""

from _common import run_scenario

if __name__ == "__main__":
    run_scenario("redistribution_demo", __doc__)
