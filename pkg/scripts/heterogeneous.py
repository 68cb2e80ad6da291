"""K=15, T=10000 runs from initial sizes in [1, 20]."""

from _common import run_scenario

if __name__ == "__main__":
    run_scenario("heterogeneous", __doc__)
