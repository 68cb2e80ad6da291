"""K=5, T=1000 sweep over beta = 0, 0.25, ..., 2."""

from _common import run_scenario

if __name__ == "__main__":
    run_scenario("beta_sweep", __doc__)
