"""K=10, T=3000 group-size table for beta in {-0.5, 0.1, 0.5}."""

from _common import run_scenario

if __name__ == "__main__":
    run_scenario("table_repro", __doc__)
