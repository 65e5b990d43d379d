"""Flight time against cruise speed with and without the cutoff voltage, and the naive estimate."""

from _common import finish, parse
from pap_planner.experiments import run_flight_time_sweep

if __name__ == "__main__":
    sc, out = parse(__doc__)
    finish(run_flight_time_sweep(sc), out)
