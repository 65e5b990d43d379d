"""Hover time against the number of cells, with the take-off weight ceiling marked."""

from _common import finish, parse
from pap_planner.experiments import run_battery_sizing

if __name__ == "__main__":
    sc, out = parse(__doc__)
    finish(run_battery_sizing(sc, n_range=range(1, 121)), out)
