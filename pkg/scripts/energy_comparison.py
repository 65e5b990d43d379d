"""Total energy of the multi-lap, single-lap and fly-hover policies against file size."""

from _common import finish, parse
from pap_planner.experiments import run_energy_comparison

if __name__ == "__main__":
    sc, out = parse(__doc__)
    finish(run_energy_comparison(sc), out)
