"""Circle count of the multi-tier packing against fixed 5-, 7- and 10-circle multilevel packings."""

from _common import finish, parse
from pap_planner.experiments import run_pack_comparison

if __name__ == "__main__":
    sc, out = parse(__doc__)
    finish(run_pack_comparison(sc), out)
