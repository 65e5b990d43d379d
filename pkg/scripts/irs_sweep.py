"""GEE against IRS size for the five reflection strategies on the single NLoS GN layout."""

from _common import finish, parse
from pap_planner.experiments import amplitude_effect_trials, run_irs_sweep

if __name__ == "__main__":
    sc, out = parse(__doc__)
    finish(run_irs_sweep(sc), out)
    finish(amplitude_effect_trials(sc, 100), out)
