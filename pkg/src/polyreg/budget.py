"""Search budgets.

`POLYREG_BUDGET` in the environment overrides the default node budget used
by the Ehrenfeucht-Fraisse game solver and related searches.
"""

import os

DEFAULT_GAME_BUDGET = 10_000_000
DEFAULT_SUBSET_CAP = 18
DEFAULT_MONOID_CAP = 4096


def game_budget():
    raw = os.environ.get("POLYREG_BUDGET")
    if raw is None:
        return DEFAULT_GAME_BUDGET
    try:
        value = int(raw)
    except ValueError:
        return DEFAULT_GAME_BUDGET
    return value if value > 0 else DEFAULT_GAME_BUDGET
