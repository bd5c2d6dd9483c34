"""Coordinated-bidding solver toolkit for GSP/VCG position auctions.

An agency managing a group of advertisers picks their bids jointly and
settles up through monetary transfers, subject to each advertiser's
outside option and the agency's budget.  This package provides exact
mechanism accounting, a graph-based weighted-utility optimizer over
discretized bids, and approximation solvers for both the unrestricted
and the no-payout (limited-liability) transfer regimes.
"""

from .arbitrary import Assumption1Report, check_assumption1, solve_arbitrary
from .core import (
    GSP,
    VCG,
    AgencySolution,
    AuctionInstance,
    Bid,
    BidProfile,
    Colluder,
    ExternalDistribution,
    InfeasibleError,
    InstanceError,
    ToleranceError,
    check_delta_ic,
    instance_to_raw,
    make_profile,
    validate_and_normalize,
)
from .discretize import BidGrid, Interval, IntervalSet, build_grid, project_to_grid
from .limited import DualValues, solve_ll
from .mechanisms import expected_outcome, individual_baseline, single_outcome
from .wup import WupWeights, solve_wup_expected, solve_wup_fixed

__version__ = "0.1.0"

__all__ = [
    "GSP",
    "VCG",
    "AgencySolution",
    "Assumption1Report",
    "AuctionInstance",
    "Bid",
    "BidGrid",
    "BidProfile",
    "Colluder",
    "DualValues",
    "ExternalDistribution",
    "InfeasibleError",
    "InstanceError",
    "Interval",
    "IntervalSet",
    "ToleranceError",
    "WupWeights",
    "build_grid",
    "check_assumption1",
    "check_delta_ic",
    "expected_outcome",
    "individual_baseline",
    "instance_to_raw",
    "make_profile",
    "project_to_grid",
    "single_outcome",
    "solve_arbitrary",
    "solve_ll",
    "solve_wup_expected",
    "solve_wup_fixed",
    "validate_and_normalize",
]
