"""Shared builders for randomized desk-scale test instances."""

import random

import pytest

import bidcoord as bc
from bidcoord.mechanisms import individual_baseline


def dyadic(rng: random.Random, bits: int) -> float:
    """A uniform dyadic rational in [0, 1] with at most `bits` fractional bits."""
    return rng.randrange(0, 2**bits + 1) / 2**bits


def random_instance(
    rng: random.Random,
    max_colluders: int = 4,
    max_external: int = 3,
    max_slots: int = 5,
    max_support: int = 3,
    bid_bits: int = 10,
    mechanism: str = None,
    feasible_outside: bool = False,
) -> bc.AuctionInstance:
    """A random normalized instance.

    With ``feasible_outside`` the outside options are a random downscaling
    of the truthful-bidding utilities, which keeps the participation
    system satisfiable by at least one (continuous) profile.
    """
    n_c = rng.randint(1, max_colluders)
    n_e = rng.randint(0, max_external)
    m = rng.randint(1, min(max_slots, n_c + n_e))
    k = rng.randint(1, max_support)
    probs = [rng.random() for _ in range(k)]
    total = sum(probs)
    raw = {
        "mechanism": mechanism or rng.choice(["gsp", "vcg"]),
        "slots": sorted((dyadic(rng, bid_bits) for _ in range(m)), reverse=True),
        "colluders": [{"v": dyadic(rng, bid_bits), "t": 0.0} for _ in range(n_c)],
        "external": {
            "support": [
                {"bids": [dyadic(rng, bid_bits) for _ in range(n_e)], "prob": p / total}
                for p in probs
            ]
        },
    }
    instance = bc.validate_and_normalize(raw)
    if feasible_outside:
        base = individual_baseline(instance)
        scale = rng.random()
        raw["colluders"] = [
            {"v": c.valuation, "t": min(1.0, max(0.0, scale * u))}
            for c, u in zip(instance.colluders, base)
        ]
        instance = bc.validate_and_normalize(raw)
    return instance


def random_levels(rng: random.Random, max_levels: int = 6, bits: int = 10) -> list[float]:
    """A random grid of distinct levels always containing 0."""
    d = rng.randint(1, max_levels)
    levels = {dyadic(rng, bits) for _ in range(d)} | {0.0}
    return sorted(levels)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240 + 1)


def example1_raw() -> dict:
    return {
        "mechanism": "vcg",
        "slots": [1.0],
        "colluders": [{"v": 0.6, "t": 0.1}, {"v": 0.5, "t": 0.0}],
        "external": {"support": [{"bids": [0.0], "prob": 1.0}]},
    }


def example3_raw() -> dict:
    return {
        "mechanism": "gsp",
        "slots": [1.0, 1.0],
        "colluders": [{"v": 1.0, "t": 0.01}, {"v": 1.0, "t": 0.01}],
        "external": {"support": [{"bids": [0.75], "prob": 1.0}]},
    }


@pytest.fixture
def example1() -> bc.AuctionInstance:
    return bc.validate_and_normalize(example1_raw())


@pytest.fixture
def example3() -> bc.AuctionInstance:
    return bc.validate_and_normalize(example3_raw())
