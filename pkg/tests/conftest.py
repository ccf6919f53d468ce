from pathlib import Path

import pytest
from hypothesis import strategies as st

from dissent.config import engine_for_scenario
from dissent.engine import load_scenario
from dissent.model import ClaimTuple, RegionRef

FIXTURES = Path(__file__).parent / "fixtures"
SCENARIOS = FIXTURES / "scenarios"
GOLDEN = FIXTURES / "golden"
CANONICAL = ("easy_consensus", "fast_converge", "max_rounds_cap")


def scenario_path(name: str) -> Path:
    return SCENARIOS / f"{name}.yaml"


def replay(name: str, **overrides):
    """Run a fixture scenario end to end with a zero wall clock."""
    scenario = load_scenario(scenario_path(name))
    engine = engine_for_scenario(scenario, **overrides)
    return engine.run(scenario.task, clock=None)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


# text fields the claim grammar can carry: no '|', no newlines, no outer spaces
_field_text = st.text(
    alphabet=st.characters(whitelist_categories=("L", "N"), whitelist_characters=" ,.-'"),
    min_size=1,
    max_size=30,
).map(str.strip).filter(bool)

_regions = st.one_of(
    st.none(),
    st.builds(
        lambda xs, ys, s: RegionRef("bbox", s, bbox=(xs[0], ys[0], xs[1], ys[1])),
        st.lists(st.floats(0, 1), min_size=2, max_size=2, unique=True).map(sorted),
        st.lists(st.floats(0, 1), min_size=2, max_size=2, unique=True).map(sorted),
        st.floats(0, 1),
    ),
    st.builds(lambda d, s: RegionRef("descriptor", s, descriptor=d), _field_text, st.floats(0, 1)),
)

claim_tuples = st.builds(
    ClaimTuple,
    claim=_field_text,
    confidence=st.floats(0, 1),
    evidence=st.one_of(st.just(""), _field_text),
    region=_regions,
    key=st.one_of(st.none(), _field_text),
)
claim_sets = st.lists(claim_tuples, max_size=6)


# -- acceptance reporting ----------------------------------------------------

ACCEPTANCE_RESULTS: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
