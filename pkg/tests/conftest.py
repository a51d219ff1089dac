"""Shared fixtures plus a summary hook for the acceptance criteria."""

import numpy as np
import pytest

from ankge import ToyConfig, augment_reverse, build_store, generate_toy_kg, init_model

TINY_TRIPLES = [
    ("a", "likes", "b"),
    ("b", "likes", "c"),
    ("c", "likes", "d"),
    ("d", "likes", "e"),
    ("e", "likes", "a"),
    ("a", "sees", "c"),
    ("b", "sees", "d"),
    ("c", "sees", "e"),
]


def tiny_augmented_store():
    """5 entities, 2 raw relations, 8 raw triples, reverse-augmented."""
    return augment_reverse(build_store(TINY_TRIPLES))


@pytest.fixture
def tiny_store():
    return tiny_augmented_store()


@pytest.fixture(scope="session")
def toy_store():
    """Default compositional toy graph, reverse-augmented (80 entities)."""
    train, valid, test = generate_toy_kg(ToyConfig())
    return augment_reverse(build_store(train, valid, test))


@pytest.fixture
def make_model():
    """Factory for randomly initialized models of any family."""

    def build(family, num_entities=7, num_relations=4, dim=4, seed=0, bound=None):
        rng = np.random.default_rng(seed)
        model, _ = init_model(family, num_entities, num_relations, dim, rng, bound)
        return model

    return build


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Prints one line per acceptance criterion after the run."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            tag = nodeid.split("::", 1)[1].removeprefix("test_criterion_")
            number, _, label = tag.partition("_")
            status = "PASS" if outcome == "passed" else "FAIL"
            lines.append(
                (int(number), f"criterion {number} ({label.replace('_', ' ')}): {status}")
            )
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
