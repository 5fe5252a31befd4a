"""Shared fixtures: canonical hand-computable districts."""

import pytest

from builders import B, W, line_district


@pytest.fixture
def split_district():
    """Two zones of two blocks: per-school (white, black) = (3,1) and (1,3)."""
    return line_district([[{W: 3}, {B: 1}], [{W: 1}, {B: 3}]])


@pytest.fixture
def balanced_district():
    """Both schools mirror the district-wide half-and-half split."""
    return line_district([[{W: 2, B: 2}], [{W: 2, B: 2}]])


@pytest.fixture
def separated_district():
    """All white students at one school, everyone else at the other."""
    return line_district([[{W: 4}], [{B: 4}]])
