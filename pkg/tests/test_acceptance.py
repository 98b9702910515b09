"""Acceptance criteria 1-9, each at its stated tolerance, one report line per criterion."""

import pytest

from toa_lab.potentials import PhysicalConfig
from toa_lab.verify import CHECKS


@pytest.mark.parametrize("criterion", sorted(CHECKS))
def test_acceptance(criterion, acceptance_report):
    result = CHECKS[criterion](PhysicalConfig())
    print(result.line())
    acceptance_report.append(result.line())
    assert result.passed, result.details
