"""Acceptance criteria, one test per criterion, with a pass/fail line per row.

Rows tagged as published forms evaluate a closed form exactly as printed in
the source; they fail numerically and are kept as strict xfails so that the
failure stays visible and any change in behaviour is caught.
"""

from __future__ import annotations

import pytest

from artifact import checks

from conftest import ACCEPTANCE_ROWS

CRITERIA = [
    ("moments", ("moments",)),
    ("rho identity", ("rho identity",)),
    ("intertwining", ("intertwining",)),
    ("wronskian", ("wronskian",)),
    ("level curve and constancy", ("level curve law", "spectrum constancy")),
    ("decay bound", ("decay bound",)),
    ("gamma functional", ("gamma functional",)),
    ("fredholm", ("fredholm",)),
    ("resolvent", ("resolvent symmetry", "resolvent identity")),
    ("critical points", ("critical points",)),
    ("unbounded transform", ("unbounded transform",)),
    ("symmetries (supplementary)", ("symmetries",)),
]


def _published(row) -> bool:
    return row.detail.startswith("published")


@pytest.fixture(scope="module")
def rows():
    return checks.run_all()


def _select(rows, groups):
    return [r for r in rows if r.check in groups]


@pytest.mark.parametrize("label,groups", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(rows, label, groups):
    sel = _select(rows, groups)
    assert sel, f"no rows for {label}"
    own = [r for r in sel if not _published(r)]
    pub = [r for r in sel if _published(r)]
    verdict = "PASS" if all(r.passed for r in own) else "FAIL"
    if pub:
        verdict += " (published form: " + ("PASS" if all(r.passed for r in pub) else "FAIL") + ")"
    ACCEPTANCE_ROWS.append((label, verdict, [r.line() for r in sel]))
    for r in sel:
        print(r.line())
    failed = [r.name for r in own if not r.passed]
    assert not failed, failed


PUBLISHED = [("moments", "quartic moment closed form"),
             ("wronskian", "Wronskian constant"),
             ("gamma functional", "Gamma shift relation without lam^2"),
             ("resolvent identity", "eigenvector/resolvent identity phases")]


@pytest.mark.parametrize("group,what", PUBLISHED, ids=[p[1] for p in PUBLISHED])
@pytest.mark.xfail(strict=True, reason="published closed form disagrees with independent oracles; see README")
def test_published_form(rows, group, what):
    sel = [r for r in rows if r.check == group and _published(r)]
    assert sel
    for r in sel:
        assert r.passed, r.line()
