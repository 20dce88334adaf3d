"""Built-in example algebras with verified soliton certificates.

Every entry carries the identity default metric and an expected
certificate.  Values for nil3, nil4, sol3, and hyp_n follow from short
hand computations (see the tests, which rederive them with independent
oracles); the heis5 and heis3_ext values were frozen as regression
constants after the least-squares solver and a closed-form Ricci oracle
agreed to machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotInCatalog
from .liealg import LieAlgebra
from .soliton import SolitonCertificate


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    algebra: LieAlgebra
    metric: np.ndarray
    expected: SolitonCertificate
    chart: str | None
    note: str

    def __post_init__(self):
        m = np.asarray(self.metric, dtype=float).copy()
        m.flags.writeable = False
        object.__setattr__(self, "metric", m)


def _cert(lam, diag_or_mat, cls, n=None):
    D = np.diag(np.asarray(diag_or_mat, dtype=float)) if np.ndim(diag_or_mat) == 1 \
        else np.asarray(diag_or_mat, dtype=float)
    if np.ndim(diag_or_mat) == 0:
        D = np.zeros((n, n))
    return SolitonCertificate(lam=float(lam), D=D, residual=0.0, classification=cls)


def _build() -> dict:
    entries = {}

    def add(entry):
        entries[entry.name] = entry

    for n in range(2, 9):
        add(CatalogEntry(
            name=f"abelian_{n}",
            algebra=LieAlgebra(n),
            metric=np.eye(n),
            expected=_cert(0.0, 0, "flat", n=n),
            chart=None,
            note="abelian: flat, lambda = 0, D = 0",
        ))

    # Heisenberg algebra: [e1, e2] = e3
    add(CatalogEntry(
        name="nil3",
        algebra=LieAlgebra(3, ((0, 1, 2, 1.0),)),
        metric=np.eye(3),
        expected=_cert(-1.5, (1.0, 1.0, 2.0), "nilsoliton"),
        chart="nil3",
        note="Heisenberg nilsoliton: Rc = diag(-1/2,-1/2,1/2), lambda = -3/2, "
             "D = diag(1,1,2) (hand computation)",
    ))

    # filiform: [e1, e2] = e3, [e1, e3] = e4
    add(CatalogEntry(
        name="nil4",
        algebra=LieAlgebra(4, ((0, 1, 2, 1.0), (0, 2, 3, 1.0))),
        metric=np.eye(4),
        expected=_cert(-1.5, (0.5, 1.0, 1.5, 2.0), "nilsoliton"),
        chart=None,
        note="filiform nilsoliton: Rc = diag(-1,-1/2,0,1/2), lambda = -3/2, "
             "D = diag(1/2,1,3/2,2) (hand computation)",
    ))

    # 5D Heisenberg: [e1, e2] = e5, [e3, e4] = e5
    add(CatalogEntry(
        name="heis5",
        algebra=LieAlgebra(5, ((0, 1, 4, 1.0), (2, 3, 4, 1.0))),
        metric=np.eye(5),
        expected=_cert(-2.0, (1.5, 1.5, 1.5, 1.5, 3.0), "nilsoliton"),
        chart=None,
        note="two-step nilsoliton; lambda and D are regression values pinned "
             "after the solver matched the closed-form nilpotent Ricci oracle "
             "(Rc = diag(-1/2,...,-1/2,1))",
    ))

    # sol3: [e3, e1] = e1, [e3, e2] = -e2  (stored with i < j)
    add(CatalogEntry(
        name="sol3",
        algebra=LieAlgebra(3, ((0, 2, 0, -1.0), (1, 2, 1, 1.0))),
        metric=np.eye(3),
        expected=_cert(-2.0, (2.0, 2.0, 0.0), "solvsoliton"),
        chart="sol3",
        note="solvsoliton: Rc = diag(0,0,-2), lambda = -2, D = diag(2,2,0) "
             "(hand computation via sectional curvatures (1,-1,-1))",
    ))

    # hyp_n: [e_n, e_i] = e_i for i < n
    for n in range(2, 7):
        ents = tuple((i, n - 1, i, -1.0) for i in range(n - 1))
        add(CatalogEntry(
            name=f"hyp_{n}",
            algebra=LieAlgebra(n, ents),
            metric=np.eye(n),
            expected=_cert(-(n - 1.0), 0, "Einstein", n=n),
            chart="hyp3" if n == 3 else None,
            note=f"hyperbolic space model: Einstein, ric = -(n-1) g, n = {n}",
        ))

    # heis3 extended by a semisimple derivation:
    # [e4, e1] = e1/2, [e4, e2] = e2/2, [e4, e3] = e3 on top of heis3
    add(CatalogEntry(
        name="heis3_ext",
        algebra=LieAlgebra(4, ((0, 1, 2, 1.0), (0, 3, 0, -0.5),
                               (1, 3, 1, -0.5), (2, 3, 2, -1.0))),
        metric=np.eye(4),
        expected=_cert(-1.5, 0, "Einstein", n=4),
        chart=None,
        note="rank-one solvable extension of heis3 with codimension-one "
             "nilradical; Einstein with ric = -3/2 g (regression value, "
             "verified exactly by the curvature module)",
    ))

    return entries


_ENTRIES = _build()
_ALIASES = {"heis3": "nil3", "hyp3": "hyp_3"}


def names() -> tuple:
    """Canonical entry names in deterministic order."""
    return tuple(_ENTRIES.keys())


def entries() -> tuple:
    return tuple(_ENTRIES.values())


def get(name: str) -> CatalogEntry:
    key = _ALIASES.get(name, name)
    try:
        return _ENTRIES[key]
    except KeyError:
        raise NotInCatalog(f"unknown catalog entry {name!r}; "
                           f"known: {', '.join(names())}") from None
