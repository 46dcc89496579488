import numpy as np
import pytest

from toqc.arc_analysis import boundary_closure_study, derive_singular_structure
from toqc.errors import ValidationError
from toqc.scenarios import get_scenario


def test_landau_zener_interior_structure():
    sc = get_scenario("landau_zener")
    rep = derive_singular_structure(sc.arc_model())
    assert rep.verdict == "consistent"
    assert rep.order == 2
    conds = set(rep.derived_conditions)
    assert {"f1 = 0", "f2 = 0", "u = 0"} <= conds


def test_one_qubit_xy_interior_excluded():
    sc = get_scenario("one_qubit_xy")
    rep = derive_singular_structure(sc.arc_model())
    assert rep.verdict == "excluded"
    assert rep.order == 1
    assert any("tr[H_d F] = 0" in note for note in rep.notes)


def test_symmetric_two_qubit_interior_conditions_exact():
    sc = get_scenario("symmetric_two_qubit")
    rep = derive_singular_structure(sc.arc_model())
    assert rep.verdict == "consistent"
    assert set(rep.derived_conditions) == set(
        sc.reference_facts["interior_conditions"])


def test_symmetric_two_qubit_boundary_cases_excluded():
    sc = get_scenario("symmetric_two_qubit")
    verdicts = {}
    for case in sc.boundary_cases:
        rep = boundary_closure_study(sc.constraint, case, seed=5)
        verdicts[case.name] = rep.verdict
    assert verdicts == sc.reference_facts["boundary_verdicts"]


def test_boundary_exchange_case_fails_semidefiniteness():
    # the exchange-saturated piece survives the chain conditions but the
    # second-order matrix picks up the negative (omega0 - Omega) entry
    sc = get_scenario("symmetric_two_qubit", omega0=1.0, Omega=2.0)
    case = next(c for c in sc.boundary_cases if c.name == "J")
    rep = boundary_closure_study(sc.constraint, case, seed=5)
    assert rep.verdict == "excluded"
    assert rep.order == 2
    assert not rep.sign_ok
    assert max(rep.eigenvalues_at_order) > 0.5  # (Omega - omega0) * f4 scale


def test_boundary_field_cases_fail_at_chain_level():
    sc = get_scenario("symmetric_two_qubit")
    for name in ("b3", "b1", "b2"):
        case = next(c for c in sc.boundary_cases if c.name == name)
        rep = boundary_closure_study(sc.constraint, case, seed=5)
        assert rep.order is None
        assert any("no costate" in note for note in rep.notes)


def test_boundary_study_needs_ball_kind():
    sc = get_scenario("one_qubit_xy")
    from toqc.arc_analysis import BoundaryCase
    with pytest.raises(ValidationError):
        boundary_closure_study(sc.constraint, BoundaryCase("x", (), 0))


def test_interior_closure_numeric_cross_check():
    # numeric counterpart of the symbolic interior study: at an interior
    # point with any field component on, the flow closure leaves no
    # normalizable singular costate; on the exchange axis it leaves exactly
    # the surviving one
    import toqc.arc_analysis as aa
    from toqc.singular_glc import ControlChart
    from toqc.sun_algebra import expand, generalized_gellmann

    sc = get_scenario("symmetric_two_qubit")
    c = sc.constraint
    basis = generalized_gellmann(3)
    phi = expand(c.drift, basis)

    def feasible(u):
        chart = ControlChart(tuple(c.control_basis), u=u,
                             names=c.control_names)
        rows = aa._flow_closure_rows(c, u, chart)
        _, s, vt = np.linalg.svd(rows)
        rank = int(np.sum(s > 1e-9 * s[0]))
        null = vt[rank:]
        return null.shape[0] > 0 and np.max(np.abs(null @ phi)) > 1e-9

    assert feasible(np.array([0.0, 0.0, 0.0, 0.5]))
    assert not feasible(np.array([0.3, 0.0, 0.0, 0.5]))
    assert not feasible(np.array([0.0, 0.2, 0.1, 0.5]))


def test_interior_study_typical_qutrit_variant():
    # the Hilbert-Schmidt (typical-qutrit) bound variant has the same
    # interior singular structure
    sc = get_scenario("symmetric_two_qubit", typical_qutrit=True)
    rep = derive_singular_structure(sc.arc_model())
    assert rep.verdict == "consistent"
    assert "b1 = 0" in rep.derived_conditions
