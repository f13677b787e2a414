import numpy as np
import pytest

from fsusc.linear_system import FrequencySystem
from fsusc.cgn import solve_cgn
from fsusc.preconditioners import build_precond
from fsusc.sweep import Peak, SusceptibilityRow, SweepPlan, log_frequencies, resonance_report, run_sweep
import oracles


def test_log_frequencies_descending():
    w = log_frequencies(1.0, 100.0, 5)
    assert w[0] == pytest.approx(100.0) and w[-1] == pytest.approx(1.0)
    assert all(a > b for a, b in zip(w, w[1:]))
    with pytest.raises(ValueError):
        log_frequencies(0.0, 1.0)


def test_plan_validation():
    plan = SweepPlan([1.0, 5.0, 2.0], directions=("y", "x"))
    assert plan.frequencies == [5.0, 2.0, 1.0]
    assert plan.directions == ("x", "y")
    with pytest.raises(ValueError, match="empty frequency list"):
        SweepPlan([])
    with pytest.raises(ValueError):
        SweepPlan([1.0, -2.0])
    with pytest.raises(ValueError):
        SweepPlan([1.0], directions=("w",))
    with pytest.raises(ValueError):
        SweepPlan([1.0], workers=0)
    with pytest.raises(ValueError):
        SweepPlan([1.0], preconditioner="magic")


@pytest.mark.parametrize("omega", [0.05, 0.5, 5.0])
def test_single_cell_closed_form(single_cell, omega):
    mesh, params, kernel, eq = single_cell
    plan = SweepPlan([omega], directions=("x", "y", "z"), tol=1e-13, preconditioner="none")
    (row,) = run_sweep(plan, eq, params, kernel, mesh)
    want = oracles.single_cell_chi_xx(omega, params.alpha, params.K, 0.7)
    assert abs(row.chi[0, 0] - want) <= 1e-10 * abs(want)
    # rotational symmetry about z
    assert abs(row.chi[1, 1] - want) <= 1e-10 * abs(want)
    assert abs(row.chi[0, 1] + row.chi[1, 0]) <= 1e-10 * abs(want)
    # excitation along m has no response
    assert np.all(row.chi[:, 2] == 0)
    assert row.reports["z"].iterations == 0
    assert np.all(row.chi[2, :] == 0)


def test_unrequested_columns_are_absent(single_cell):
    mesh, params, kernel, eq = single_cell
    (row,) = run_sweep(SweepPlan([1.0], directions=("x",)), eq, params, kernel, mesh)
    assert row.has_column("x")
    assert not row.has_column("y") and not row.has_column("z")
    assert set(row.reports) == {"x"}


def test_failed_solve_is_recorded(generic_system):
    mesh, params, kernel, eq = generic_system
    plan = SweepPlan([0.3, 3.0], directions=("x",), tol=1e-14, max_iter=1, preconditioner="none")
    rows = run_sweep(plan, eq, params, kernel, mesh)
    assert [r.omega for r in rows] == [3.0, 0.3]
    for r in rows:
        assert r.reports["x"].error == "max_iter exceeded"
        assert not r.has_column("x")


def test_chi_is_scaled_volume_average(generic_system):
    mesh, params, kernel, eq = generic_system
    plan = SweepPlan([1.5], directions=("y",), tol=1e-12, chi_scale=2.5)
    (row,) = run_sweep(plan, eq, params, kernel, mesh)
    sys = FrequencySystem(1.5, eq, params, kernel, mesh)
    mu, _ = solve_cgn(sys, sys.build_rhs([0, 1.0, 0]), build_precond(sys, "circulant"), 1e-12)
    want = 2.5 * mu[mesh.mask].mean(axis=0)
    assert np.allclose(row.chi[:, 1], want, rtol=1e-8, atol=0)
    # linearity: twice the excitation gives twice the response
    mu2, _ = solve_cgn(sys, 2 * sys.build_rhs([0, 1.0, 0]), build_precond(sys, "circulant"), 1e-12)
    assert np.allclose(mu2, 2 * mu, rtol=0, atol=1e-9 * np.abs(mu).max())


def test_workers_are_deterministic(generic_system):
    mesh, params, kernel, eq = generic_system
    freqs = list(np.geomspace(0.1, 10, 6))
    serial = run_sweep(SweepPlan(freqs, tol=1e-8), eq, params, kernel, mesh)
    parallel = run_sweep(SweepPlan(freqs, tol=1e-8, workers=4), eq, params, kernel, mesh)
    assert [r.omega for r in serial] == [r.omega for r in parallel]
    for a, b in zip(serial, parallel):
        assert np.array_equal(a.chi, b.chi)
        assert {d: r.iterations for d, r in a.reports.items()} == {d: r.iterations for d, r in b.reports.items()}


# ---- resonance report

def _rows(omegas, values):
    rows = []
    for w, v in zip(omegas, values):
        chi = np.zeros((3, 3), complex)
        chi[0, 0] = v
        rows.append(SusceptibilityRow(float(w), chi))
    return rows


def test_resonance_lorentzian():
    omegas = np.geomspace(0.1, 10, 41)
    w0, gamma = 1.37, 0.2
    chi = 1 / (w0**2 - omegas**2 - 1j * gamma * omegas)
    peak = resonance_report(_rows(omegas, chi), [(0, 0)])[(0, 0)]
    assert peak.status == "resolved"
    step = np.log(omegas[1] / omegas[0])
    true_peak = omegas[np.argmax(np.abs(chi.imag))]
    assert abs(np.log(peak.omega / w0)) <= step
    assert abs(np.log(peak.omega / true_peak)) <= step


def test_resonance_linear_grid():
    omegas = np.linspace(0.5, 3.0, 26)
    chi = 1 / (1.8**2 - omegas**2 - 0.3j * omegas)
    peak = resonance_report(_rows(omegas, chi), [(0, 0)])[(0, 0)]
    assert abs(peak.omega - 1.8) <= omegas[1] - omegas[0]


def test_resonance_flags():
    omegas = [1.0, 2.0, 3.0, 4.0]
    report = resonance_report(_rows(omegas, [0, 0, 0, 0]))
    assert all(p.status == "no resonance" for p in report.values())
    mono = resonance_report(_rows(omegas, [1j, 2j, 3j, 4j]), [(0, 0)])[(0, 0)]
    assert mono == Peak((0, 0), 4.0, 4j, "boundary")
    with pytest.raises(ValueError):
        resonance_report(_rows(omegas[:2], [1j, 2j]))


def test_resonance_ignores_row_order():
    omegas = np.geomspace(0.1, 10, 21)
    chi = 1 / (1.0 - omegas**2 - 0.3j * omegas)
    a = resonance_report(_rows(omegas, chi), [(0, 0)])
    b = resonance_report(_rows(omegas[::-1], chi[::-1]), [(0, 0)])
    assert a == b
