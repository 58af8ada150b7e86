import math

import numpy as np
import pytest

import vpstab


def test_version():
    assert vpstab.__version__ == "0.1.0"


def test_uniform_cell_norm():
    assert vpstab.luxemburg_norm(np.array([3.0]), 1.0, 1.0) == pytest.approx(3.0 / math.log(2.0), rel=1e-12)
    assert vpstab.luxemburg_norm(np.array([0.5, 4.0]), 0.1, vpstab.inf) == 4.0


def test_sup_norm_peaks_at_alpha():
    value, p = vpstab.lp_sup_norm(np.array([2.0]), 1.0, 2.0, 50.0)
    assert p == pytest.approx(2.0)
    assert value == pytest.approx(math.sqrt(2.0))


def test_horizon_and_closed_form():
    ts = vpstab.t_star(1.0, math.exp(-10.0), 1.0)
    assert ts == pytest.approx(1.51539008481740135842642500114, rel=1e-12)
    assert vpstab.g_closed(ts, math.exp(-10.0), 1.0, 1.0) == pytest.approx(math.log(9.0), abs=1e-9)
    with pytest.raises(vpstab.DomainError):
        vpstab.g_closed(2 * ts, math.exp(-10.0), 1.0, 1.0)


def test_ode_matches_closed_form():
    assert vpstab.g_ode(1.0, math.exp(-16.0), 0.5, 2.0) == pytest.approx(12.359619140625, rel=1e-10)


def test_w1_exact_on_the_line():
    cost, plan = vpstab.w1_exact(np.array([[0.0], [1.0]]), np.array([0.5, 0.5]), np.array([[2.0]]), np.array([1.0]))
    assert cost == pytest.approx(1.5)
    assert sorted((i, j) for i, j, _ in plan) == [(0, 0), (1, 0)]


def test_w1_precondition_maps_to_exception():
    with pytest.raises(vpstab.PreconditionError):
        vpstab.w1_exact(np.array([[0.0]]), np.array([1.0]), np.array([[1.0]]), np.array([2.0]))


def test_sinkhorn_reports_convergence():
    r = vpstab.w1_sinkhorn(np.array([[0.0], [1.0]]), np.array([0.5, 0.5]),
                           np.array([[0.5], [2.0]]), np.array([0.5, 0.5]), reg=0.2)
    assert r["converged"]
    assert r["cost"] == pytest.approx(0.75, abs=0.2 * math.log(4))


def test_cli_bound():
    code, out, _ = vpstab.run_cli(["bound", "--alpha", "inf", "--A", "1.1253517471925912e-07", "--c", "1"])
    assert code == 0
    assert "# t_star=5.0353923852649" in out


def test_cli_exit_codes():
    assert vpstab.run_cli(["bound", "--A", "0.5"])[0] == 4
    assert vpstab.run_cli(["simulate"])[0] == 2


def test_kernel_ratio_is_bounded():
    r = vpstab.kernel_lemma_ratio("borderline", 1.0, 1e-3, 1.0)
    assert 0.0 < r < 5.0
