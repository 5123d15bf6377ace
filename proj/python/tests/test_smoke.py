import math

import pytest

import rothe


def test_resolvent_bound_values():
    assert rothe.resolvent_operator_norm_bound(0.5, 1, 0.01, -1.0) == pytest.approx(5.0, rel=1e-14)
    assert rothe.resolvent_operator_norm_bound(1.0, 1, 0.01, -1.0) == pytest.approx(100.0, rel=1e-14)
    assert rothe.resolvent_operator_norm_bound(0.0, 1, 0.01, -1.0) == pytest.approx(1.0 / 1.01, rel=1e-14)


def test_operator_and_norms():
    op = rothe.dirichlet_laplacian_1d(3)
    assert len(op) == 3
    assert op.eigenvalues == pytest.approx([-math.pi**2, -4 * math.pi**2, -9 * math.pi**2])
    assert rothe.fractional_norm(op, [0.0, 1.0, 0.0], 0.5) == pytest.approx(2 * math.pi)
    out = rothe.apply_resolvent_power(op, [1.0, 1.0, 1.0], 0.1, 2)
    for x, lam in zip(out, op.eigenvalues):
        assert x == pytest.approx((1 - 0.1 * lam) ** -2)
    with pytest.raises(ValueError):
        rothe.SpectralOperator([-1.0, 0.5])


def test_assumptions_and_rate():
    assert rothe.max_rate(0.0, 0.05, 0.55) == pytest.approx(0.175)
    report = rothe.check_assumptions(rothe.dirichlet_laplacian_1d(64), 0.55, 0.0, 0.05, 0.0)
    assert report.all_passed()
    assert report.delta_max == pytest.approx(0.175)
    bad = rothe.check_assumptions(rothe.dirichlet_laplacian_1d(64), 0.4, 0.0, 0.05, 0.0)
    assert not bad.all_passed()


def test_ou_mse_and_fit():
    assert rothe.ou_exact_mse(-1.0, 0.0, 1.0, 1.0, 1) == pytest.approx((math.exp(-1) - 0.5) ** 2)
    taus = [0.5, 0.25, 0.125]
    fit = rothe.fit_rate(taus, [t**0.7 for t in taus])
    assert fit.rate == pytest.approx(0.7)
    assert fit.points == 3


def test_paths_are_reproducible():
    a = rothe.sample_increments(5, 16, 3, 1.0)
    b = rothe.sample_increments(5, 16, 3, 1.0)
    assert a == b
    assert len(a) == 3 and len(a[0]) == 16
    assert rothe.derive_seed(4, 0) != rothe.derive_seed(5, 1)


def test_cli_commands(tmp_path):
    cfg = tmp_path / "ou.ini"
    cfg.write_text("preset = ou_linear\nT = 1\nK_list = 1,2,4\nu0 = 1\nsamples = 50\nseed = 3\n")
    code, out, err = rothe.check(cfg)
    assert code == 0, err
    code, out, err = rothe.convergence(cfg, output_dir=tmp_path / "out", format="jsonl")
    assert code == 0, err
    assert any((tmp_path / "out").iterdir())
    code, _, err = rothe.check(tmp_path / "missing.ini")
    assert code == 2
