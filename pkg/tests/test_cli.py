import numpy as np

from oubstop import TimeGrid, BoundarySolution, boundary_eval
from oubstop.cli import main, read_boundary_csv


def run_cli(*args):
    return main(list(args))


def test_solve_writes_boundary_csv(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code = run_cli("solve", "--alpha", "1", "--gamma", "1", "--z", "0",
                   "--n", "80", "--out", str(out))
    assert code == 0
    err = capsys.readouterr().err
    assert "iterations=" in err and "residual=" in err
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "t,beta"
    assert len(rows) == 82  # header + N+1 nodes
    assert rows[-1] == "1.0,0.0"
    first_t = float(rows[1].split(",")[0])
    assert first_t == 0.0


def test_solve_alpha_sign_produces_identical_files(tmp_path):
    a = tmp_path / "plus.csv"
    b = tmp_path / "minus.csv"
    assert run_cli("solve", "--alpha", "2", "--n", "100", "--out", str(a)) == 0
    assert run_cli("solve", "--alpha", "-2", "--n", "100", "--out", str(b)) == 0
    assert a.read_text() == b.read_text()


def test_solve_brownian_bridge_limit(tmp_path):
    out = tmp_path / "bb.csv"
    assert run_cli("solve", "--alpha", "1e-4", "--n", "200",
                   "--out", str(out)) == 0
    t, beta = read_boundary_csv(str(out))
    mask = t <= 0.95
    assert np.max(np.abs(beta[mask] - 0.8399 * np.sqrt(1 - t[mask]))) < 0.02


def test_solve_to_stdout(capsys):
    assert run_cli("solve", "--n", "40") == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "t,beta"
    assert out.splitlines()[-1] == "1.0,0.0"


def test_solve_general_parameters(tmp_path):
    out = tmp_path / "g.csv"
    assert run_cli("solve", "--n", "60", "--theta", "5", "--z", "5",
                   "--horizon", "2", "--out", str(out)) == 0
    rows = out.read_text().strip().splitlines()
    assert rows[-1] == "2.0,5.0"
    t, beta = read_boundary_csv(str(out))
    assert t[0] == 0.0 and t[-1] == 2.0
    # boundary sits at the shifted zero-pinning solution
    assert np.all(beta >= 5.0 - 1e-12)


def test_verify_accepts_general_horizon_boundary(tmp_path):
    src = tmp_path / "g.csv"
    assert run_cli("solve", "--n", "120", "--horizon", "2",
                   "--out", str(src)) == 0
    report = tmp_path / "r.csv"
    code = run_cli("verify", "--n", "120", "--horizon", "2", "--paths",
                   "20000", "--boundary", str(src), "--out", str(report))
    assert code == 0


def test_solve_nonconvergence_writes_partial(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code = run_cli("solve", "--n", "60", "--max-iter", "1",
                   "--out", str(out))
    assert code == 2
    assert not out.exists()
    partial = tmp_path / "b.csv.partial"
    assert partial.exists()
    t, beta = read_boundary_csv(str(partial))
    assert t.size == 61
    assert "error:" in capsys.readouterr().err


def test_boundary_round_trip_is_exact(tmp_path):
    out = tmp_path / "b.csv"
    assert run_cli("solve", "--n", "90", "--out", str(out)) == 0
    t, beta = read_boundary_csv(str(out))
    sol = BoundarySolution(grid=TimeGrid(t), beta=beta, iterations=0,
                           final_residual=0.0, method="file")
    assert np.array_equal(boundary_eval(sol, t), beta)


def test_value_stopping_region(capsys):
    assert run_cli("value", "--n", "60", "--t", "0.5", "--x", "10") == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0] == "t,x,V"
    t, x, v = (float(c) for c in out[1].split(","))
    assert (t, x, v) == (0.5, 10.0, 10.0)


def test_value_near_horizon(capsys):
    assert run_cli("value", "--n", "200", "--t", "0.999", "--x", "0.001") == 0
    v = float(capsys.readouterr().out.strip().splitlines()[1].split(",")[2])
    assert abs(v - 0.0) < 5e-3


def test_value_general_parameters(capsys):
    # theta shift moves value by theta in the stopping region
    assert run_cli("value", "--n", "60", "--theta", "5", "--z", "5",
                   "--t", "0.5", "--x", "15") == 0
    v = float(capsys.readouterr().out.strip().splitlines()[1].split(",")[2])
    assert v == 15.0


def test_value_grid_mode(tmp_path):
    out = tmp_path / "surface.csv"
    assert run_cli("value", "--n", "60", "--grid", "0:0.9:4,-1:1:3",
                   "--out", str(out)) == 0
    rows = out.read_text().strip().splitlines()
    assert rows[0] == "t,x,V"
    assert len(rows) == 1 + 4 * 3


def test_value_grid_11x11_within_budget(tmp_path):
    import time
    out = tmp_path / "surface.csv"
    start = time.perf_counter()
    assert run_cli("value", "--n", "500", "--grid", "0:0.9:11,-2:2:11",
                   "--out", str(out)) == 0
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    assert len(out.read_text().strip().splitlines()) == 1 + 121


def test_value_requires_point_or_grid(capsys):
    assert run_cli("value", "--n", "40") == 2
    assert "error:" in capsys.readouterr().err


def test_verify_passes_and_is_deterministic(tmp_path):
    a = tmp_path / "r1.csv"
    b = tmp_path / "r2.csv"
    args = ("verify", "--n", "150", "--paths", "20000", "--seed", "9")
    assert run_cli(*args, "--out", str(a)) == 0
    assert run_cli(*args, "--out", str(b)) == 0
    assert a.read_text() == b.read_text()
    rows = a.read_text().strip().splitlines()
    assert rows[0] == "check,statistic,threshold,result"
    names = {r.split(",")[0] for r in rows[1:]}
    assert names == {"terminal_pinning", "kernel_vs_quadrature",
                     "mc_value_consistency", "perturbation_up",
                     "perturbation_down", "boundary_lower_bound"}
    assert all(r.endswith("pass") for r in rows[1:])


def test_verify_detects_tampered_boundary(tmp_path):
    src = tmp_path / "b.csv"
    assert run_cli("solve", "--n", "150", "--out", str(src)) == 0
    t, beta = read_boundary_csv(str(src))
    tampered = tmp_path / "tampered.csv"
    rows = ["t,beta"] + [f"{float(ti)!r},{float(bi) + 0.5!r}"
                         for ti, bi in zip(t, beta)]
    tampered.write_text("\n".join(rows) + "\n")
    report = tmp_path / "report.csv"
    code = run_cli("verify", "--n", "150", "--paths", "20000",
                   "--boundary", str(tampered), "--out", str(report))
    assert code == 1
    failing = [r for r in report.read_text().strip().splitlines()
               if r.endswith("fail")]
    assert any(r.startswith("perturbation") for r in failing)


def test_verify_flags_degenerate_regime(tmp_path):
    # a strong pull towards a far-away pinning level admits a spurious
    # solution of the discretised boundary equation; the perturbation and
    # lower-bound checks must catch it
    report = tmp_path / "r.csv"
    code = run_cli("verify", "--alpha", "3", "--gamma", "0.25", "--z", "-10",
                   "--n", "100", "--paths", "10000", "--out", str(report))
    assert code == 1
    failing = {r.split(",")[0] for r in report.read_text().strip().splitlines()
               if r.endswith("fail")}
    assert "boundary_lower_bound" in failing


def test_figures_datasets(tmp_path):
    outdir = tmp_path / "figs"
    assert run_cli("figures", "--n", "60", "--out", str(outdir)) == 0
    names = sorted(p.name for p in outdir.iterdir())
    assert names == ["fig1_z0.csv", "fig1_zm5.csv", "fig1_zp5.csv",
                     "fig2_z0.csv", "fig2_zm5.csv", "fig2_zp5.csv",
                     "fig3_n10.csv", "fig3_n100.csv", "fig3_n500.csv"]

    # fig1: alpha sign pairs yield duplicate curves, bb reference present
    rows = (outdir / "fig1_z0.csv").read_text().strip().splitlines()
    header = rows[0].split(",")
    assert header[-1] == "bb_ref"
    data = np.array([[float(c) for c in r.split(",")] for r in rows[1:]])
    for base in (1, 3, 5):  # (alpha, -alpha) column pairs
        assert np.array_equal(data[:, base], data[:, base + 1])

    # fig2 z=0: gamma=2 curve is twice the gamma=1 curve
    rows = (outdir / "fig2_z0.csv").read_text().strip().splitlines()
    data = np.array([[float(c) for c in r.split(",")] for r in rows[1:]])
    assert np.max(np.abs(data[:, 3] - 2.0 * data[:, 2])) < 2e-3

    # fig3: beta - z curves converge as N grows
    curves = {}
    for n in (10, 100, 500):
        rows = (outdir / f"fig3_n{n}.csv").read_text().strip().splitlines()
        curves[n] = np.array([[float(c) for c in r.split(",")]
                              for r in rows[1:]])
    for col in (1, 2, 3):
        d1 = np.max(np.abs(curves[10][:, col]
                           - np.interp(curves[10][:, 0], curves[100][:, 0],
                                       curves[100][:, col])))
        d2 = np.max(np.abs(curves[100][:, col]
                           - np.interp(curves[100][:, 0], curves[500][:, 0],
                                       curves[500][:, col])))
        assert d2 < d1


def test_validation_errors_exit_code(capsys):
    assert run_cli("solve", "--gamma", "-1") == 2
    assert "error:" in capsys.readouterr().err
    assert run_cli("value", "--grid", "junk") == 2
    assert run_cli("solve", "--n", "1") == 2


def test_seventeen_digit_formatting(tmp_path):
    out = tmp_path / "b.csv"
    assert run_cli("solve", "--n", "40", "--out", str(out)) == 0
    t, beta = read_boundary_csv(str(out))
    text = out.read_text()
    for ti in t[1:-1]:
        assert repr(float(ti)) in text or f"{ti:.17g}" in text
