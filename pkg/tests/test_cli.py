import io

import pytest

from ratingnet.cli import main
from ratingnet.ingest import load_snapshot
from ratingnet.pipeline import critical_period_average

CYCLE = [("1", "a"), ("2", "a"), ("2", "b"), ("3", "b"), ("3", "c"), ("1", "c")]


def run(argv, environ=None):
    out = io.StringIO()
    code = main([str(a) for a in argv], out=out, environ=environ or {})
    return code, out.getvalue()


def write_ratings(path, rows):
    path.write_text("".join(f"{u}::{i}::{r}::{t}\n" for u, i, r, t in rows))
    return path


def ingest_rows(tmp_path, rows, *extra):
    src = write_ratings(tmp_path / "ratings.dat", rows)
    snap = tmp_path / "g.snap"
    code, text = run(["ingest", "--input", src, "--snapshot", snap, *extra])
    assert code == 0, text
    return snap, text


def summary(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines() if "=" in line)


def test_ingest_summary(tmp_path):
    snap, text = ingest_rows(tmp_path, [("1", "10", 4, 100), ("2", "10", 5, 200), ("1", "11", 3, 300)])
    s = summary(text)
    assert (s["primary"], s["secondary"], s["edges"], s["duplicates"]) == ("2", "2", "3", "0")
    assert (s["t_min"], s["t_max"]) == ("100", "300")
    assert load_snapshot(snap).edge_count == 3


def test_ingest_unreadable_input(tmp_path):
    code, _ = run(["ingest", "--input", tmp_path / "missing.dat", "--snapshot", tmp_path / "g.snap"])
    assert code == 2


def test_ingest_strict_parse_error(tmp_path):
    src = tmp_path / "bad.dat"
    src.write_text("1::2::4::10\n1::3::nine::11\n")
    assert run(["ingest", "--input", src, "--snapshot", tmp_path / "g.snap"])[0] == 4
    code, text = run(["ingest", "--input", src, "--snapshot", tmp_path / "g.snap", "--lenient"])
    assert code == 0 and summary(text)["skipped"] == "1"


def test_motifs_on_cycle(tmp_path):
    snap, _ = ingest_rows(tmp_path, [(u, i, 4, 10) for u, i in CYCLE])
    per_user = tmp_path / "per_user.csv"
    code, text = run(["motifs", "--snapshot", snap, "--per-user", per_user])
    assert code == 0
    header, row = text.strip().splitlines()
    assert header.split(",")[-1] == "cstar"
    assert [float(x) for x in row.split(",")] == [1, 0, 0, 0, 0, 0, 0, 1.0, 0.0, 0.0, 0.0, 1.0]
    lines = per_user.read_text().strip().splitlines()
    assert len(lines) == 4
    assert len({line.split(",", 1)[1] for line in lines[1:]}) == 1


def test_motifs_empty_graph(tmp_path):
    src = tmp_path / "empty.dat"
    src.write_text("")
    snap = tmp_path / "g.snap"
    assert run(["ingest", "--input", src, "--snapshot", snap])[0] == 0
    code, text = run(["motifs", "--snapshot", snap])
    assert code == 0
    assert all(float(x) == 0 for x in text.strip().splitlines()[1].split(","))


def test_motifs_budget_exceeded(tmp_path):
    snap, _ = ingest_rows(tmp_path, [(u, i, 4, 10) for u in "1234" for i in "abcd"])
    assert run(["motifs", "--snapshot", snap, "--budget", 3])[0] == 3
    assert run(["motifs", "--snapshot", snap, "--budget", 16])[0] == 0


def test_missing_snapshot(tmp_path):
    assert run(["motifs", "--snapshot", tmp_path / "nope.snap"])[0] == 2


def test_corrupt_snapshot(tmp_path):
    bad = tmp_path / "bad.snap"
    bad.write_bytes(b"not a snapshot at all")
    assert run(["motifs", "--snapshot", bad])[0] == 2


T0 = 1_000_000
OLDER = [("E", "X"), ("E", "Y"), ("A", "X"), ("A", "Y"), ("A", "Z"), ("B", "Y"),
         ("B", "Z"), ("C", "Z"), ("C", "Q"), ("D", "Q"), ("D", "X")]
FIXTURE = [(u, i, 4, T0 - 100 + k) for k, (u, i) in enumerate(OLDER)]
FIXTURE += [("E", "T", 4, T0), ("A", "T", 5, T0 + 10), ("B", "T", 3, T0 + 20)]


def test_predict_fixture_row(tmp_path):
    snap, _ = ingest_rows(tmp_path, FIXTURE)
    code, text = run(["predict", "--snapshot", snap, "--items", "T", "--lookback-window", 200])
    assert code == 0
    rows = [line.split(",") for line in text.strip().splitlines()]
    assert rows[0] == ["item_id", "ego_id", "r", "t0", "n_hat", "mu_hat", "rho_hat", "error"]
    item, ego, r, t0, n_hat = rows[1][:5]
    assert (item, ego, float(r), int(t0)) == ("T", "E", 4.0, T0)
    assert float(n_hat) == pytest.approx(0.24408304063301248, rel=1e-12)


def test_predict_unknown_item(tmp_path):
    snap, _ = ingest_rows(tmp_path, FIXTURE)
    code, text = run(["predict", "--snapshot", snap, "--items", "T,nope", "--strict"])
    assert code == 4
    assert text.strip().splitlines()[-1].endswith("unknown item")
    assert run(["predict", "--snapshot", snap, "--items", "nope"])[0] == 0


def test_predict_digg_profile(tmp_path):
    src = tmp_path / "votes.tsv"
    src.write_text("% digg\n1 1 1 10\n2 1 1 20\n1 2 1 100\n")
    snap = tmp_path / "g.snap"
    assert run(["ingest", "--input", src, "--format", "konect", "--name", "digg", "--snapshot", snap])[0] == 0
    code, text = run(["predict", "--snapshot", snap, "--items", "2", "--name", "digg"])
    assert code == 0
    assert float(text.strip().splitlines()[1].split(",")[5]) == 5.0


@pytest.fixture(scope="module")
def synth_snapshot(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    data = d / "ratings.dat"
    assert run(["synth", "--seed", 11, "--users", 60, "--items", 12, "--span", "20d",
                "--item-lifetime", "10d", "--out", data])[0] == 0
    snap = d / "g.snap"
    assert run(["ingest", "--input", data, "--snapshot", snap])[0] == 0
    return snap


def test_evaluate_self_check(synth_snapshot, tmp_path):
    code, text = run(["evaluate", "--snapshot", synth_snapshot, "--self-check", "--out-dir", tmp_path])
    assert code == 0
    s = summary((tmp_path / "summary.txt").read_text())
    assert s["pop_success_rate"] == "1.0" and s["n_success_rate"] == "1.0"
    assert (tmp_path / "eval.csv").read_text().startswith("item_id,n,mu,rho,")


def test_evaluate_tolerance_flag(synth_snapshot, tmp_path):
    _, loose = run(["evaluate", "--snapshot", synth_snapshot, "--out-dir", tmp_path / "a"])
    _, tight = run(["evaluate", "--snapshot", synth_snapshot, "--rho-tol", 0.01, "--out-dir", tmp_path / "b"])
    assert int(summary(tight)["pop_successes"]) <= int(summary(loose)["pop_successes"])
    assert summary(tight)["rho_tol"] == "0.01"


def test_plotdata_writes_figures(synth_snapshot, tmp_path):
    code, _ = run(["plotdata", "--snapshot", synth_snapshot, "--out-dir", tmp_path])
    assert code == 0
    for name in ("fig2_mu_vs_n", "fig4_rho_vs_rho_hat", "figS6_n_vs_n_hat", "figS1_running_mean_vs_days",
                 "figS2_gap_hours_vs_hours", "figS4_ego_degree_vs_n", "figS5_second_neighbours_vs_n"):
        assert (tmp_path / f"{name}.csv").read_text().startswith("x,y\n")
    assert run(["plotdata", "--snapshot", synth_snapshot])[0] == 2


def test_synth_deterministic(tmp_path):
    a, b = tmp_path / "a.dat", tmp_path / "b.dat"
    assert run(["synth", "--seed", 42, "--out", a])[0] == 0
    assert run(["synth", "--seed", 42, "--out", b])[0] == 0
    assert a.read_bytes() == b.read_bytes() and a.stat().st_size > 0
    c = tmp_path / "c.dat"
    run(["synth", "--seed", 43, "--out", c])
    assert c.read_bytes() != a.read_bytes()


def test_synth_no_items(tmp_path):
    out = tmp_path / "none.dat"
    assert run(["synth", "--seed", 1, "--items", 0, "--out", out])[0] == 0
    assert out.read_text() == ""


def test_synth_window_count_matches_arrival_rate(tmp_path):
    # one rating an hour for 48 hours on top of the first one
    data = tmp_path / "w.dat"
    assert run(["synth", "--seed", 5, "--users", 400, "--items", 40, "--gap-scale", "1h",
                "--item-lifetime", "48h", "--span", "10d", "--out", data])[0] == 0
    snap = tmp_path / "w.snap"
    run(["ingest", "--input", data, "--snapshot", snap])
    assert critical_period_average(load_snapshot(snap), 48 * 3600) == pytest.approx(49, abs=4)


@pytest.mark.parametrize("argv", [["--users", 0], ["--gap-scale", 0], ["--rating-sd", -1]])
def test_synth_rejects_bad_parameters(tmp_path, argv):
    assert run(["synth", "--seed", 1, *argv, "--out", tmp_path / "x.dat"])[0] == 2


def test_config_precedence(tmp_path):
    snap, _ = ingest_rows(tmp_path, FIXTURE)
    cfg = tmp_path / "run.ini"
    cfg.write_text("[eval]\nrho_tol = 0.2\n")
    base = ["evaluate", "--snapshot", snap, "--self-check"]
    rho_tol = lambda text: summary(text)["rho_tol"]  # noqa: E731

    assert rho_tol(run(base)[1]) == "0.05"
    assert rho_tol(run(["--config", cfg, *base])[1]) == "0.2"
    env = {"RATINGNET_EVAL_RHO_TOL": "0.3"}
    assert rho_tol(run(["--config", cfg, *base], environ=env)[1]) == "0.3"
    assert rho_tol(run(["--config", cfg, *base, "--rho-tol", 0.4], environ=env)[1]) == "0.4"


def test_unknown_config_keys(tmp_path):
    snap, _ = ingest_rows(tmp_path, FIXTURE)
    cfg = tmp_path / "run.ini"
    cfg.write_text("[eval]\nrho_tolerance = 0.2\n")
    assert run(["--config", cfg, "motifs", "--snapshot", snap])[0] == 2
    assert run(["motifs", "--snapshot", snap], environ={"RATINGNET_EVAL_TYPO": "1"})[0] == 2
    assert run(["motifs", "--snapshot", snap], environ={"RATINGNET_EVAL_WORKERS": "two"})[0] == 2
    assert run(["motifs", "--snapshot", snap, "--name", "imdb"])[0] == 0  # profile unused by motifs
    assert run(["evaluate", "--snapshot", snap, "--name", "imdb"])[0] == 2


def test_bad_arguments():
    assert run(["frobnicate"])[0] == 2
    assert run(["motifs", "--budget", "many"])[0] == 2
