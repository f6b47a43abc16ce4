import csv
import io
import logging

import numpy as np
import pytest

from lsm_ml.cli import main
from lsm_ml.data import QUOTE_COLUMNS


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


SMALL_SWEEP = ("sweep", "--spots", "90,100", "--vols", "0.2", "--maturities", "1", "--paths", "400", "--steps", "5")
SMALL_COMPARE = ("compare", "--paths", "300", "--steps", "5", "--lattice-steps", "50")


def linear_quotes(path, n=60, seed=0):
    """Quote file where bid is an exact linear function of strike plus tiny noise."""
    rng = np.random.default_rng(seed)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(QUOTE_COLUMNS)
        for k in range(n):
            strike = float(rng.uniform(50, 150))
            bid = 0.2 * strike + float(rng.normal(scale=0.01))
            w.writerow([f"C{k}", "XYZ", "2023-06-01", "call", strike, "A", bid, 10, bid + 0.1, 10, 5, 50,
                        "2023-03-01", 0.5, 0.01, -0.02, 0.1, 0.3])
    return path


# ----------------------------------------------------------------------------- sweep

def test_sweep_single_cell_in_band(capsys):
    code, out, _ = run(capsys, "sweep", "--spots", "100", "--vols", "0.2", "--maturities", "1",
                       "--estimator", "polynomial", "--order", "2")
    rows = table(out)
    assert code == 0 and len(rows) == 1
    assert abs(float(rows[0]["price"]) - 6.1403) <= 0.25
    assert float(rows[0]["elapsed"]) > 0


def test_sweep_row_order_and_count(capsys):
    code, out, _ = run(capsys, "sweep", "--spots", "90:100:5", "--vols", "0.2,0.4", "--maturities", "1,2",
                       "--paths", "200", "--steps", "3", "--estimator", "polynomial,knn", "--no-timing")
    rows = table(out)
    assert code == 0 and len(rows) == 3 * 2 * 2 * 2
    keys = [(float(r["spot"]), float(r["vol"]), float(r["maturity"])) for r in rows]
    assert keys == sorted(keys)
    assert [r["estimator"] for r in rows[:2]] == ["polynomial", "knn"]
    assert "elapsed" not in rows[0]


def test_sweep_rejects_negative_vol(capsys):
    code, _, err = run(capsys, "sweep", "--vols", "-0.2")
    assert code == 2 and "vols" in err


@pytest.mark.parametrize("argv, key", [
    (("sweep", "--estimator", "svm"), "estimator"),
    (("sweep", "--scope", "some"), "scope"),
    (("sweep", "--assets", "3", "--rho", "-0.9"), "rho"),
    (("sweep", "--paths", "1"), "paths"),
    (("compare", "--vol", "0"), "vol"),
])
def test_config_errors_name_the_key(capsys, argv, key):
    code, _, err = run(capsys, *argv)
    assert code == 2 and key in err


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("# small grid\nspots = 95,105\nvols=0.3\nmaturities=1\npaths=300\nsteps=4\nno_timing=true\n")
    code, out, _ = run(capsys, "sweep", "--config", str(cfg))
    assert code == 0 and [r["spot"] for r in table(out)] == ["95.0", "105.0"]
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), "--spots", "100")
    rows = table(out)
    assert [r["spot"] for r in rows] == ["100.0"] and rows[0]["vol"] == "0.3"
    (tmp_path / "bad.cfg").write_text("colour=blue\n")
    code, _, err = run(capsys, "sweep", "--config", str(tmp_path / "bad.cfg"))
    assert code == 2 and "colour" in err


def test_output_env_var(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("LSM_ML_OUTPUT_DIR", str(tmp_path))
    code, out, _ = run(capsys, *SMALL_SWEEP, "--no-timing")
    assert code == 0 and out == ""
    assert (tmp_path / "sweep.csv").read_text().startswith("estimator,assets,spot")


def test_table_format_has_same_numbers(capsys):
    _, csv_out, _ = run(capsys, *SMALL_SWEEP, "--no-timing")
    _, txt_out, _ = run(capsys, *SMALL_SWEEP, "--no-timing", "--format", "table")
    csv_cells = [c for line in csv_out.splitlines() for c in line.split(",")]
    txt_cells = [c for line in txt_out.splitlines() for c in line.split()]
    assert csv_cells == txt_cells


# ----------------------------------------------------------------------------- compare

def test_compare_roster_and_references(capsys, tmp_path):
    code, out, _ = run(capsys, *SMALL_COMPARE, "--estimators", "polynomial,knn,tree,forest,boost,logistic",
                       "--decisions-dir", str(tmp_path), "--dump-paths", str(tmp_path / "paths.csv"))
    rows = table(out)
    assert code == 0
    assert [r["method"] for r in rows] == ["polynomial", "knn", "tree", "forest", "boost", "logistic",
                                           "binomial", "european_mc"]
    assert all(float(r["elapsed"]) > 0 for r in rows)
    assert float(rows[6]["std_error"]) == 0.0
    assert (tmp_path / "decisions_tree.csv").exists()
    assert (tmp_path / "paths.csv").read_text().startswith("path,step,asset,time,price")


def test_compare_tree_above_polynomial(capsys):
    code, out, _ = run(capsys, "compare", "--paths", "4000", "--estimators", "polynomial,tree", "--no-timing",
                       "--lattice-steps", "200")
    prices = {r["method"]: float(r["price"]) for r in table(out)}
    assert code == 0 and prices["tree"] > prices["polynomial"]


# ----------------------------------------------------------------------------- metrics

def write_scores(path, labels, scores):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "score"])
        w.writerows(zip(labels, scores))
    return path


def test_metrics_separable_and_ties(capsys, tmp_path):
    f = write_scores(tmp_path / "sep.csv", [0, 0, 1, 1], [0.1, 0.3, 0.7, 0.9])
    code, out, _ = run(capsys, "metrics", str(f), "--curves-dir", str(tmp_path))
    rep = table(out)[0]
    assert code == 0 and float(rep["roc_auc"]) == 1.0 and float(rep["pr_auc"]) == 1.0
    assert rep["model"] == "sep"
    assert (tmp_path / "roc_sep.csv").read_text().startswith("fpr,tpr\n")
    assert (tmp_path / "pr_sep.csv").read_text().startswith("recall,precision\n")
    f = write_scores(tmp_path / "ties.csv", [0, 1, 0, 1, 1], [0.5] * 5)
    _, out, _ = run(capsys, "metrics", str(f))
    assert float(table(out)[0]["roc_auc"]) == 0.5


def test_metrics_f1_consistent(capsys, tmp_path):
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 2, 50)
    f = write_scores(tmp_path / "r.csv", labels, np.round(rng.uniform(size=50), 3))
    _, out, _ = run(capsys, "metrics", str(f), "--threshold", "0.4")
    rep = table(out)[0]
    p, r, f1 = float(rep["precision"]), float(rep["recall"]), float(rep["f1"])
    assert abs(f1 - 2 * p * r / (p + r)) <= 1e-12
    tp, fp = int(rep["tp"]), int(rep["fp"])
    assert p == tp / (tp + fp)


def test_metrics_schema_errors(capsys, tmp_path):
    f = write_scores(tmp_path / "x.csv", [0, 1], [0.2, 0.4])
    code, _, err = run(capsys, "metrics", str(f), "--scores", "prob")
    assert code == 2 and "prob" in err
    code, _, _ = run(capsys, "metrics", str(tmp_path / "missing.csv"))
    assert code == 2
    f = write_scores(tmp_path / "y.csv", [0, 2], [0.2, 0.4])
    assert run(capsys, "metrics", str(f))[0] == 2


def test_metrics_on_compare_decisions(capsys, tmp_path):
    run(capsys, *SMALL_COMPARE, "--estimators", "polynomial", "--decisions-dir", str(tmp_path))
    code, out, _ = run(capsys, "metrics", str(tmp_path / "decisions_polynomial.csv"))
    assert code == 0 and 0 <= float(table(out)[0]["roc_auc"]) <= 1


# ----------------------------------------------------------------------------- correlate

def test_correlate_sample(capsys):
    code, out, _ = run(capsys, "correlate")
    rows = list(csv.reader(io.StringIO(out)))
    names = rows[0][1:]
    assert code == 0 and [r[0] for r in rows[1:]] == names
    m = np.array([[np.nan if c == "undefined" else float(c) for c in r[1:]] for r in rows[1:]])
    assert np.array_equal(np.isnan(m), np.isnan(m.T))
    assert np.array_equal(m[~np.isnan(m)], m.T[~np.isnan(m.T)])
    diag = np.diag(m)
    assert np.all(diag[~np.isnan(diag)] == 1.0)


def test_correlate_two_columns(capsys):
    code, out, _ = run(capsys, "correlate", "--columns", "strike,delta")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["", "strike", "delta"] and len(rows) == 3


def test_correlate_constant_column_warns(capsys, tmp_path, caplog):
    f = linear_quotes(tmp_path / "q.csv", n=12)
    with caplog.at_level(logging.WARNING, logger="lsm_ml"):
        code, out, _ = run(capsys, "correlate", str(f), "--columns", "strike,volume")
    assert code == 0
    assert out.splitlines()[1] == "strike,1.0,undefined"
    assert any("volume" in rec.message for rec in caplog.records)


def test_correlate_bad_file(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert run(capsys, "correlate", str(bad))[0] == 2
    assert run(capsys, "correlate", "--columns", "nope")[0] == 2


# ----------------------------------------------------------------------------- train

def test_train_zero_epochs(capsys, tmp_path):
    f = linear_quotes(tmp_path / "q.csv")
    code, out, _ = run(capsys, "train", str(f), "--features", "strike", "--epochs", "0", "--out-dir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "history_gru.csv").read_text() == "epoch,train_mse,val_mse\n"
    row = table(out)[0]
    assert row["epochs"] == "0" and (int(row["n_train"]), int(row["n_val"])) == (48, 12)
    assert float(row["mse"]) > 0
    assert (tmp_path / "model_gru.npz").exists() and (tmp_path / "metrics_gru.csv").exists()


def test_train_reproducible_files(capsys, tmp_path):
    f = linear_quotes(tmp_path / "q.csv")
    outputs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        run(capsys, "train", str(f), "--features", "strike", "--cell", "lstm", "--epochs", "3", "--out-dir", str(d))
        outputs.append([(d / n).read_bytes() for n in ("history_lstm.csv", "model_lstm.npz", "metrics_lstm.csv")])
    assert outputs[0] == outputs[1]


def test_train_linear_validation_mse_drops(capsys, tmp_path):
    f = linear_quotes(tmp_path / "q.csv", n=200)
    code, _, _ = run(capsys, "train", str(f), "--features", "strike", "--hidden", "8", "--epochs", "200",
                     "--out-dir", str(tmp_path))
    hist = table((tmp_path / "history_gru.csv").read_text())
    assert code == 0 and len(hist) == 200
    assert float(hist[-1]["val_mse"]) <= 0.1 * float(hist[0]["val_mse"])


def test_train_errors(capsys, tmp_path):
    f = linear_quotes(tmp_path / "q.csv", n=8)
    assert run(capsys, "train", str(f), "--features", "strike", "--out-dir", str(tmp_path))[0] == 2
    f = linear_quotes(tmp_path / "q2.csv")
    assert run(capsys, "train", str(f), "--target", "contract")[0] == 2
    assert run(capsys, "train", str(f), "--features", "strike,colour")[0] == 2
    code, _, err = run(capsys, "train", str(f), "--features", "strike", "--learning-rate", "1e300",
                       "--epochs", "3", "--out-dir", str(tmp_path))
    assert code == 1 and "diverged" in err


def test_help_and_missing_command(capsys):
    assert run(capsys, "--help")[0] == 0
    assert run(capsys)[0] == 2
