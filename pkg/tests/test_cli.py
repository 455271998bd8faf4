import pytest

from chirptrack.cli import main
from chirptrack.estimation import IfTrackSet, peak_if_samples, score_mse
from chirptrack.experiments import (
    ExperimentConfig, dump_config, load_config, monte_carlo, parse_config,
)
from chirptrack.signal import (
    NoiseSpec, SegmentPlan, add_noise, example1_if, make_example1, write_signal,
)
from chirptrack.tfd import stft

QUICK = ["--trials", "2", "--snr", "0,100", "--n", "256"]


def test_dump_config_round_trip(tmp_path, capsys):
    assert main(["dump-config", "--signal", "example2", "--snr=-5,0.5", "--trials", "7",
                 "--hop", "8", "--gamma", "0.15", "--estimators", "wd,stft"]) == 0
    text = capsys.readouterr().out
    p = tmp_path / "cfg.txt"
    p.write_text(text)
    cfg = load_config(p)
    assert cfg == ExperimentConfig(signal="example2", snr=(-5.0, 0.5), trials=7, hop=8,
                                   gamma=0.15, estimators=("wd", "stft"))
    assert dump_config(cfg) == text


def test_flags_override_config_file(tmp_path, capsys):
    p = tmp_path / "cfg.txt"
    p.write_text("trials = 9\nseed = 4  # comment\n")
    assert main(["dump-config", "--config", str(p), "--seed", "11"]) == 0
    cfg = ExperimentConfig(**parse_config(capsys.readouterr().out))
    assert (cfg.trials, cfg.seed) == (9, 11)


def test_bad_config_line_reports_line_number(tmp_path, capsys):
    p = tmp_path / "cfg.txt"
    p.write_text("trials = 3\n\nbogus = 1\n")
    assert main(["dump-config", "--config", str(p)]) == 1
    assert f"{p}:3" in capsys.readouterr().err


@pytest.mark.parametrize("kw", [dict(trials=0), dict(snr=()), dict(estimators=("x",)),
                                dict(signal="bat"), dict(seed=-1), dict(window="kaiser")])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ExperimentConfig(**kw)


def test_table_is_deterministic_across_thread_counts(tmp_path, monkeypatch):
    outs = []
    for i, threads in enumerate(("1", "3", "1")):
        monkeypatch.setenv("CHIRPTRACK_THREADS", threads)
        out = tmp_path / f"run{i}"
        assert main(["table", *QUICK, "--out", str(out)]) == 0
        outs.append(out)
    for name in ("table.csv", "trials.csv"):
        ref = (outs[0] / name).read_bytes()
        assert all((o / name).read_bytes() == ref for o in outs[1:])


def test_table_layout(tmp_path, capsys):
    assert main(["table", *QUICK, "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "table.csv").read_text().splitlines()
    assert lines[0].startswith("# signal=example1") and "trials=2" in lines[0]
    assert lines[1] == "estimator,0,100"
    assert [ln.split(",")[0] for ln in lines[2:]] == ["synth_wd", "stft", "wd"]
    trials = (tmp_path / "trials.csv").read_text().splitlines()
    assert len(trials) == 2 + 3 * 2 * 2
    assert "synth_wd" in capsys.readouterr().out


def test_trial_seeds_are_offsets():
    cfg = ExperimentConfig(n=256, snr=(0.0,), trials=2, seed=5, estimators=("stft",))
    res = monte_carlo(cfg)
    for t in range(2):
        x = add_noise(make_example1(256), NoiseSpec(0.0, 5 + t))
        img = stft(x, SegmentPlan(64, 1, "hamming"), 256)
        rep = score_mse(peak_if_samples(img, 2, 256), IfTrackSet.from_truth(example1_if(256)))
        assert res.trials[(0.0, t)]["stft"].pooled_mse == rep.pooled_mse


def test_figures_and_truth_free_mode(tmp_path):
    out = tmp_path / "fig"
    assert main(["figures", "--signal", "example1", "--snr", "-5", "--trials", "1", "--n",
                 "256", "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert names == {"wd.pgm", "stft.pgm", "synth_wd.pgm", "truth_if.csv", "est_if.csv",
                     "mse_vs_snr.csv"}
    sig = tmp_path / "x.sig"
    write_signal(sig, add_noise(make_example1(256), NoiseSpec(10.0, 3)))
    out2 = tmp_path / "fig2"
    assert main(["figures", "--signal", f"file:{sig}", "--out", str(out2)]) == 0
    assert {p.name for p in out2.iterdir()} == {"wd.pgm", "stft.pgm", "synth_wd.pgm",
                                                "est_if.csv"}


def test_figures_are_reproducible(tmp_path):
    args = ["figures", "--snr", "0", "--trials", "1", "--n", "256"]
    assert main([*args, "--out", str(tmp_path / "a")]) == 0
    assert main([*args, "--out", str(tmp_path / "b")]) == 0
    for p in (tmp_path / "a").iterdir():
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


def test_analyze_exports(tmp_path):
    sig = tmp_path / "x.sig"
    write_signal(sig, make_example1(128))
    assert main(["analyze", str(sig), "--dlct", "--L", "64", "--out", str(tmp_path / "d")]) == 0
    header = (tmp_path / "d" / "dlct.csv").read_text().splitlines()[0].split(",")
    assert len(header) == 65
    assert main(["analyze", str(sig), "--estimate", "--out", str(tmp_path / "e")]) == 0
    assert {p.name for p in (tmp_path / "e").iterdir()} == {
        "synth_wd.pgm", "synth_wd.csv", "est_if.csv", "components.csv"}


def test_analyze_missing_file(tmp_path, capsys):
    assert main(["analyze", str(tmp_path / "missing.sig")]) == 2
    assert "no such file" in capsys.readouterr().err


def test_analyze_parse_error_has_line_number(tmp_path, capsys):
    sig = tmp_path / "bad.sig"
    sig.write_text("# n=3\n0 1\n1 1\n2 oops\n")
    assert main(["analyze", str(sig), "--out", str(tmp_path)]) != 0
    assert f"{sig}:4" in capsys.readouterr().err


def test_table_rejects_file_signal(tmp_path, capsys):
    sig = tmp_path / "x.sig"
    write_signal(sig, make_example1(64))
    assert main(["table", "--signal", f"file:{sig}", "--out", str(tmp_path)]) == 1
    assert "known IF" in capsys.readouterr().err


def test_unknown_estimator_is_an_error(capsys):
    assert main(["table", "--estimators", "synth_wd,music"]) == 1
    assert "unknown estimator" in capsys.readouterr().err


def test_unwritable_out_dir(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["table", *QUICK, "--out", str(blocker / "sub")]) == 1
    assert "chirptrack:" in capsys.readouterr().err
