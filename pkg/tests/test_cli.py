import numpy as np
import pytest

from toolpath_rl import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_gen_sections_and_baseline(tmp_path, capsys):
    out_dir = tmp_path / "sections"
    code, out = run_cli(capsys, "gen-sections", "--count", "4", "--size", "8",
                        "--seed", "3", "--out", str(out_dir))
    assert code == 0
    assert "wrote 4 sections" in out
    assert len(list(out_dir.glob("*.sect"))) == 4

    code, out = run_cli(capsys, "baseline", "--strategy", "zigzag",
                        "--sections", str(out_dir), "--episodes", "8",
                        "--horizon", "60", "--seed", "1")
    assert code == 0
    assert "mean_score:" in out


def test_baseline_unknown_strategy(tmp_path, capsys):
    out_dir = tmp_path / "sections"
    run_cli(capsys, "gen-sections", "--count", "1", "--size", "8",
            "--out", str(out_dir))
    code = cli.main(["baseline", "--strategy", "spiral",
                     "--sections", str(out_dir)])
    assert code == 2


def test_train_and_eval_round_trip(tmp_path, capsys):
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(
        "grid_size = 6\nhorizon = 15\nn_sections = 2\ntotal_steps = 300\n"
        "eval_interval = 150\neval_episodes = 2\nlearning_starts = 32\n"
        "batch_size = 8\nconv_channels = 4,4,4\nhidden = 8\n"
        "timing_enabled = false\n"
    )
    run_dir = tmp_path / "run"
    code, out = run_cli(capsys, "train", "--algo", "dqn", "--reward", "dense",
                        "--config", str(cfg_path), "--seed", "2",
                        "--out", str(run_dir))
    assert code == 0
    assert "best mean score:" in out
    assert (run_dir / "metrics.csv").exists()

    sect_dir = tmp_path / "sections"
    run_cli(capsys, "gen-sections", "--count", "2", "--size", "6",
            "--out", str(sect_dir))
    code, out = run_cli(capsys, "eval",
                        "--checkpoint", str(run_dir / "checkpoint_final.npz"),
                        "--sections", str(sect_dir), "--episodes", "2",
                        "--seed", "0")
    assert code == 0
    assert "mean_score:" in out and "mean_ep_len:" in out


def test_parser_rejects_bad_algo():
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["train", "--algo", "reinforce", "--out", "x"])


def test_entry_point_installed():
    import shutil

    assert shutil.which("toolpath-rl") is not None
