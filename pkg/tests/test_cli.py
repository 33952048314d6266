import json

import pytest

from conftest import DATA_DIR

from permkit import kernels, selfcheck
from permkit.cli import (
    EXIT_FAIL,
    EXIT_IMPOSSIBLE,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_SINGULAR,
    RunConfig,
    main,
)

DEMO = str(DATA_DIR / "demo6x6.mtx")


def run_json(capsys, *argv):
    code = main(["--report", "json", *argv])
    out = capsys.readouterr().out
    return code, json.loads(out)


# ---------------------------------------------------------------------------
# exit codes


def test_demo_file_runs_clean(capsys):
    code, rep = run_json(capsys, "--input", DEMO)
    assert code == EXIT_OK
    assert rep["status"] == "ok"
    assert rep["value"]["integer"] == "61776"
    assert rep["n"] == 6


def test_missing_file_is_a_parse_failure(capsys):
    assert main(["--input", "/nonexistent/file.mtx"]) == EXIT_PARSE


def test_garbage_file(tmp_path, capsys):
    p = tmp_path / "bad.mtx"
    p.write_text("%%MatrixMarket matrix coordinate integer general\nnot a size line\n")
    assert main(["--input", str(p)]) == EXIT_PARSE


def test_oversized_matrix(tmp_path, capsys):
    p = tmp_path / "big.mtx"
    p.write_text("%%MatrixMarket matrix coordinate integer general\n64 64 1\n1 1 1\n")
    assert main(["--input", str(p)]) == EXIT_IMPOSSIBLE


def test_singular_exit_code(tmp_path, capsys):
    p = tmp_path / "sing.txt"
    p.write_text("1 1 0\n1 1 0\n1 1 0\n")
    code, rep = run_json(capsys, "--input", str(p), "--preprocess", "dm")
    assert code == EXIT_OK
    assert rep["status"] == "singular"
    assert rep["value"]["integer"] == "0"

    assert (
        main(["--input", str(p), "--preprocess", "dm", "--fail-on-singular"])
        == EXIT_SINGULAR
    )


def test_empty_input_maps_to_one(tmp_path, capsys):
    # the engines refuse n = 0; the command maps it to the empty-product 1
    p = tmp_path / "empty.txt"
    p.write_text("# nothing here\n")
    code, rep = run_json(capsys, "--input", str(p))
    assert code == EXIT_OK
    assert rep["n"] == 0
    assert rep["value"]["integer"] == "1" 


def test_decomp_timeout_exit(tmp_path, capsys):
    code, rep = run_json(
        capsys,
        "--input",
        DEMO,
        "--algorithm",
        "decomp",
        "--task-limit",
        "1",
    )
    assert code == 3
    assert rep["status"] == "timeout"


# ---------------------------------------------------------------------------
# reports


def test_text_report(capsys):
    code = main(["--input", DEMO, "--report", "text"])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert "61776" in out
    assert "status" in out


def test_json_value_is_bit_stable(capsys):
    _, rep1 = run_json(capsys, "--input", DEMO, "--workers", "4")
    _, rep2 = run_json(capsys, "--input", DEMO, "--workers", "4")
    assert rep1["value"] == rep2["value"]


def test_dm_stats_in_report(capsys):
    code, rep = run_json(capsys, "--input", DEMO, "--preprocess", "dm")
    assert code == EXIT_OK
    assert rep["preprocess"]["dm"]["nnz_before"] == 13
    assert rep["preprocess"]["dm"]["nnz_after"] == 9
    assert rep["preprocess"]["dm"]["removed"] == 4
    assert rep["value"]["integer"] == "61776"


def test_decomp_algorithm_reports_stats(capsys):
    code, rep = run_json(capsys, "--input", DEMO, "--algorithm", "decomp")
    assert code == EXIT_OK
    assert rep["value"]["integer"] == "61776"
    assert rep["preprocess"]["decomp"]["tasks"] >= 1


# ---------------------------------------------------------------------------
# generators


def test_uniform_generator_reports_reference(capsys):
    code, rep = run_json(
        capsys, "--generate", "uniform", "--size", "8", "--fill", "1.0"
    )
    assert code == EXIT_OK
    est = rep["error_estimate"]
    assert est["formula"] == "n! * a^n"
    assert est["rel_error"] <= 1e-12
    assert float(rep["value"]["decimal"]) == pytest.approx(40320.0)


def test_random_generator_needs_seed(capsys):
    assert main(["--generate", "random-real", "--size", "6"]) == EXIT_PARSE
    code, rep = run_json(
        capsys, "--generate", "random-real", "--size", "6", "--seed", "9"
    )
    assert code == EXIT_OK


def test_generator_save(tmp_path, capsys):
    out = tmp_path / "gen.mtx"
    code, rep = run_json(
        capsys,
        "--generate", "uniform", "--size", "5", "--fill", "2.0",
        "--save", str(out),
    )
    assert code == EXIT_OK
    assert out.exists()
    code2, rep2 = run_json(capsys, "--input", str(out))
    assert rep2["value"]["decimal"] == rep["value"]["decimal"]


# ---------------------------------------------------------------------------
# config files


def test_config_file_with_flag_override(tmp_path, capsys):
    cfgp = tmp_path / "run.json"
    cfgp.write_text(json.dumps({
        "input": DEMO,
        "policy": "qq",
        "worker_num": 3,
        "mode": "ignored-field",
    }))
    code, rep = run_json(capsys, "--config", str(cfgp))
    assert code == EXIT_OK
    assert rep["policy"] == "qq"
    assert rep["workers"] == 3

    code, rep = run_json(capsys, "--config", str(cfgp), "--policy", "dd")
    assert rep["policy"] == "dd"


def test_config_rejects_unknown_keys(tmp_path):
    cfgp = tmp_path / "bad.json"
    cfgp.write_text(json.dumps({"input": DEMO, "no_such_option": 1}))
    assert main(["--config", str(cfgp)]) == EXIT_PARSE


def test_config_alias_names(tmp_path):
    cfgp = tmp_path / "alias.json"
    cfgp.write_text(json.dumps({"processor_num": 2, "worker_num": 2}))
    cfg = RunConfig.from_file(cfgp)
    assert cfg.processes == 2
    assert cfg.workers == 2


# ---------------------------------------------------------------------------
# partials workflow


def test_emit_then_merge(tmp_path, capsys):
    part_dir = tmp_path / "parts"
    part_dir.mkdir()
    code, rep = run_json(
        capsys,
        "--input", DEMO,
        "--processes", "3",
        "--no-aligned",
        "--emit-partials", str(part_dir),
    )
    assert code == EXIT_OK
    assert rep["status"] == "partials-emitted"
    files = sorted(part_dir.glob("partial-*.txt"))
    assert len(files) == 3

    code, merged = run_json(capsys, "--input", DEMO, "--merge", str(part_dir))
    assert code == EXIT_OK
    assert merged["value"]["integer"] == "61776"

    # the whole-run value matches the merged one bit for bit
    code, whole = run_json(capsys, "--input", DEMO, "--processes", "3", "--no-aligned")
    assert whole["value"]["hex"] == merged["value"]["hex"]


def test_emit_single_rank(tmp_path, capsys):
    part_dir = tmp_path / "parts"
    part_dir.mkdir()
    for rank in range(2):
        code, _ = run_json(
            capsys,
            "--input", DEMO,
            "--processes", "2",
            "--process-index", str(rank),
            "--emit-partials", str(part_dir),
        )
        assert code == EXIT_OK
    assert len(list(part_dir.glob("partial-*.txt"))) == 2
    code, merged = run_json(capsys, "--input", DEMO, "--merge", str(part_dir))
    assert merged["value"]["integer"] == "61776"


def test_merge_wrong_matrix_fails(tmp_path, capsys):
    part_dir = tmp_path / "parts"
    part_dir.mkdir()
    main(["--input", DEMO, "--processes", "2", "--emit-partials", str(part_dir)])
    capsys.readouterr()
    other = tmp_path / "other.txt"
    other.write_text("1 2\n3 4\n")
    assert main(["--input", str(other), "--merge", str(part_dir)]) == EXIT_FAIL


# ---------------------------------------------------------------------------
# selfcheck wiring


def test_selfcheck_passes(capsys):
    assert main(["--selfcheck"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[PASS]" in out and "[FAIL" not in out


def test_selfcheck_catches_planted_defect(monkeypatch, capsys):
    # break the final sign factor; the checks must notice
    monkeypatch.setattr(kernels, "_sign_factor", lambda n: 1)
    assert selfcheck.run_selfcheck(verbose=False) is False
