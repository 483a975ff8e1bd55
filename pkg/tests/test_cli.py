from __future__ import annotations

import json
from pathlib import Path

from bashsynth import dataset_io as D
from bashsynth.cli import EXEC_OPT_IN_ENV, main

from conftest import make_replay_entries


def _write_dataset(path: Path, rows: list[tuple[str, str]]) -> None:
    D.write_records(
        [D.DatasetRecord(nl=nl, cmd=cmd, source="original") for nl, cmd in rows], path
    )


def test_score_identity_prints_100(tmp_path, capsys):
    ref = tmp_path / "ref.jsonl"
    _write_dataset(ref, [("list", "ls -la"), ("search", "grep -w foo bar")])
    assert main(["score", "--ref", str(ref), "--pred", str(ref)]) == 0
    assert capsys.readouterr().out.strip() == "100.00%"


def test_score_json_format(tmp_path, capsys):
    ref = tmp_path / "ref.jsonl"
    _write_dataset(ref, [("list", "ls")])
    pred = tmp_path / "pred.jsonl"
    pred.write_text(
        json.dumps({"candidates": [{"cmd": "ls", "confidence": 1.0}]}) + "\n"
    )
    assert main(["score", "--ref", str(ref), "--pred", str(pred), "--format", "json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload == {"accuracy_pct": 100.0, "pairs": 1}


def test_generate_deterministic_bytes(tmp_path):
    out_a = tmp_path / "a.jsonl"
    out_b = tmp_path / "b.jsonl"
    args = ["generate", "--utility", "grep", "--limit", "40", "--seed", "7"]
    assert main(args + ["--out", str(out_a)]) == 0
    assert main(args + ["--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()
    assert (tmp_path / "a.jsonl.manifest.json").exists()


def test_validate_exec_refused_without_env(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv(EXEC_OPT_IN_ENV, raising=False)
    templates = tmp_path / "templates.jsonl"
    main(["generate", "--utility", "ls", "--limit", "5", "--out", str(templates)])
    code = main(
        ["validate", "--in", str(templates), "--out", str(tmp_path / "r.jsonl"),
         "--exec", "--workspace", str(tmp_path / "ws")]
    )
    assert code == 2
    assert "refusing" in capsys.readouterr().err


def test_validate_exec_with_opt_in(tmp_path, monkeypatch):
    monkeypatch.setenv(EXEC_OPT_IN_ENV, "1")
    templates = tmp_path / "templates.jsonl"
    main(["generate", "--utility", "ls", "--limit", "4", "--out", str(templates)])
    out = tmp_path / "results.jsonl"
    code = main(
        ["validate", "--in", str(templates), "--out", str(out), "--exec",
         "--workspace", str(tmp_path / "ws"),
         "--survivors", str(tmp_path / "valid.jsonl")]
    )
    assert code == 0
    results = [json.loads(l) for l in out.read_text().splitlines()]
    assert results and all("verdict" in r for r in results)


def test_stage_composability(tmp_path, capsys):
    """generate -> validate (dry) -> scale -> split -> stats, no manual edits."""
    templates = tmp_path / "templates.jsonl"
    assert main(
        ["generate", "--utility", "find", "--utility", "ls", "--piped",
         "--limit", "60", "--head-limit", "6", "--tail-limit", "6",
         "--seed", "3", "--out", str(templates)]
    ) == 0

    results = tmp_path / "results.jsonl"
    survivors = tmp_path / "survivors.jsonl"
    assert main(
        ["validate", "--in", str(templates), "--out", str(results),
         "--survivors", str(survivors), "--workspace", str(tmp_path / "ws")]
    ) == 0

    profile = tmp_path / "profile.json"
    profile.write_text(json.dumps({"proportions": {"find": 0.6}}))
    scaled = tmp_path / "scaled.jsonl"
    assert main(
        ["scale", "--in", str(survivors), "--out", str(scaled),
         "--profile", str(profile), "--seed", "1"]
    ) == 0
    entries = D.read_templates(scaled)
    assert entries and all("_" in e.cmd or "[" not in e.cmd for e in entries)

    # scaled templates become records once NL arrives; fake it for the rest
    dataset = tmp_path / "dataset.jsonl"
    D.write_records(
        [
            D.DatasetRecord(nl=f"sentence {i}", cmd=e.cmd, source="generated")
            for i, e in enumerate(entries)
        ],
        dataset,
    )
    assert main(
        ["split", "--in", str(dataset), "--train", str(tmp_path / "train.jsonl"),
         "--test", str(tmp_path / "test.jsonl"), "--seed", "5"]
    ) == 0
    train = D.read_records(tmp_path / "train.jsonl")
    test = D.read_records(tmp_path / "test.jsonl")
    assert len(train) + len(test) == len(entries)

    capsys.readouterr()  # drain earlier stage chatter
    assert main(["stats", "--in", str(dataset), "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["total"] == len(entries)


def test_stats_json(tmp_path, capsys):
    dataset = tmp_path / "data.jsonl"
    _write_dataset(dataset, [("a", "ls"), ("b", "find . | sort")])
    assert main(["stats", "--in", str(dataset), "--format", "json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["total"] == 2
    assert report["piped"] == 1


def test_templatize_subcommand(tmp_path):
    dataset = tmp_path / "data.jsonl"
    _write_dataset(dataset, [("compress", "tar -cjf backup.bz2 mydir")])
    out = tmp_path / "templ.jsonl"
    assert main(["templatize", "--in", str(dataset), "--out", str(out)]) == 0
    assert D.read_records(out)[0].cmd == "tar -cjf _FILE _PATH"


def test_fill_subcommand(tmp_path):
    dataset = tmp_path / "data.jsonl"
    _write_dataset(dataset, [('go to "abc"', "cd _DIRECTORY")])
    out = tmp_path / "filled.jsonl"
    assert main(["fill", "--in", str(dataset), "--out", str(out)]) == 0
    # quoted "abc" extracts as REGEX, so the DIRECTORY slot stays; the
    # example path form does fill
    dataset2 = tmp_path / "data2.jsonl"
    _write_dataset(dataset2, [("compress /home/user now", "tar -cjf _FILE _PATH")])
    out2 = tmp_path / "filled2.jsonl"
    assert main(["fill", "--in", str(dataset2), "--out", str(out2)]) == 0
    assert D.read_records(out2)[0].cmd == "tar -cjf _FILE /home/user"


def test_llm_pipeline_offline(tmp_path, capsys):
    log = tmp_path / "replay.jsonl"
    log.write_text(
        "\n".join(json.dumps(e, ensure_ascii=False) for e in make_replay_entries())
        + "\n"
    )
    out = tmp_path / "records.jsonl"
    audit = tmp_path / "audit.jsonl"
    code = main(
        ["llm-pipeline", "--n", "10", "--out", str(out), "--replay", str(log),
         "--audit-log", str(audit)]
    )
    assert code == 0
    records = D.read_records(out)
    assert len(records) == 5
    assert len(audit.read_text().splitlines()) == 15
    assert (tmp_path / "records.jsonl.manifest.json").exists()


def test_backtranslate_offline(tmp_path):
    entries = [
        {
            "request": {
                "model": "default",
                "messages": [
                    {"role": "user", "content": "Translate to English: ls -la"}
                ],
                "temperature": 0.0,
            },
            "response": "list everything",
        }
    ]
    log = tmp_path / "replay.jsonl"
    log.write_text("\n".join(json.dumps(e) for e in entries) + "\n")
    templates = tmp_path / "templates.jsonl"
    D.write_templates(
        [D.TemplateEntry(id="x", cmd="ls -la", utilities=("ls",))], templates
    )
    out = tmp_path / "records.jsonl"
    code = main(
        ["backtranslate", "--in", str(templates), "--out", str(out),
         "--replay", str(log)]
    )
    assert code == 0
    assert D.read_records(out)[0].nl == "list everything"


def test_import_man_subcommand(tmp_path):
    man = tmp_path / "cp.txt"
    man.write_text("OPTIONS\n  -r, --recursive\n      copy directories recursively\n")
    out = tmp_path / "cp.yaml"
    assert main(["import-man", "--man", str(man), "--utility", "cp", "--out", str(out)]) == 0
    from bashsynth.syntax_kb import load_specs

    spec = load_specs(out)[0]
    assert spec.name == "cp"
    assert "-r" in {f.token for f in spec.flags}


def test_unknown_utility_errors(tmp_path, capsys):
    code = main(["generate", "--utility", "frobnicate", "--out", str(tmp_path / "x")])
    assert code == 2
    assert "unknown utility" in capsys.readouterr().err


def test_missing_input_file_errors(tmp_path, capsys):
    code = main(["stats", "--in", str(tmp_path / "absent.jsonl")])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_every_output_has_manifest(tmp_path):
    out = tmp_path / "t.jsonl"
    main(["generate", "--utility", "cd", "--out", str(out)])
    manifest = json.loads((tmp_path / "t.jsonl.manifest.json").read_text())
    assert manifest["subcommand"] == "generate"
    assert manifest["tool_version"]
    assert manifest["timestamp"]


def test_config_file_sets_defaults(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"limit": 5, "seed": 99}))
    out_cfg = tmp_path / "cfg.jsonl"
    out_cli = tmp_path / "cli.jsonl"
    assert main(["--config", str(config), "generate", "--utility", "grep",
                 "--out", str(out_cfg)]) == 0
    assert main(["generate", "--utility", "grep", "--limit", "5", "--seed", "99",
                 "--out", str(out_cli)]) == 0
    assert out_cfg.read_bytes() == out_cli.read_bytes()

    # explicit flags win over the config file
    out_flag = tmp_path / "flag.jsonl"
    assert main(["--config", str(config), "generate", "--utility", "grep",
                 "--limit", "2", "--out", str(out_flag)]) == 0
    assert len(D.read_templates(out_flag)) == 2
