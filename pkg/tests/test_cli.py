"""CLI subcommands over the synthetic corpus, run stage by stage."""

import json

import pytest
from click.testing import CliRunner

from glean.cli import main

from test_report import build_corpus


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_corpus")
    build_corpus(root)
    return root


def run(args):
    result = CliRunner().invoke(main, args, catch_exceptions=False)
    return result


def test_fixtures_subcommand(tmp_path):
    result = run(["fixtures", "--out", str(tmp_path / "fx")])
    assert result.exit_code == 0
    assert "predicted Woman: 6 of 40" in result.output
    assert (tmp_path / "fx" / "statistics.json").exists()


def test_stagewise_chain(corpus, tmp_path):
    out = tmp_path / "stages"
    r = run([
        "filter", "--corpus", str(corpus), "--landmarks", str(corpus / "landmarks.json"),
        "--prompts", str(corpus / "prompts.txt"), "--out", str(out),
    ])
    assert r.exit_code == 0, r.output
    assert "accepted 21 / rejected 9" in r.output
    accepted = json.loads((out / "accepted.json").read_text())
    assert len(accepted) == 21
    assert (out / "rejections.csv").read_text().count("\n") == 10  # header + 9

    r = run([
        "align", "--corpus", str(corpus), "--landmarks", str(corpus / "landmarks.json"),
        "--accepted", str(out / "accepted.json"), "--out", str(out),
    ])
    assert r.exit_code == 0, r.output
    assert len(list((out / "aligned").glob("*.png"))) == 21

    r = run([
        "compose", "--aligned", str(out / "aligned"), "--out", str(out / "composites"),
        "--prompts", str(corpus / "prompts.txt"),
    ])
    assert r.exit_code == 0, r.output
    assert len(list((out / "composites").glob("*_composite_N7.png"))) == 3

    r = run([
        "analyze", "--composites", str(out / "composites"),
        "--landmarks", str(corpus / "landmarks.json"),
        "--transforms", str(out / "transforms.csv"),
        "--accepted", str(out / "accepted.json"),
        "--similarities", str(corpus / "similarities.json"),
        "--emotions", str(corpus / "emotions.csv"),
        "--groups", str(corpus / "groups.json"),
        "--out", str(out),
    ])
    assert r.exit_code == 0, r.output
    lines = (out / "attributes.csv").read_text().splitlines()
    assert len(lines) == 4
    assert lines[0].startswith("prompt,predicted_gender,monk_rank")

    r = run([
        "report", "--attributes", str(out / "attributes.csv"),
        "--groups", str(corpus / "groups.json"), "--out", str(out),
    ])
    assert r.exit_code == 0, r.output
    stats = json.loads((out / "statistics.json").read_text())
    assert stats["gender"]["n"] == 3


def test_all_subcommand(corpus, tmp_path):
    out = tmp_path / "all_out"
    r = run([
        "all", "--corpus", str(corpus), "--landmarks", str(corpus / "landmarks.json"),
        "--prompts", str(corpus / "prompts.txt"),
        "--similarities", str(corpus / "similarities.json"),
        "--emotions", str(corpus / "emotions.csv"),
        "--groups", str(corpus / "groups.json"),
        "--out", str(out),
    ])
    assert r.exit_code == 0, r.output
    assert (out / "report.md").exists()
    assert (out / "statistics.json").exists()


def test_all_subcommand_config_error(tmp_path):
    r = CliRunner().invoke(main, [
        "all", "--corpus", str(tmp_path / "nope"),
        "--landmarks", str(tmp_path / "nope.json"),
        "--out", str(tmp_path / "out"),
    ])
    assert r.exit_code == 1


def test_version_flag():
    r = run(["--version"])
    assert r.exit_code == 0
