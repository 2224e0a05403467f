import json
import math

import pytest

from hubbard_ocoo.cli import build_config, build_parser, main, read_config
from hubbard_ocoo.sweep import COLUMNS, read_csv

# singlet levels from the bit-pattern oracle, symmetric U/t = 10, mu/t = 5
E0_FCI = 13.893300584969493
E1_FCI = 14.867831238763122

SMALL_CONFIG = """
[sweep]
kind = "symmetric"
u_over_t = 10.0

[grid]
start = 0.0
stop = 1.0
step = 0.5

[output]
csv = "out.csv"
json = "out.json"
"""


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def table_value(text, label):
    for line in text.splitlines():
        if line.startswith(label + " "):
            return float(line[len(label):].split()[0])
    raise KeyError(label)


def test_help_documents_defaults(capsys):
    for sub in ("point", "sweep"):
        with pytest.raises(SystemExit) as info:
            main([sub, "--help"])
        assert info.value.code == 0
        text = capsys.readouterr().out
        for token in ("1e+08", "1e-07", "--restarts", "--seed", "--spin-penalty"):
            assert token in text, (sub, token)


def test_point_table(capsys):
    code, out, _ = run(capsys, "point", "--kind", "symmetric", "--u", "10", "--mu", "5")
    assert code == 0
    assert table_value(out, "E0 FCI") == pytest.approx(E0_FCI, abs=1e-9)
    assert table_value(out, "E1 FCI") == pytest.approx(E1_FCI, abs=1e-9)
    assert table_value(out, "E1 OCOO") == pytest.approx(E1_FCI, abs=1e-6)
    for label in ("E0 CASSCF", "gap FCI", "gap OCOO", "gap SA-CASSCF", "|<CASSCF 0|FCI 0>|"):
        assert math.isfinite(table_value(out, label))


def test_point_noninteracting(capsys):
    code, out, _ = run(capsys, "point", "--u", "0", "--mu", "0", "--kind", "symmetric")
    assert code == 0
    for label in ("E0 FCI", "E0 CASSCF", "E0 SA-CASSCF"):
        assert table_value(out, label) == pytest.approx(-2 * math.sqrt(2), abs=1e-8)


@pytest.mark.parametrize(
    "argv",
    [
        ["point", "--u", "10", "--mu", "5"],
        ["point", "--kind", "ring", "--u", "10", "--mu", "5"],
        ["point", "--kind", "symmetric", "--u", "10", "--mu", "5", "--methods", "mp2"],
        ["point", "--kind", "symmetric", "--u", "-1", "--mu", "5"],
        ["point", "--kind", "symmetric", "--u", "1", "--mu", "5", "--t", "0"],
        [],
    ],
)
def test_usage_errors_exit_1(capsys, argv):
    with pytest.raises(SystemExit) as info:
        code = main(argv)
        raise SystemExit(code)
    assert info.value.code == 1


def test_point_partial_convergence_exit_2(capsys):
    code, _, _ = run(capsys, "point", "--kind", "symmetric", "--u", "10", "--mu", "2",
                     "--methods", "casscf", "--grad-tol", "1e-30", "--energy-tol", "1e-30",
                     "--restarts", "0", "--max-iters", "2")
    assert code == 2


def test_point_json_and_manifest(capsys, tmp_path):
    path = tmp_path / "p.json"
    trace = tmp_path / "trace.csv"
    code, _, _ = run(capsys, "point", "--kind", "antisymmetric", "--u", "10", "--mu", "1",
                     "--json", str(path), "--cf-trace", str(trace))
    assert code == 0
    rows = json.loads(path.read_text())
    assert list(rows[0]) == list(COLUMNS)
    manifest = json.loads((tmp_path / "p.json.manifest.json").read_text())
    assert manifest["seed"] == 0 and manifest["version"]
    assert manifest["convergence"]["ocoo"] == {"converged": 1, "total": 1}
    assert trace.read_text().startswith("iteration,cf,e1,overlap")


def test_sweep_from_file(capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "c.toml").write_text(SMALL_CONFIG)
    code, _, _ = run(capsys, "sweep", "--config", "c.toml")
    assert code == 0
    records = read_csv(tmp_path / "out.csv")
    assert [r.mu_over_t for r in records] == [0.0, 0.5, 1.0]
    for name in ("out.csv", "out.json"):
        manifest = json.loads((tmp_path / f"{name}.manifest.json").read_text())
        assert manifest["config"]["kind"] == "symmetric"
        assert manifest["config"]["ocoo"]["shift"] == 1e8
        assert manifest["convergence"]["casscf"] == {"converged": 3, "total": 3}
        assert "timestamp" in manifest


def test_sweep_overrides_and_determinism(capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "c.toml").write_text(SMALL_CONFIG)
    args = ["sweep", "--config", "c.toml", "--kind", "antisymmetric", "--mu-start", "-0.5",
            "--mu-stop", "0.5", "--methods", "fci,ocoo", "--json", ""]
    assert run(capsys, *args, "--csv", "a.csv")[0] == 0
    assert run(capsys, *args, "--csv", "b.csv")[0] == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    records = read_csv(tmp_path / "a.csv")
    assert [r.mu_over_t for r in records] == [-0.5, 0.0, 0.5]
    assert all(math.isnan(r.e0_sa) for r in records)
    assert not (tmp_path / "out.json").exists()


@pytest.mark.parametrize(
    "text, needle",
    [
        ("[sweep\nkind = 1", "line"),
        ("[sweep]\nkind = \"symmetric\"\nu_over_t = 10.0\ncolour = 3\n", "[sweep].colour"),
        ("[sweep]\nkind = \"symmetric\"\nu_over_t = \"ten\"\n", "[sweep].u_over_t"),
        ("[grids]\nstart = 0.0\n", "[grids]"),
        ("[sweep]\nkind = \"symmetric\"\n", "u_over_t"),
        ("[sweep]\nkind = \"symmetric\"\nu_over_t = 10.0\n[grid]\nstep = -1.0\n", "mu_step"),
        ("[sweep]\nkind = \"symmetric\"\nu_over_t = 10.0\n[optimizer]\nrestarts = 1.5\n", "[optimizer].restarts"),
    ],
)
def test_config_errors(capsys, tmp_path, text, needle):
    path = tmp_path / "bad.toml"
    path.write_text(text)
    code, _, err = run(capsys, "sweep", "--config", str(path), "--csv", str(tmp_path / "x.csv"))
    assert code == 1
    assert needle in err


def test_missing_outputs_and_config(capsys, tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("[sweep]\nkind = \"symmetric\"\nu_over_t = 10.0\n")
    assert run(capsys, "sweep", "--config", str(path))[0] == 1
    assert run(capsys, "sweep", "--config", "figures/nope")[0] == 1
    code, _, err = run(capsys, "sweep", "--config", str(path), "--csv", str(tmp_path / "no" / "x.csv"))
    assert code == 1 and "not writable" in err


@pytest.mark.parametrize("name", ["figures/sym_u10", "figures/asym_u10", "figures/sym_u5", "figures/asym_u5"])
def test_bundled_configs(name):
    config = build_config(read_config(name))
    assert config.ocoo.shift == 1e8
    assert config.ocoo.lambda_penalty == 1e8
    assert config.ocoo.cf_tol == 1e-7
    assert config.mu_step == 0.25
    assert config.u_over_t == (10.0 if name.endswith("u10") else 5.0)
    if config.kind == "symmetric":
        assert (config.mu_start, config.mu_stop) == (0.0, 12.0)
    else:
        assert (config.mu_start, config.mu_stop) == (-12.0, 12.0)
    assert len(config.grid()) == (49 if config.kind == "symmetric" else 97)


def test_parser_defaults_are_shipped_constants():
    args = build_parser().parse_args(["point", "--kind", "symmetric", "--u", "1", "--mu", "0"])
    assert (args.shift, args.lambda_penalty, args.cf_tol) == (1e8, 1e8, 1e-7)
    assert args.t == 1.0


def test_weaker_coupling_narrows_low_weight_window(capsys, tmp_path, monkeypatch, default_sweeps):
    # at U/t = 5 fewer grid points have the excited state outside the ground-state CAS space
    monkeypatch.chdir(tmp_path)
    counts = {}
    for kind, name in (("symmetric", "sym_u5"), ("antisymmetric", "asym_u5")):
        code, _, _ = run(capsys, "sweep", "--config", f"figures/{name}", "--mu-step", "0.5",
                         "--csv", f"{name}.csv", "--json", "")
        assert code == 0
        weak = read_csv(tmp_path / f"{name}.csv")
        grid = {r.mu_over_t for r in weak}
        strong = [r for r in default_sweeps.get(kind) if r.mu_over_t in grid]
        n_weak = sum(r.b0_weight < 0.2 for r in weak)
        n_strong = sum(r.b0_weight < 0.2 for r in strong)
        counts[kind] = (n_weak, n_strong)
    assert all(weak < strong for weak, strong in counts.values()), counts
