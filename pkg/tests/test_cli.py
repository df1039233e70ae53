import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from fraclap.cli import load_config, main, run_pipeline
from fraclap.errors import ConfigurationError


def write_config(path, **overrides):
    cfg = {
        "mode": "checks_only",
        "domain": {"interval": [0.0, 1.0], "cells": 16},
        "s": 0.5,
        "q": 2.0,
        "f": {"builtin": "saturating", "alpha": 30.0},
        "cq_restarts": 8,
        "solver": {"starts": 4},
    }
    cfg.update(overrides)
    with open(path, "w") as fh:
        yaml.safe_dump(cfg, fh)
    return path


def test_missing_required_key_exits_1(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    with open(path, "w") as fh:
        yaml.safe_dump({"mode": "checks_only", "domain": {"interval": [0, 1], "cells": 4}}, fh)
    code = main(["run", str(path)])
    assert code == 1
    assert "'s'" in capsys.readouterr().err


def test_unknown_mode_rejected(tmp_path):
    path = write_config(tmp_path / "c.yaml", mode="theorem_9_9")
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_unreadable_config_exits_1(tmp_path):
    assert main(["run", str(tmp_path / "missing.yaml")]) == 1


def test_defaults_are_applied(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.yaml"))
    assert cfg["quadrature_order"] == 6
    assert cfg["cq_inflation"] == pytest.approx(1.10)
    assert cfg["solver"]["grad_tol"] == pytest.approx(1e-9)


def test_checks_mode_failing_h1_exits_2(tmp_path, capsys):
    path = write_config(tmp_path / "c.yaml",
                        f={"expr": "t^2", "gamma": 3.0},
                        output=str(tmp_path))
    code = main(["checks", str(path)])
    assert code == 2
    report = json.loads((tmp_path / "report.json").read_text())
    assert "h1" in report["failing_checks"]
    assert "h1" in capsys.readouterr().err


def test_checks_mode_passing_exits_0(tmp_path):
    path = write_config(tmp_path / "c.yaml", output=str(tmp_path), truncate=True)
    assert main(["checks", str(path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["failing_checks"] == []
    assert report["c_q"]["raw_lower_bound"]["value"] < report["c_q"]["inflated"]["value"]


def test_run_pipeline_report_invariants(tmp_path):
    cfg = load_config(write_config(
        tmp_path / "c.yaml", mode="example_4_4", output=str(tmp_path),
        domain={"interval": [0.0, 1.0], "cells": 16},
    ))
    code, report, mesh, sol = run_pipeline(cfg)
    assert code == 0
    # sigma inverts to r through the ball formula
    sigma = report["sigma"]["value"]
    r = report["r"]["value"]
    q = 2.0
    c_q = report["c_q"]["inflated"]["value"]
    h_sup = report["h"]["esssup"]["value"]
    h_l1 = report["h"]["l1"]["value"]
    r_back = sigma ** (q / 2.0) * c_q * 1.0 * h_sup / h_l1
    assert r_back == pytest.approx(r, rel=1e-12)
    # the threshold scaling matches the first eigenvalue for this family
    assert report["alpha_threshold"]["value"] == pytest.approx(
        report["lambda1"]["value"], rel=1e-7
    )
    assert sol.nontrivial and sol.bound_F2


def test_solution_files_written(tmp_path):
    path = write_config(tmp_path / "c.yaml", mode="example_4_4",
                        output=str(tmp_path),
                        domain={"interval": [0.0, 1.0], "cells": 16})
    assert main(["run", str(path)]) == 0
    csv_lines = (tmp_path / "solution.csv").read_text().strip().splitlines()
    assert csv_lines[0] == "x,u"
    assert len(csv_lines) == 18  # header + 17 nodes
    first = csv_lines[1].split(",")
    assert float(first[0]) == 0.0 and float(first[1]) == 0.0  # boundary node
    plot = np.loadtxt(tmp_path / "plot.dat")
    assert plot.shape == (17, 2)
    assert np.max(plot[:, 1]) > 0.0


def test_report_is_deterministic_across_threads(tmp_path):
    """Byte-identical report.json for FRACLAP_THREADS in {1, 4}."""
    outputs = {}
    for threads in ("1", "4"):
        out = tmp_path / f"t{threads}"
        out.mkdir()
        path = write_config(tmp_path / f"c{threads}.yaml", mode="example_4_4",
                            output=str(out),
                            domain={"interval": [0.0, 1.0], "cells": 16})
        proc = subprocess.run(
            [sys.executable, "-m", "fraclap.cli", "run", str(path)],
            env={"FRACLAP_THREADS": threads, "PATH": "/usr/bin:/bin"},
            capture_output=True, text=True, timeout=600,
        )
        assert proc.returncode == 0, proc.stderr
        outputs[threads] = (out / "report.json").read_bytes()
    assert outputs["1"] == outputs["4"]


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_rectangle_domain_config(tmp_path):
    path = write_config(tmp_path / "c.yaml",
                        domain={"rectangle": [[0.0, 1.0], [0.0, 1.0]],
                                "cells": [3, 3]},
                        s=0.4, quadrature_order=3, output=str(tmp_path),
                        f={"builtin": "saturating", "alpha": 120.0},
                        truncate=True)
    assert main(["checks", str(path)]) == 0


def test_bad_kernel_type_exits_1(tmp_path, capsys):
    path = write_config(tmp_path / "c.yaml", kernel={"type": "gaussian"})
    assert main(["run", str(path)]) == 1
    assert "kernel.type" in capsys.readouterr().err
