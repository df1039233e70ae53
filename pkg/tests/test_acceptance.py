"""End-to-end acceptance suite.

Each test exercises one of the headline guarantees of the package at its
stated tolerance: quadrature correctness against an independent oracle,
the Gagliardo scaling identity, eigen/embedding consistency, gradient
exactness, the full existence pipeline on the model instance, threshold
behavior of the nontriviality certificate, the closed-form level map,
byte-determinism of reports, and the hypothesis-checker truth table.
"""

import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from fraclap import (
    BallConstraint,
    HField,
    Kernel,
    assemble_stiffness,
    energy,
    estimate_c_q,
    first_eigenpair,
    gradient,
    nontriviality_certificate,
    solve_in_ball,
)
from fraclap import hypotheses as hy
from fraclap.cli import load_config, run_pipeline
from fraclap.kernel import FRACTIONAL
from fraclap.mesh import build_interval_mesh


def test_stiffness_matches_independent_quadrature(stiffness_reference):
    """Criterion: every entry on (0,1), s in {0.25, 0.5, 0.75}, 4- and
    8-cell meshes, within 1e-6 relative of a brute-force oracle."""
    for cells in (4, 8):
        for s in (0.25, 0.5, 0.75):
            ref = stiffness_reference[f"cells={cells},s={s}"]
            mesh = build_interval_mesh(0.0, 1.0, cells)
            kernel = Kernel(n=1, s=s, variant=FRACTIONAL)
            A = assemble_stiffness(mesh, kernel, quadrature_order=6).A
            scale = np.abs(ref)
            rel = np.abs(A - ref) / np.where(scale > 0, scale, 1.0)
            assert np.max(rel) <= 1e-6


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("c", [2.0, 4.0])
def test_gagliardo_scaling_law(s, c):
    """Criterion: the energy form scales as c^(n-2s) under dilation by c,
    within 1e-6 relative."""
    mesh = build_interval_mesh(0.0, 1.0, 12)
    kernel = Kernel(n=1, s=s, variant=FRACTIONAL)
    A = assemble_stiffness(mesh, kernel, quadrature_order=6).A
    A_c = assemble_stiffness(mesh.dilate(c), kernel, quadrature_order=6).A
    rng = np.random.default_rng(3)
    for _ in range(5):
        u = rng.standard_normal(A.shape[0])
        ratio = (u @ A_c @ u) / (u @ A @ u)
        assert ratio == pytest.approx(c ** (1.0 - 2.0 * s), rel=1e-6)


def test_eigen_embedding_consistency(system16, mesh16, eig16):
    """Criterion: c_2 = 1/lambda1 to 1e-8 relative, lambda1 non-increasing
    under nested refinement, e1 single-signed."""
    emb = estimate_c_q(system16, mesh16, q=2.0, restarts=8, e1=eig16.e1)
    assert emb.c_q_lower == pytest.approx(1.0 / eig16.lambda1, rel=1e-8)

    lams = []
    for cells in (8, 16, 32):
        mesh = build_interval_mesh(0.0, 1.0, cells)
        kernel = Kernel(n=1, s=0.5, variant=FRACTIONAL)
        system = assemble_stiffness(mesh, kernel, quadrature_order=6)
        eig = first_eigenpair(system)
        lams.append(eig.lambda1)
        assert np.all(eig.e1 > 0.0) or np.all(eig.e1 < 0.0)
    assert lams[0] >= lams[1] >= lams[2]


@pytest.mark.parametrize("make_nl", [hy.saturating, hy.linear])
def test_energy_gradient_exactness(system16, mesh16, make_nl):
    """Criterion: analytic gradient matches central differences at 20
    random points to 1e-6 componentwise relative error."""
    nl = make_nl(1.3)
    h = HField.constant(mesh16, 1.0)
    d = system16.A.shape[0]
    rng = np.random.default_rng(7)
    for _ in range(20):
        u = rng.standard_normal(d)
        g = gradient(system16, mesh16, h, nl, u)
        scale = max(1.0, float(np.max(np.abs(u))))
        step = 1e-6 * scale
        for i in rng.choice(d, size=3, replace=False):
            e = np.zeros(d)
            e[i] = step
            fd = (energy(system16, mesh16, h, nl, u + e)
                  - energy(system16, mesh16, h, nl, u - e)) / (2.0 * step)
            assert abs(g[i] - fd) <= 1e-6 * max(abs(fd), 1e-8 * scale)


def test_model_instance_end_to_end(system16, mesh16, eig16):
    """Criterion: the model saturating instance (alpha = 2 lambda1, h = 1,
    s = 0.5, q = 2, psi = t^2) passes every hypothesis check and the
    solver certificates hold at their stated tolerances."""
    lam = eig16.lambda1
    alpha = 2.0 * lam
    nl = hy.truncate_nonlinearity(hy.saturating(alpha))
    aux = hy.AuxFunction.default(2.0)
    h = HField.constant(mesh16, 1.0)
    hstats = hy.HStats(esssup=1.0, essinf=1.0, l1=1.0)

    emb = estimate_c_q(system16, mesh16, q=2.0, restarts=8, e1=eig16.e1)
    c_q = emb.c_q_lower * 1.10

    assert hy.check_class_a(nl).passed
    aux_verdict = hy.check_aux_conditions(aux)
    assert aux_verdict.passed
    assert all(aux_verdict.details[k] for k in ("i1", "i2", "i3"))
    assert hy.check_h1(nl, q=2.0).passed
    assert hy.check_h2(nl, lam, h_essinf=1.0).passed
    assert hy.check_h3(nl, q=2.0, c_q=c_q, h=hstats).passed

    analysis = hy.analyze_g_lambda(nl, aux)
    assert analysis.alpha_val < analysis.beta_val
    r, level, verdict, _ = hy.find_admissible_r(nl, aux, analysis, c_q, hstats)
    assert verdict.passed

    constraint = BallConstraint.from_level(r, 2.0, c_q, aux.gamma_psi, 1.0, 1.0)
    sol = solve_in_ball(system16, mesh16, h, nl, constraint,
                        starts=6, seed=0, e1=eig16.e1, lambda1=lam)
    assert sol.nontrivial
    umax = float(np.max(sol.u))
    assert float(np.min(sol.u)) >= -1e-6 * umax
    assert sol.energy < 0.0
    assert sol.x0_norm_sq < constraint.sigma
    b = system16.A @ sol.u - gradient(system16, mesh16, h, nl, sol.u)
    assert sol.residual_inf <= 1e-8 * np.max(np.abs(b))


def test_nontriviality_threshold_probe(system16, mesh16, eig16):
    """Criterion: no negative-energy witness along e1 at alpha = lambda1/2,
    and one at alpha = 2 lambda1."""
    lam = eig16.lambda1
    h = HField.constant(mesh16, 1.0)
    below = nontriviality_certificate(
        system16, mesh16, h, hy.truncate_nonlinearity(hy.saturating(0.5 * lam)),
        eig16.e1, lambda1=lam)
    assert below is None
    above = nontriviality_certificate(
        system16, mesh16, h, hy.truncate_nonlinearity(hy.saturating(2.0 * lam)),
        eig16.e1, lambda1=lam)
    assert above is not None
    assert above[1] < 0.0


def test_level_parameter_closed_form():
    """Criterion: truncated F(t) = t with psi = t^2 gives
    lambda_r = 0.5 r^(-1/2): r=1 -> 0.5 and r=4 -> 0.25, to 1e-6."""
    nl = hy.truncate_nonlinearity(hy.custom("1 + 0*t", gamma=1.0))
    aux = hy.AuxFunction.default(2.0)
    analysis = hy.analyze_g_lambda(nl, aux)
    for r, expected in ((1.0, 0.5), (4.0, 0.25)):
        level = hy.find_level_parameter(nl, aux, r, analysis)
        assert level.lambda_r == pytest.approx(expected, rel=1e-6)


def test_report_byte_determinism(tmp_path):
    """Criterion: identical config and seed give byte-identical report.json
    for FRACLAP_THREADS in {1, 4}."""
    reports = {}
    for threads in ("1", "4"):
        out = tmp_path / f"t{threads}"
        out.mkdir()
        cfg = {
            "mode": "example_4_4",
            "domain": {"interval": [0.0, 1.0], "cells": 16},
            "s": 0.5,
            "seed": 0,
            "cq_restarts": 8,
            "solver": {"starts": 4},
            "output": str(out),
        }
        path = tmp_path / f"c{threads}.yaml"
        with open(path, "w") as fh:
            yaml.safe_dump(cfg, fh)
        proc = subprocess.run(
            [sys.executable, "-m", "fraclap.cli", "run", str(path)],
            env={"FRACLAP_THREADS": threads, "PATH": "/usr/bin:/bin"},
            capture_output=True, text=True, timeout=600,
        )
        assert proc.returncode == 0, proc.stderr
        reports[threads] = (out / "report.json").read_bytes()
    assert reports["1"] == reports["4"]
    assert json.loads(reports["1"])  # sanity: valid JSON


def test_hypothesis_truth_table():
    """Criterion: the checker reproduces the known verdicts for the four
    canonical nonlinearities."""
    assert not hy.check_h1(hy.power(2.0), q=2.0).passed
    assert not hy.check_h1(hy.custom("t^2", gamma=3.0), q=2.0).passed
    assert hy.check_h1(hy.saturating(5.0), q=2.0).passed
    cubic_F = hy.custom("3*t^2", gamma=3.0)  # F = t^3, liminf at 0 is 0
    lim = hy.liminf_F_over_xi2_at_zero(cubic_F)
    assert lim.extrapolated == pytest.approx(0.0, abs=1e-8)
    assert not hy.check_h2(cubic_F, 25.0, h_essinf=1.0).passed
