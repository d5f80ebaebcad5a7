"""Verification suite: individual checks and the default battery."""

import json
import math

import numpy as np
import pytest

from dualdiv import (DualCriterion, OptimizerSpec, PowerGenerator, Sample,
                     make_model, run_default_suite)
from dualdiv.verify import (check_duality, check_fisher_consistency,
                            check_infsup, check_saddle_derivatives,
                            saddle_check_sample, write_jsonl)

SPEC = OptimizerSpec()


def crit(gamma, name):
    return DualCriterion(PowerGenerator(gamma), make_model(name))


def test_duality_gaussian_kl():
    rep = check_duality(crit(1.0, "gaussian"), [1.0], [0.0], SPEC)
    assert rep.passed
    assert rep.measured["sup_value"] == pytest.approx(0.5, abs=1e-5)
    assert rep.measured["alpha_hat"][0] == pytest.approx(0.0, abs=1e-4)


def test_duality_exp_chi2():
    rep = check_duality(crit(2.0, "exponential"), [1.0], [0.5], SPEC)
    assert rep.passed
    assert rep.measured["sup_value"] == pytest.approx(1.0 / 6.0, abs=1e-5)


def test_duality_trivial_self():
    rep = check_duality(crit(0.5, "poisson"), [math.log(2)], [math.log(2)],
                        SPEC)
    assert rep.passed
    assert rep.measured["sup_value"] == pytest.approx(0.0, abs=1e-5)


def test_duality_skips_infinite_divergence():
    # chi-square between Exp(0.4) and Exp(1.0) is infinite (2 theta <= theta_T)
    rep = check_duality(crit(2.0, "exponential"), [0.4], [1.0], SPEC)
    assert rep.skipped and not rep.passed
    assert "infinite" in rep.reason


def test_saddle_gaussian_hessian_is_minus_one():
    family = make_model("gaussian")
    rep = check_saddle_derivatives(family, PowerGenerator(2.0),
                                   saddle_check_sample(family), SPEC)
    assert rep.passed
    assert rep.measured["hessian"][0][0] == pytest.approx(-1.0, rel=1e-3)


def test_saddle_component_identities_poisson():
    family = make_model("poisson")
    sample = saddle_check_sample(family)  # [0, 2]: T-cov == cumulant hess
    gen = PowerGenerator(0.5)
    rep = check_saddle_derivatives(family, gen, sample, SPEC)
    assert rep.passed
    hess_c = family.cumulant_hess(rep.details["theta_ml"])[0, 0]
    phi3 = gen.third_deriv_at_one
    comps = [c[0][0] for c in rep.measured["component_hessians"]]
    assert comps[0] == pytest.approx((phi3 + 2.0) * hess_c, rel=1e-3)
    assert comps[1] == pytest.approx((phi3 + 4.0) * hess_c, rel=1e-3)
    assert comps[2] == pytest.approx(hess_c, rel=1e-3)


def test_saddle_skips_when_mle_unavailable():
    family = make_model("poisson")
    rep = check_saddle_derivatives(family, PowerGenerator(1.0),
                                   Sample(np.zeros(3)), SPEC)
    assert rep.skipped


@pytest.mark.parametrize("name,gamma", [("gaussian", -1.0),
                                        ("bernoulli", 0.5),
                                        ("exponential", 2.0)])
def test_infsup_families(name, gamma):
    family = make_model(name)
    theta_t = {"gaussian": 0.7, "bernoulli": 0.4, "exponential": 1.3}[name]
    sample = family.draw_sample(np.array([theta_t]), 200, seed=11)
    rep = check_infsup(family, PowerGenerator(gamma), sample, SPEC)
    assert rep.passed, rep.details


def test_fisher_consistency_gaussian():
    rep = check_fisher_consistency(crit(1.0, "gaussian"), [0.7], SPEC)
    assert rep.passed


def test_fisher_consistency_poisson_chi2():
    rep = check_fisher_consistency(crit(2.0, "poisson"), [math.log(2)], SPEC)
    assert rep.passed


def test_default_suite_subset_and_serialization(tmp_path):
    reports = run_default_suite(checks=("duality",), gammas=(0.0, 2.0),
                                families=("gaussian",), n=50, seed=4)
    assert len(reports) == 2
    assert all(r.passed for r in reports)
    # deterministic ordering by (check, model, generator)
    labels = [r.inputs["generator"] for r in reports]
    assert labels == sorted(labels)
    path = tmp_path / "reports.jsonl"
    write_jsonl(reports, path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 2
    parsed = json.loads(lines[0])
    assert parsed["name"] == "duality"
    assert parsed["passed"] is True


def test_default_suite_rejects_unknown_check():
    with pytest.raises(ValueError):
        run_default_suite(checks=("duality", "nope"))
