import dataclasses
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apasqueeze import params
from apasqueeze.params import ConfigError, UnstableFrequencyError, derive, reference_config


def test_reference_recoil_and_light_shift():
    p = derive(reference_config(20.0))
    assert p.omega_r / (2 * math.pi) == pytest.approx(3773.3, abs=0.05)
    assert p.u0 == pytest.approx(0.90842, abs=5e-6)
    assert p.zeta == pytest.approx(0.5 * math.sqrt(1e5) * p.u0, rel=1e-15)
    assert p.delta_c == pytest.approx(0.5 * 1e5 * p.u0, rel=1e-15)


def test_reference_omega_sw_20(ref20):
    assert ref20.omega_c == 24.0
    assert ref20.beta == pytest.approx(2.98720, abs=5e-5)
    assert ref20.mu == pytest.approx(1.0247, abs=5e-5)
    assert ref20.nu == pytest.approx(0.22365, abs=5e-6)
    assert ref20.omega_c_prime == pytest.approx(math.sqrt(24.0**2 - 100.0), rel=1e-15)
    assert ref20.xi == pytest.approx(math.acosh(ref20.mu), rel=1e-12)


def test_omega_sw_zero_is_identity_squeeze(ref0):
    assert (ref0.mu, ref0.nu, ref0.xi) == (1.0, 0.0, 0.0)
    assert ref0.omega_c_prime == ref0.omega_c == 4.0


def test_kerr_coefficient(ref20):
    assert ref20.kerr == pytest.approx(-(24.0 + 10.0) * ref20.beta**2, rel=1e-15)


def test_diagonalizing_branch_sign():
    for w in (5.0, 20.0):
        p = derive(reference_config(w), branch="diagonalizing")
        q = derive(reference_config(w))
        assert p.nu == -q.nu and p.mu == q.mu
        assert p.xi == -q.xi
    assert derive(reference_config(-1.0), branch="diagonalizing").nu > 0


def test_diagonalizing_condition_holds_only_on_diagonalizing_branch():
    for branch, expect_zero in (("diagonalizing", True), ("printed", False)):
        p = derive(reference_config(20.0), branch=branch)
        residual = p.omega_c * p.mu * p.nu + 0.25 * p.omega_sw * (p.mu**2 + p.nu**2)
        assert (abs(residual) < 1e-12) is expect_zero


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-2.6, max_value=500.0, allow_nan=False))
def test_bogoliubov_normalization(omega_sw):
    for branch in params.BRANCHES:
        p = derive(reference_config(omega_sw), branch=branch)
        assert p.mu**2 - p.nu**2 == pytest.approx(1.0, abs=1e-12 * p.mu**2)
        assert p.omega_c_prime**2 == pytest.approx(p.omega_c**2 - 0.25 * omega_sw**2, rel=1e-12)


def test_unstable_frequency():
    with pytest.raises(UnstableFrequencyError):
        derive(reference_config(-8.0 / 3.0))
    with pytest.raises(UnstableFrequencyError):
        derive(reference_config(-10.0))


def test_waist_route_matches_formula():
    cfg = dataclasses.replace(reference_config(), omega_sw_over_omega_r=None, waist=25e-6)
    p = derive(cfg)
    hbar = 1.054571817e-34
    si = 8 * math.pi * hbar * cfg.scattering_length * cfg.n_atoms / (cfg.atom_mass * cfg.cavity_length * cfg.waist**2)
    assert p.omega_sw == pytest.approx(si / p.omega_r, rel=1e-9)


def test_weak_coupling(ref20):
    check = params.weak_coupling_check(ref20, 0.01)
    assert check.ok and check.ratio == pytest.approx(0.0090842, rel=1e-4) and check.bound == 10
    assert not params.weak_coupling_check(ref20, 20.0).ok


@pytest.mark.parametrize(
    "change, message",
    [
        ({"waist": None, "omega_sw_over_omega_r": None}, "waist"),
        ({"waist": 1e-5, "omega_sw_over_omega_r": 3.0}, "omega_sw_over_omega_r"),
        ({"n_atoms": 0}, "n_atoms"),
        ({"cavity_length": -1.0}, "cavity_length"),
        ({"atom_detuning": 0.0}, "atom_detuning"),
        ({"alpha_sq": -0.1}, "alpha_sq"),
    ],
)
def test_config_validation(change, message):
    base = dataclasses.asdict(reference_config())
    base.update(change)
    with pytest.raises(ConfigError, match=message):
        params.PhysicalConfig(**base)


def test_load_config_roundtrip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(dataclasses.asdict(reference_config(7.0))))
    assert params.load_config(path) == reference_config(7.0)


def test_load_config_errors(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        params.load_config(path)
    data = dataclasses.asdict(reference_config())
    data["bogus"] = 1
    path.write_text(json.dumps(data))
    with pytest.raises(ConfigError, match="unknown config keys: bogus"):
        params.load_config(path)
    data.pop("bogus")
    data["alpha_sq"] = "0.01"
    path.write_text(json.dumps(data))
    with pytest.raises(ConfigError, match="alpha_sq"):
        params.load_config(path)
    with pytest.raises(ConfigError, match="cannot read"):
        params.load_config(tmp_path / "missing.json")
