"""Envelope, potential and force-field tests with independent oracles.

Derivative formulas are certified against central finite differences;
the one nontrivial potential value is cross-checked against a 40-digit
mpmath evaluation.
"""

import math

import numpy as np
import pytest

from conveyor.model import (
    DEGENERATE,
    FP_NONE,
    FP_UNDERFLOW,
    OSCILLATORY,
    RECTILINEAR,
    ConveyorParams,
    EnvelopeSpec,
    admissibility_probe,
    default_params,
    envelope_d1,
    envelope_d2,
    envelope_log_abs_d1,
    envelope_log_value,
    envelope_value,
    fixed_point_classify,
    fixed_point_test,
    force,
    force_dz,
    plane_regime,
    potential,
    potential_dt,
)

LOR = EnvelopeSpec("lorentzian", 0.37)
GAU = EnvelopeSpec("gaussian", 0.37)
PLA = EnvelopeSpec("plane")


def central_diff(fn, x, h=1e-6):
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


class TestEnvelope:
    def test_plane_is_unity(self):
        for z in (-123.0, 0.0, 0.37, 4e6):
            assert envelope_value(PLA, z) == 1.0
            assert envelope_d1(PLA, z) == 0.0
            assert envelope_d2(PLA, z) == 0.0

    def test_lorentzian_half_at_z0(self):
        assert envelope_value(LOR, 0.37) == pytest.approx(0.5, abs=1e-15)
        assert envelope_value(LOR, -0.37) == pytest.approx(0.5, abs=1e-15)

    def test_gaussian_e_minus_two_at_z0(self):
        assert envelope_value(GAU, 0.37) == pytest.approx(math.exp(-2), rel=1e-15)

    def test_first_derivative_vanishes_at_origin(self):
        for e in (PLA, LOR, GAU):
            assert envelope_d1(e, 0.0) == 0.0

    def test_lorentzian_d1_hand_value(self):
        # d/dz [z0^2/(z0^2+z^2)] at z0=1, z=1 is -2/(1+1)^2 = -0.5
        e = EnvelopeSpec("lorentzian", 1.0)
        assert envelope_d1(e, 1.0) == pytest.approx(-0.5, rel=1e-15)
        assert envelope_d1(e, 1.0) == pytest.approx(
            central_diff(lambda z: envelope_value(e, z), 1.0), rel=1e-6
        )

    def test_gaussian_d1_hand_value(self):
        e = EnvelopeSpec("gaussian", 1.0)
        assert envelope_d1(e, 1.0) == pytest.approx(-4.0 * math.exp(-2), rel=1e-15)
        assert envelope_d1(e, 1.0) == pytest.approx(
            central_diff(lambda z: envelope_value(e, z), 1.0), rel=1e-6
        )

    @pytest.mark.parametrize("e", [LOR, GAU], ids=["lorentzian", "gaussian"])
    def test_derivatives_match_finite_differences(self, e):
        rng = np.random.default_rng(7)
        for z in rng.uniform(-3.0, 3.0, 40):
            z = float(z)
            d1 = envelope_d1(e, z)
            d1_fd = central_diff(lambda x: envelope_value(e, x), z)
            assert d1 == pytest.approx(d1_fd, rel=1e-6, abs=1e-9)
            d2 = envelope_d2(e, z)
            d2_fd = central_diff(lambda x: envelope_d1(e, x), z)
            assert d2 == pytest.approx(d2_fd, rel=1e-5, abs=1e-7)

    @pytest.mark.parametrize("e", [LOR, GAU], ids=["lorentzian", "gaussian"])
    def test_parity(self, e):
        for z in (0.1, 0.37, 1.0, 2.5, 10.0):
            assert envelope_value(e, -z) == envelope_value(e, z)
            assert envelope_d1(e, -z) == -envelope_d1(e, z)

    @pytest.mark.parametrize("e", [LOR, GAU], ids=["lorentzian", "gaussian"])
    def test_decay_along_decades(self, e):
        zs = [10.0, 100.0, 1000.0, 10000.0]
        fs = [abs(envelope_value(e, z)) for z in zs]
        dfs = [abs(envelope_d1(e, z)) for z in zs]
        assert all(a >= b for a, b in zip(fs, fs[1:]))
        assert all(a >= b for a, b in zip(dfs, dfs[1:]))
        assert fs[-1] < 1e-7 and dfs[-1] < 1e-7

    def test_log_forms_match_plain_values(self):
        for e in (LOR, GAU):
            for z in (0.2, 1.0, 3.0):
                assert envelope_log_value(e, z) == pytest.approx(
                    math.log(envelope_value(e, z)), rel=1e-12
                )
                assert envelope_log_abs_d1(e, z) == pytest.approx(
                    math.log(abs(envelope_d1(e, z))), rel=1e-12
                )

    def test_log_forms_stay_finite_past_underflow(self):
        assert envelope_value(GAU, 50.0) == 0.0  # double precision gives up
        assert math.isfinite(envelope_log_value(GAU, 50.0))

    def test_validation(self):
        with pytest.raises(ValueError):
            EnvelopeSpec("parabolic")
        with pytest.raises(ValueError):
            EnvelopeSpec("lorentzian", 0.0)
        with pytest.raises(ValueError):
            EnvelopeSpec("gaussian", -1.0)
        EnvelopeSpec("plane")  # z0 not required


class TestParams:
    def test_period(self):
        p = default_params()
        assert p.period == pytest.approx(4.0 * math.pi / 100.0, rel=1e-15)
        assert p.period > 0.0 and math.isfinite(p.period)

    def test_validation(self):
        with pytest.raises(ValueError):
            ConveyorParams(f0=-0.1, b=100.0, k=1.0, envelope=PLA)
        with pytest.raises(ValueError):
            ConveyorParams(f0=0.8, b=0.0, k=1.0, envelope=PLA)
        with pytest.raises(ValueError):
            ConveyorParams(f0=0.8, b=100.0, k=-1.0, envelope=PLA)
        # zero drive is allowed: it is the exactly solvable degenerate case
        ConveyorParams(f0=0.0, b=100.0, k=1.0, envelope=PLA)

    def test_default_params_overrides(self):
        p = default_params("gaussian", b=200.0)
        assert p.envelope.kind == "gaussian"
        assert p.b == 200.0
        assert p.envelope.z0 == 0.37


class TestPotentialAndForce:
    def test_potential_at_origin_is_f0(self, lorentzian_params):
        assert potential(lorentzian_params, 0.0, 0.0) == pytest.approx(0.8, rel=1e-15)

    def test_potential_zero_at_quarter_phase(self):
        for kind in ("plane", "lorentzian", "gaussian"):
            p = default_params(kind)
            z = math.pi / (2.0 * p.k)  # k z - b t/2 = pi/2 at t = 0
            assert abs(potential(p, 0.0, z)) < 1e-16

    def test_potential_reference_value(self, lorentzian_params):
        # frozen from a 40-digit evaluation of 0.8 * f(0.37) * cos(0.37 k)^2
        expected = 0.3990152699233614
        got = potential(lorentzian_params, 0.0, 0.37)
        assert got == pytest.approx(expected, rel=1e-14)
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 40
        k = mp.mpf("2.66") * mp.pi
        f = mp.mpf("0.37") ** 2 / (mp.mpf("0.37") ** 2 + mp.mpf("0.37") ** 2)
        ref = mp.mpf("0.8") * f * mp.cos(k * mp.mpf("0.37")) ** 2
        assert got == pytest.approx(float(ref), rel=1e-14)

    def test_force_plane_zero_at_origin(self, plane_params):
        assert force(plane_params, 0.0, 0.0) == 0.0

    def test_force_plane_peak_value(self, plane_params):
        # at 2kz - bt = pi/2 the plane force is -k f0 = -6.68530916683908
        z = math.pi / (4.0 * plane_params.k)
        assert force(plane_params, 0.0, z) == pytest.approx(-6.68530916683908, rel=1e-12)

    def test_force_dz_plane_at_origin(self, plane_params):
        k = plane_params.k
        assert force_dz(plane_params, 0.0, 0.0) == pytest.approx(-2.0 * 0.8 * k * k, rel=1e-13)
        assert force_dz(plane_params, 0.0, 0.0) == pytest.approx(-111.73339664055659, rel=1e-12)

    def test_force_dz_vanishes_far_out(self, lorentzian_params):
        # polynomial tail: ~2 k^2 f0 * f(z) ~ 3e-11 at z = 1e6, shrinking ~1/z^2
        assert abs(force_dz(lorentzian_params, 0.3, 1e6)) < 1e-10
        assert abs(force_dz(lorentzian_params, 0.3, 1e6)) < abs(
            force_dz(lorentzian_params, 0.3, 1e3)
        )

    def test_potential_dt_zero_at_origin(self, lorentzian_params):
        assert potential_dt(lorentzian_params, 0.0, 0.0) == 0.0

    def test_potential_dt_plane_peak(self, plane_params):
        # at 2kz - bt = pi/2: dV/dt = b f0 / 2 = 40
        z = math.pi / (4.0 * plane_params.k)
        assert potential_dt(plane_params, 0.0, z) == pytest.approx(40.0, rel=1e-12)

    @pytest.mark.parametrize("kind", ["plane", "lorentzian", "gaussian"])
    def test_gradient_consistency(self, kind):
        # force == dV/dz and potential_dt == dV/dt by central differences
        p = default_params(kind)
        scale = p.k * p.f0
        rng = np.random.default_rng(11)
        for t, z in zip(rng.uniform(0, 1, 60), rng.uniform(-2, 2, 60)):
            t, z = float(t), float(z)
            fz = force(p, t, z)
            fd = central_diff(lambda x: potential(p, t, x), z)
            if abs(fz) > 1e-2 * scale:  # away from zeros of the gradient
                assert fz == pytest.approx(fd, rel=1e-6)
            vt = potential_dt(p, t, z)
            vt_fd = central_diff(lambda s: potential(p, s, z), t)
            if abs(vt) > 1e-2 * scale * p.b / p.k:
                assert vt == pytest.approx(vt_fd, rel=1e-6)

    @pytest.mark.parametrize("kind", ["plane", "lorentzian", "gaussian"])
    def test_force_dz_matches_finite_difference(self, kind):
        p = default_params(kind)
        rng = np.random.default_rng(13)
        scale = 2.0 * p.k * p.k * p.f0
        for t, z in zip(rng.uniform(0, 1, 40), rng.uniform(-2, 2, 40)):
            t, z = float(t), float(z)
            dfz = force_dz(p, t, z)
            fd = central_diff(lambda x: force(p, t, x), z)
            assert dfz == pytest.approx(fd, rel=1e-5, abs=1e-5 * scale)

    @pytest.mark.parametrize("kind", ["plane", "lorentzian", "gaussian"])
    def test_drive_periodicity(self, kind):
        p = default_params(kind)
        T = p.period
        rng = np.random.default_rng(17)
        for t, z in zip(rng.uniform(-5, 5, 1000), rng.uniform(-10, 10, 1000)):
            a = force(p, float(t), float(z))
            b = force(p, float(t) + T, float(z))
            assert abs(b - a) < 1e-12 * (1.0 + abs(a))

    @pytest.mark.parametrize("kind", ["plane", "lorentzian", "gaussian"])
    def test_potential_range(self, kind):
        p = default_params(kind)
        rng = np.random.default_rng(19)
        for t, z in zip(rng.uniform(0, 1, 200), rng.uniform(-6, 6, 200)):
            v = potential(p, float(t), float(z))
            ceiling = p.f0 * envelope_value(p.envelope, float(z))
            assert -1e-16 <= v <= ceiling + 1e-15
            assert ceiling <= p.f0 + 1e-15


class TestStructuralProbes:
    def test_fixed_point_plane_never(self, plane_params):
        for z in (-10.0, 0.0, 3.3):
            assert fixed_point_test(plane_params, z, 1e-6) is False

    def test_fixed_point_lorentzian_never(self, lorentzian_params):
        # f > 0 everywhere, so the rest-point criterion can never hold
        for z in np.linspace(-50, 50, 101):
            assert fixed_point_test(lorentzian_params, float(z), 1e-12) is False

    def test_fixed_point_gaussian_underflow_artifact(self, gaussian_params):
        assert fixed_point_test(gaussian_params, 50.0, 1e-300) is True
        assert fixed_point_classify(gaussian_params, 50.0, 1e-300) == FP_UNDERFLOW
        assert fixed_point_classify(gaussian_params, 0.5, 1e-300) == FP_NONE

    def test_fixed_point_tol_validation(self, plane_params):
        with pytest.raises(ValueError):
            fixed_point_test(plane_params, 0.0, 0.0)

    def test_plane_regime_reference(self):
        assert plane_regime(default_params("plane")) == RECTILINEAR  # 100 < 111.73
        assert plane_regime(default_params("plane", b=200.0)) == OSCILLATORY
        p = default_params("plane")
        exact = default_params("plane", b=2.0 * p.f0 * p.k * p.k)
        assert plane_regime(exact) == DEGENERATE

    def test_admissibility_probe_lorentzian(self):
        out = admissibility_probe(LOR)
        r1 = [row[1] for row in out]
        r2 = [row[2] for row in out]
        assert all(a > b for a, b in zip(r1, r1[1:]))
        assert all(a > b for a, b in zip(r2, r2[1:]))
        assert math.exp(r1[-1]) < 1e-4 and math.exp(r2[-1]) < 1e-4

    def test_admissibility_probe_gaussian_log_space(self):
        out = admissibility_probe(GAU)
        r1 = [row[1] for row in out]
        r2 = [row[2] for row in out]
        assert all(a > b for a, b in zip(r1, r1[1:]))
        assert all(a > b for a, b in zip(r2, r2[1:]))
        assert r1[-1] < -1e6 and r2[-1] < -1e6  # diverging to -inf

    def test_admissibility_probe_rejects_plane(self):
        with pytest.raises(ValueError):
            admissibility_probe(PLA)
