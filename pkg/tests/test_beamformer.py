import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from beamsim.beamformer import (SPEED_OF_LIGHT, TWO_PI, BeamTarget, PhaseProfile, TxPlacement,
                                compute_phase_profile, generate_codebook, ideal_configuration,
                                profile_to_configuration, propagation_phase, propagation_phases,
                                quantize_voltages)
from beamsim.errors import InvalidArgument
from beamsim.geometry import build_geometry
from beamsim.phase_law import phase_of_voltage

from oracles import quantize_exhaustive

F = 5.25e9
LAM = SPEED_OF_LIGHT / F
# 50-digit mpmath: 2 pi (sqrt(0.014^2 + 3.2^2) - 0.014 sin 25deg) / lambda mod 2 pi
ALPHA_REGRESSION = 5.879120853364623025


def circ(a, b):
    """Signed circular difference a - b in (-pi, pi]."""
    return (np.asarray(a) - np.asarray(b) + np.pi) % TWO_PI - np.pi


def test_beam_target_ranges():
    assert np.linalg.norm(BeamTarget(27, 140).direction) == pytest.approx(1.0, abs=1e-12)
    for bad in [(-1, 0), (90, 0), (10, 360), (10, -0.1)]:
        with pytest.raises(InvalidArgument):
            BeamTarget(*bad)
    with pytest.raises(InvalidArgument):
        TxPlacement((0, 0, 0))


def test_centre_cell_one_wavelength():
    g = build_geometry(1, 1, 0.014)
    a = propagation_phase(g, TxPlacement((0, 0, LAM)), BeamTarget(40, 10), LAM, 0)
    assert abs(circ(a, 0.0)) < 1e-12


def test_boresight_keeps_only_spherical_term(geometry, tx):
    alpha = propagation_phases(geometry, tx, BeamTarget(0, 0), LAM)
    d1 = np.linalg.norm(geometry.positions - tx.xyz, axis=1)
    np.testing.assert_allclose(circ(alpha, TWO_PI * d1 / LAM), 0.0, atol=1e-9)


def test_alpha_regression_constant():
    g = build_geometry(1, 3, 0.014)
    assert tuple(g.positions[2]) == (0.014, 0.0, 0.0)
    a = propagation_phase(g, TxPlacement((0, 0, 3.2)), BeamTarget(25, 0), LAM, 2)
    assert a == pytest.approx(ALPHA_REGRESSION, abs=1e-10)


def test_single_cell_profile():
    g = build_geometry(1, 1, 0.01)
    tx = TxPlacement((0.1, 0.2, 1.0))
    prof = compute_phase_profile(g, tx, BeamTarget(10, 20), F)
    a0 = propagation_phase(g, tx, BeamTarget(10, 20), LAM, 0)
    assert abs(circ(prof.phases[0], -a0)) < 1e-12


targets = st.builds(BeamTarget, st.floats(0, 89.9), st.floats(0, 359.9))
txs = st.builds(lambda x, y, z: TxPlacement((x, y, z)),
                st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 10))


@given(st.integers(1, 16), st.integers(1, 16), targets, txs, st.floats(1e9, 30e9))
def test_coherence(rows, cols, target, tx, f):
    g = build_geometry(rows, cols, 0.014)
    prof = compute_phase_profile(g, tx, target, f)
    assert np.all((prof.phases >= 0) & (prof.phases < TWO_PI))
    alpha = propagation_phases(g, tx, target, SPEED_OF_LIGHT / f)
    assert np.max(np.abs(circ(alpha + prof.phases, 0.0))) < 1e-9


@given(targets, txs)
def test_frequency_scaling(target, tx):
    g = build_geometry(4, 5, 0.014)
    a1 = propagation_phases(g, tx, target, SPEED_OF_LIGHT / F, wrap=False)
    a2 = propagation_phases(g, tx, target, SPEED_OF_LIGHT / (2 * F), wrap=False)
    np.testing.assert_allclose(a2, 2 * a1, rtol=1e-14)


@given(targets, st.floats(0.5, 5), st.floats(0.5, 5))
def test_moving_tx_along_boresight_changes_only_spherical_term(target, z1, z2):
    g = build_geometry(5, 7, 0.014)
    t1, t2 = TxPlacement((0, 0, z1)), TxPlacement((0, 0, z2))
    da = (propagation_phases(g, t2, target, LAM, wrap=False)
          - propagation_phases(g, t1, target, LAM, wrap=False))
    du = (np.linalg.norm(g.positions - t2.xyz, axis=1) - np.linalg.norm(g.positions - t1.xyz, axis=1))
    np.testing.assert_allclose(da, TWO_PI * du / LAM, atol=1e-9)


def test_planar_incidence_and_near_field_modes(geometry, tx):
    target = BeamTarget(20, 60)
    planar = propagation_phases(geometry, tx, target, LAM, incident="planar", wrap=False)
    # plane wave from boresight: the TX term is constant
    expected = TWO_PI * (3.2 - geometry.positions @ target.direction) / LAM
    np.testing.assert_allclose(planar, expected, rtol=1e-12)
    far = propagation_phases(geometry, tx, target, LAM, wrap=False)
    very_far = propagation_phases(geometry, tx, target, LAM, focus_distance=1e7, wrap=False)
    np.testing.assert_allclose(very_far, far, atol=1e-3)
    with pytest.raises(InvalidArgument):
        propagation_phases(geometry, tx, target, LAM, incident="cylindrical")


def test_zero_profile_maps_to_zero_volts(law):
    prof = PhaseProfile(F, np.zeros(10))
    cfg = profile_to_configuration(prof, law, 8)
    assert np.all(cfg.voltages == 0) and np.all(cfg.achieved_phases == 0)
    assert cfg.saturated_count == 0


def test_one_bit_tie_rounds_up(linear_law):
    prof = PhaseProfile(F, np.array([np.radians(360 - 165.0)]))
    cfg = profile_to_configuration(prof, linear_law, 1)
    assert cfg.voltages[0] == 5.0
    assert quantize_voltages(np.array([2.5, 2.4999, 2.5001]), 5.0, 1).tolist() == [5.0, 0.0, 5.0]


def test_dac_bits_range():
    for bits in (0, 17, 2.5):
        with pytest.raises(InvalidArgument):
            quantize_voltages(np.array([1.0]), 5.0, bits)


def test_quantization_matches_exhaustive_scan(law):
    rng = np.random.default_rng(3)
    v = rng.uniform(0, 5, 400)
    for bits in (1, 2, 3, 8):
        got = quantize_voltages(v, 5.0, bits)
        ref = [quantize_exhaustive(x, 5.0, bits) for x in v]
        np.testing.assert_allclose(got, ref, atol=1e-12)


def test_eight_bit_phase_error_bound(law):
    rng = np.random.default_rng(5)
    prof = PhaseProfile(F, rng.uniform(0, TWO_PI, 2000))
    cont = profile_to_configuration(prof, law, None)
    q = profile_to_configuration(prof, law, 8)
    # worst-case phase step of half an LSB on the steepest segment of the law
    slope = np.max(np.abs(np.diff(law.phases) / np.diff(law.voltages)))
    bound = np.radians(slope * (5.0 / 255) / 2)
    err = np.abs(circ(q.achieved_phases, cont.achieved_phases))
    assert err.max() <= bound + 1e-12
    # per-cell check against the target, saturation included
    sat = np.radians((360 - law.span) / 2)
    assert np.max(np.abs(circ(q.achieved_phases, prof.phases))) <= bound + sat + 1e-12
    # the achieved values are re-derivable from the voltages
    np.testing.assert_allclose(np.degrees(q.achieved_phases) % 360,
                               phase_of_voltage(law, q.voltages) % 360, atol=1e-9)


def test_saturated_count(linear_law):
    # 10 deg and 350 deg targets; only the first (wraps to 10 deg) is outside [-330, 0]
    prof = PhaseProfile(F, np.radians([10.0, 350.0, 200.0]))
    cfg = profile_to_configuration(prof, linear_law, None)
    assert cfg.saturated_count == 1
    assert cfg.saturated.tolist() == [True, False, False]


def test_ideal_configuration_is_exact():
    prof = PhaseProfile(F, np.array([0.1, 2.0, 6.0]))
    cfg = ideal_configuration(prof, [1.0, 0.5, 0.25])
    np.testing.assert_array_equal(cfg.achieved_phases, prof.phases)
    assert np.all(np.isnan(cfg.voltages))


def test_codebook_composition_and_order(geometry, law, tx):
    book = generate_codebook(geometry, tx, law, [25.0], [40.0], F, 8)
    assert len(book) == 1
    ref = profile_to_configuration(compute_phase_profile(geometry, tx, BeamTarget(25, 40), F), law, 8)
    np.testing.assert_array_equal(book[0][1].voltages, ref.voltages)

    small = build_geometry(3, 3, 0.014)
    book = generate_codebook(small, tx, law, [10.0, 20.0], [0.0, 90.0], F, 8)
    assert [(t.theta, t.phi) for t, _ in book] == [(10, 0), (10, 90), (20, 0), (20, 90)]
    with pytest.raises(InvalidArgument):
        generate_codebook(small, tx, law, [], [0.0], F, 8)


def test_codebook_entry_b_matches_independent_computation(geometry, law, tx):
    book = generate_codebook(geometry, tx, law, [20.0, 25.0], [40.0, 140.0], F, 8)
    entry = dict(((t.theta, t.phi), c) for t, c in book)[(25.0, 40.0)]
    # independent route: explicit per-cell alpha with math, then the law inverse
    v = (math.sin(math.radians(25)) * math.cos(math.radians(40)),
         math.sin(math.radians(25)) * math.sin(math.radians(40)), math.cos(math.radians(25)))
    from beamsim.phase_law import voltage_of_phase
    for n in range(0, geometry.n_cells, 61):
        x, y, _ = geometry.positions[n]
        d1 = math.sqrt(x * x + y * y + 3.2 ** 2)
        alpha = 2 * math.pi * (d1 - (x * v[0] + y * v[1])) / LAM
        beta = (-alpha) % (2 * math.pi)
        volts, _ = voltage_of_phase(law, math.degrees(beta))
        step = 5.0 / 255
        assert entry.voltages[n] == pytest.approx(math.floor(volts / step + 0.5) * step, abs=1e-9)
