"""Tests for scenario parsing, materialization, and classification rows.

The auto-L oracle is the hand formula the grid resolver promises: the
larger of the far signal cone 1.5*w_plus*(1+t_end) plus boundary drift
and, for a nontrivial fan, the data-ramp cover at tail mass 1e-12 plus
the same cone and drift, never less than the layer's sampled extent.
"""

import math

import numpy as np
import pytest

import inflow_waves.scenario as sn
from inflow_waves.errors import ConfigError
from inflow_waves.gas import GasParams
from inflow_waves.rarefaction import fan_tail_cover


def base_config(**over):
    cfg = {
        "z_plus": {"rho": 1.0, "u": 1.1, "theta": 1.0},
        "wave": {"bl": {"theta_minus": 0.99}},
    }
    cfg.update(over)
    return cfg


WAVE2 = {
    "composite": {
        "bl": {"theta_minus": 0.99},
        "rarefaction": {"v_m": 1.0, "eps": 0.05, "q": 60},
    }
}
GAS2 = {"gamma": 2.0, "kappa": 6.0}
Z2 = {"rho": 1.0921878208766564, "u": 1.3924106243073184,
      "theta": 1.0921878208766564}


# ---------------------------------------------------------------- parsing


def test_defaults_filled():
    sc = sn.scenario_from_dict(base_config())
    assert sc.gas == GasParams()
    assert sc.grid_L is None and sc.grid_N == sn.DEFAULT_N
    assert sc.sim.t_end == sn.DEFAULT_T_END
    assert sc.sim.cfl == 0.4
    assert sc.sim.output_stride == 10
    assert sc.sim.decay_target == 0.1
    assert sc.pert_kind == "psi_bump"
    assert sc.pert_amplitude == sn.DEFAULT_PERT_AMPLITUDE
    assert sc.pert_width is None
    assert sc.seed == 0
    assert sc.sweep is None
    assert sc.q == sn.DEFAULT_Q


def test_wave_kinds_normalize():
    sc = sn.scenario_from_dict(base_config())
    assert sc.wave_kind == "bl" and sc.theta_minus == 0.99
    assert sc.v_m is None and sc.delta_r is None
    fan = base_config(wave={"rarefaction": {"delta_r": 0.2, "eps": 0.05}})
    sc = sn.scenario_from_dict(fan)
    assert sc.wave_kind == "rarefaction" and sc.theta_minus is None
    assert sc.delta_r == 0.2 and sc.eps == 0.05 and sc.q == 20.0
    sc = sn.scenario_from_dict(base_config(wave=WAVE2, gas=GAS2, z_plus=Z2))
    assert sc.wave_kind == "composite"
    assert sc.theta_minus == 0.99 and sc.v_m == 1.0 and sc.q == 60.0


def test_round_trip_through_dict():
    configs = [
        base_config(),
        base_config(wave=WAVE2, gas=GAS2, z_plus=Z2,
                    grid={"L": "auto", "N": 2048},
                    sim={"t_end": 200.0},
                    perturbation={"kind": "psi_bump", "amplitude": 1e-2,
                                  "width": 12.0}),
        base_config(wave={"rarefaction": {"delta_r": 0.2, "eps": 0.05}},
                    classify={"u_points": 7, "gammas": [1.4, 2.0]}),
        base_config(perturbation={"kind": "none"}),
    ]
    for cfg in configs:
        sc = sn.scenario_from_dict(cfg)
        assert sn.scenario_from_dict(sc.to_dict()) == sc


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda c: c.pop("wave"), "missing required key 'wave'"),
        (lambda c: c.pop("z_plus"), "missing required key 'z_plus'"),
        (lambda c: c.update(typo=1), "unknown key"),
        (lambda c: c["z_plus"].update(vel=1), "unknown key"),
        (lambda c: c["wave"]["bl"].update(x=1), "unknown key"),
        (lambda c: c["wave"].update(rarefaction={"v_m": 1.2, "eps": 0.05}),
         "exactly one of 'bl'"),
        (lambda c: c.update(wave={}), "exactly one of 'bl'"),
        (lambda c: c.update(wave={"rarefaction": {"eps": 0.05}}),
         "exactly one of 'v_m'"),
        (lambda c: c.update(
            wave={"rarefaction": {"v_m": 1.2, "delta_r": 0.1, "eps": 0.05}}),
         "exactly one of 'v_m'"),
        (lambda c: c.update(wave={"rarefaction": {"v_m": 1.2}}),
         "missing required key 'eps'"),
        (lambda c: c.update(wave={"composite": {"bl": {"theta_minus": 0.99}}}),
         "missing required key 'rarefaction'"),
        (lambda c: c.update(wave={"bl": {"theta_minus": True}}),
         "expected a number"),
        (lambda c: c.update(wave={"bl": {"theta_minus": -1.0}}),
         "must be positive"),
        (lambda c: c.update(
            wave={"rarefaction": {"v_m": 1.2, "eps": 1.5}}), "eps"),
        (lambda c: c.update(
            wave={"rarefaction": {"v_m": 1.2, "eps": 0.05, "q": 2}}),
         "must exceed 16"),
        (lambda c: c.update(gas={"gamma": 0.9}), "gamma"),
        (lambda c: c.update(grid={"N": 32}), "at least 64"),
        (lambda c: c.update(grid={"L": -3.0, "N": 128}), "grid.L"),
        (lambda c: c.update(grid={"N": 128.5}), "expected an integer"),
        (lambda c: c.update(sim={"t_end": 0.0}), "t_end"),
        (lambda c: c.update(sim={"cfl": 1.5}), "cfl"),
        (lambda c: c.update(perturbation={"kind": "wiggle"}), "unknown kind"),
        (lambda c: c.update(perturbation={"kind": "custom"}), "unknown kind"),
        (lambda c: c.update(perturbation={"kind": "none", "width": 3.0}),
         "meaningless"),
        (lambda c: c.update(perturbation={"width": -2.0}), "must be positive"),
        (lambda c: c.update(seed="0"), "expected an integer"),
        (lambda c: c.update(classify={"u_points": 0}), "at least 1"),
        (lambda c: c.update(classify={"u_range": [2.0, 1.0]}), "0 < lo < hi"),
        (lambda c: c.update(classify={"u_range": [1.0]}), "u_range"),
        (lambda c: c.update(classify={"gammas": []}), "non-empty"),
        (lambda c: c.update(classify={"gammas": [1.4, 1.0]}), "must exceed 1"),
    ],
)
def test_rejects_invalid_config(mutate, message):
    cfg = base_config()
    mutate(cfg)
    with pytest.raises(ConfigError, match=message):
        sn.scenario_from_dict(cfg)


def test_non_object_root_rejected():
    with pytest.raises(ConfigError, match="expected an object"):
        sn.scenario_from_dict([1, 2])


def test_load_scenario_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        sn.load_scenario(str(tmp_path / "nope.json"))


def test_load_scenario_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{nope")
    with pytest.raises(ConfigError, match="invalid JSON"):
        sn.load_scenario(str(path))


# -------------------------------------------------------- materialization


def test_pure_layer_gets_trivial_fan():
    rs = sn.materialize(sn.scenario_from_dict(base_config(
        grid={"L": 30.0, "N": 128}, sim={"t_end": 1.0})))
    assert rs.wave.rare.delta_r == 0.0
    assert rs.wave.z_m == rs.scenario.z_plus.to_lagrangian()
    assert rs.grid.L == 30.0 and rs.grid.N == 128


def test_pure_fan_gets_trivial_layer():
    cfg = base_config(
        z_plus={"rho": 1.0, "u": 1.0, "theta": 1.0},
        wave={"rarefaction": {"delta_r": 0.3, "eps": 0.05}},
        sim={"t_end": 5.0},
    )
    rs = sn.materialize(sn.scenario_from_dict(cfg))
    assert rs.wave.bl.delta_bar == 0.0
    assert rs.wave.z_minus == rs.wave.z_m


def test_auto_grid_matches_hand_formula():
    cfg = base_config(wave=WAVE2, gas=GAS2, z_plus=Z2,
                      grid={"L": "auto", "N": 2048}, sim={"t_end": 200.0})
    rs = sn.materialize(sn.scenario_from_dict(cfg))
    w_p = rs.wave.rare.w_plus
    cover = fan_tail_cover(rs.wave.rare, 1e-12)
    expect = max(
        1.5 * w_p * 201.0 - rs.wave.s_minus * 200.0,
        cover + w_p * 201.0 - rs.wave.s_minus * 200.0,
    )
    assert rs.grid.L == expect
    assert rs.resolved["grid"]["L"] == expect


def test_auto_grid_covers_layer_extent():
    # short horizon: the signal cone is tiny and the layer extent wins
    rs = sn.materialize(sn.scenario_from_dict(base_config(
        sim={"t_end": 1.0})))
    assert rs.wave.bl.xi_cap > 0.0
    assert rs.grid.L >= rs.wave.bl.xi_cap


def test_auto_width_is_tenth_of_length():
    rs = sn.materialize(sn.scenario_from_dict(base_config(
        grid={"L": 40.0, "N": 128})))
    assert rs.perturbation.width == 4.0
    assert rs.resolved["perturbation"]["width"] == 4.0


def test_overrides_apply():
    sc = sn.scenario_from_dict(base_config(grid={"L": 30.0, "N": 128}))
    rs = sn.materialize(sc, n_override=256, t_end_override=2.5)
    assert rs.grid.N == 256
    assert rs.sim.t_end == 2.5
    assert rs.resolved["grid"]["N"] == 256
    assert rs.resolved["sim"]["t_end"] == 2.5
    with pytest.raises(ConfigError, match="at least 64"):
        sn.materialize(sc, n_override=16)
    with pytest.raises(ConfigError, match="t_end"):
        sn.materialize(sc, t_end_override=-1.0)


@pytest.mark.parametrize(
    "z_plus, wave, message",
    [
        # far speed above the full sound speed: no layer regime
        ({"rho": 1.0, "u": 1.3, "theta": 1.0},
         {"bl": {"theta_minus": 0.99}}, "admits no layer"),
        # compressive jump requested from the fan
        ({"rho": 1.0, "u": 1.1, "theta": 1.0},
         {"rarefaction": {"v_m": 0.5, "eps": 0.05}}, "compress"),
        # fan strong enough to stall the intermediate inflow
        ({"rho": 1.0, "u": 0.2, "theta": 1.0},
         {"rarefaction": {"delta_r": 0.5, "eps": 0.05}}, "nonpositive"),
        # boundary ratio below the window's critical lower edge
        ({"rho": 1.0, "u": 1.1, "theta": 1.0},
         {"bl": {"theta_minus": 0.5}}, "outside the admissible window"),
        # boundary ratio beyond the discriminant's reach
        ({"rho": 1.0, "u": 1.1, "theta": 1.0},
         {"bl": {"theta_minus": 1.2}}, "exceeds the largest admissible"),
    ],
)
def test_invalid_waves_become_config_errors(z_plus, wave, message):
    sc = sn.scenario_from_dict(base_config(z_plus=z_plus, wave=wave))
    with pytest.raises(ConfigError, match=message):
        sn.materialize(sc)


def test_resolved_embeds_all_defaults():
    rs = sn.materialize(sn.scenario_from_dict(base_config(
        grid={"L": 30.0, "N": 128})))
    cfg = rs.resolved
    assert cfg["gas"] == {"R": 1.0, "gamma": 1.4, "A": 1.0, "kappa": 1.0}
    assert cfg["sim"] == {"t_end": 200.0, "cfl": 0.4, "output_stride": 10,
                          "decay_target": 0.1}
    assert cfg["seed"] == 0
    assert cfg["perturbation"]["kind"] == "psi_bump"


# ---------------------------------------------------------------- classify


def test_classify_single_row_matches_library():
    sc = sn.scenario_from_dict(base_config())
    rows = sn.classify_rows(sc)
    assert len(rows) == 1
    row = rows[0]
    assert row["case"] == "Exists_NonDegenerate"
    assert row["subcase"] == "I"
    assert row["u_plus"] == 1.1 and row["gamma"] == 1.4
    assert row["theta_minus"] == 0.99
    assert row["admits_theta_minus"] is True
    assert row["window_lo"] == row["w2_star"]
    assert row["window_hi"] == row["w2_sup"]


def test_classify_sweep_bands_ordered():
    # default band [0.5*sqrt(R*th), 1.5*sqrt(gamma*R*th)] crosses both
    # sonic edges, so the case sequence along u must be the three regimes
    # in order (the degenerate point has measure zero)
    sc = sn.scenario_from_dict(base_config(
        classify={"u_points": 41, "gammas": [1.4, 2.0, 5.0]}))
    rows = sn.classify_rows(sc)
    assert len(rows) == 123
    for gamma in (1.4, 2.0, 5.0):
        cases = [r["case"] for r in rows if r["gamma"] == gamma]
        us = [r["u_plus"] for r in rows if r["gamma"] == gamma]
        assert us == sorted(us)
        order = {"NoSolution_SubTilde": 0, "Exists_NonDegenerate": 1,
                 "Exists_Degenerate": 1.5, "NoSolution_Supersonic": 2}
        ranks = [order[c] for c in cases]
        assert ranks == sorted(ranks)
        assert ranks[0] == 0 and ranks[-1] == 2 and 1 in ranks
        # band edges: every u in the middle band lies strictly between
        # the sonic speeds
        for u, c in zip(us, cases):
            if c == "Exists_NonDegenerate":
                assert math.sqrt(1.0) < u < math.sqrt(gamma)


def test_classify_sweep_thread_count_invariant():
    sc = sn.scenario_from_dict(base_config(
        classify={"u_points": 17, "gammas": [1.4, 2.0]}))
    a = sn.classify_rows(sc, max_workers=1)
    b = sn.classify_rows(sc, max_workers=8)
    assert len(a) == len(b) == 34
    for ra, rb in zip(a, b):
        for key in ra:
            va, vb = ra[key], rb[key]
            if isinstance(va, float) and math.isnan(va):
                assert math.isnan(vb)
            else:
                assert va == vb


def test_classify_inadmissible_ratio_still_reports_regime():
    # theta_minus above w2_sup near the sonic edge: the row keeps the
    # regime columns and flags the ratio as not admitted
    sc = sn.scenario_from_dict(base_config(
        z_plus={"rho": 1.0, "u": 1.001, "theta": 1.0},
        wave={"bl": {"theta_minus": 1.1}}))
    row = sn.classify_rows(sc)[0]
    assert row["case"] == "Exists_NonDegenerate"
    assert row["admits_theta_minus"] is False
    assert row["w2_sup"] < 1.1


def test_classify_explicit_range():
    sc = sn.scenario_from_dict(base_config(
        classify={"u_points": 5, "u_range": [0.5, 1.5]}))
    rows = sn.classify_rows(sc)
    assert [r["u_plus"] for r in rows] == [0.5, 0.75, 1.0, 1.25, 1.5]
