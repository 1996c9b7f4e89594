import math

import numpy as np
import pytest

from rcdroplet.circuits import extract_outermost_circuit, extract_sw_circuit, interior_area, sw_corner
from rcdroplet.dynamics import RcmParams, exact_enumerate
from rcdroplet.lattice import EdgeConfig, Window
from rcdroplet.rng import make_rng
from rcdroplet.sampler import (
    ConditioningSpec,
    MaxAttemptsError,
    estimate_c_sw,
    sample_constrained_mcmc,
    sample_rejection,
    seed_configuration,
    write_archive,
)


class TestSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            ConditioningSpec("bogus", 10.0)
        with pytest.raises(ValueError):
            ConditioningSpec("sw_centred", 10.0)  # needs c_sw
        with pytest.raises(ValueError):
            ConditioningSpec("origin_centred", 10.0)  # needs a profile

    def test_area_only_witness(self):
        from test_circuits import ring_config, UNIT8

        cfg = ring_config(Window(3), [UNIT8])
        spec = ConditioningSpec("area_only", area_min=3.0)
        assert spec.holds(cfg)
        assert interior_area(spec.witness(cfg)) == 4.0
        assert not ConditioningSpec("area_only", area_min=5.0).holds(cfg)


class TestRejection:
    def test_zero_area_accepts_any_enclosing_circuit(self):
        rng = make_rng(21)
        spec = ConditioningSpec("area_only", area_min=0.0)
        cfg = sample_rejection(Window(6), RcmParams(0.45, 1.0), spec, rng)
        assert spec.holds(cfg)

    def test_samples_satisfy_spec_and_record_attempts(self):
        rng = make_rng(22)
        spec = ConditioningSpec("area_only", area_min=9.0)
        for _ in range(5):
            cfg = sample_rejection(Window(8), RcmParams(0.45, 1.0), spec, rng)
            assert spec.holds(cfg)
            assert cfg.attempts >= 1

    def test_sw_mode_equivalence_of_fast_path(self):
        # blocked q=1 fast path agrees with the generic path in distribution:
        # both produce only event-satisfying configs with the same witness rule
        rng = make_rng(23)
        spec = ConditioningSpec("sw_centred", area_min=9.0, c_sw=(-2, 0))
        for _ in range(5):
            cfg = sample_rejection(Window(8), RcmParams(0.5, 1.0), spec, rng)
            w = spec.witness(cfg)
            assert w is not None and sw_corner(w) == (-2, 0)
            assert interior_area(w) >= 9.0

    def test_max_attempts_raises(self):
        rng = make_rng(24)
        spec = ConditioningSpec("area_only", area_min=200.0)  # impossible in L=4
        with pytest.raises(MaxAttemptsError):
            sample_rejection(Window(4), RcmParams(0.3, 1.0), spec, rng, max_attempts=200)

    def test_q2_rejection_path(self):
        rng = make_rng(25)
        spec = ConditioningSpec("area_only", area_min=1.0)
        cfg = sample_rejection(Window(4), RcmParams(0.6, 2.0), spec, rng,
                               max_attempts=30000)
        assert spec.holds(cfg)

    def test_rejection_matches_conditional_enumeration_tiny(self):
        # q=1, 12-edge window: the conditional law over full configurations
        # versus exact enumeration restricted to the event set
        from rcdroplet.dynamics import int_from_states

        rng = make_rng(26)
        w = Window(1)
        params = RcmParams(0.5, 1.0)
        spec = ConditioningSpec("area_only", area_min=1.0)
        table = exact_enumerate(w, params)
        exact = {}
        for bits, pr in table.items():
            if spec.holds(table.config_from_bits(bits)):
                exact[bits] = pr
        z = sum(exact.values())
        exact = {b: v / z for b, v in exact.items()}
        assert len(exact) == 16  # the ring forced open, four spokes free
        counts = {}
        n = 10_000
        for _ in range(n):
            cfg = sample_rejection(w, params, spec, rng)
            b = int_from_states(cfg.states)
            counts[b] = counts.get(b, 0) + 1
        assert set(counts) <= set(exact)
        tv = 0.5 * sum(abs(counts.get(b, 0) / n - p) for b, p in exact.items())
        assert tv <= 0.03


class TestMcmc:
    def test_seed_configuration_satisfies_spec(self):
        spec = ConditioningSpec("sw_centred", area_min=16.0, c_sw=(-2, -2))
        cfg = seed_configuration(Window(8), spec)
        assert spec.holds(cfg)
        with pytest.raises(ValueError):
            seed_configuration(Window(2), ConditioningSpec("area_only", area_min=100.0))

    def test_output_always_satisfies_spec(self):
        rng = make_rng(27)
        spec = ConditioningSpec("area_only", area_min=9.0)
        cfg = sample_constrained_mcmc(Window(7), RcmParams(0.45, 1.0), spec, 6, rng)
        assert spec.holds(cfg)

    def test_seed_determinism(self):
        spec = ConditioningSpec("area_only", area_min=9.0)
        a = sample_constrained_mcmc(Window(6), RcmParams(0.4, 1.0), spec, 4, make_rng(5))
        b = sample_constrained_mcmc(Window(6), RcmParams(0.4, 1.0), spec, 4, make_rng(5))
        assert a == b

    def test_law_matches_rejection_tiny(self):
        # KS between MCMC and rejection summaries at matched conditioning
        rng = make_rng(28)
        w = Window(5)
        params = RcmParams(0.45, 1.0)
        spec = ConditioningSpec("area_only", area_min=4.0)
        areas_rej, areas_mc = [], []
        config = None
        for _ in range(250):
            cfg = sample_rejection(w, params, spec, rng)
            areas_rej.append(interior_area(spec.witness(cfg)))
            config = sample_constrained_mcmc(w, params, spec, 8, rng, start=config)
            areas_mc.append(interior_area(spec.witness(config)))
        from scipy import stats

        p = stats.ks_2samp(areas_rej, areas_mc).pvalue
        assert p > 0.01


class TestEstimateCsw:
    def test_requires_samples(self):
        with pytest.raises(ValueError):
            estimate_c_sw(Window(6), RcmParams(0.45, 1.0), 3, 0, make_rng(1))

    def test_mode_and_ties(self):
        # synthetic counting logic exercised through a tiny run
        rng = make_rng(29)
        v = estimate_c_sw(Window(8), RcmParams(0.45, 1.0), 3, 25, rng)
        assert isinstance(v, tuple) and len(v) == 2
        # the SW corner of an origin-enclosing droplet sits strictly southwest
        assert v[0] < 0 or v[1] < 0


class TestArchive:
    def test_roundtrip(self, tmp_path):
        rng = make_rng(30)
        w = Window(3)
        cfgs = [EdgeConfig(w, rng.random(w.edge_count) < 0.5) for _ in range(3)]
        out = write_archive(tmp_path / "arch", cfgs, {"seed": 30, "p": 0.5})
        import json

        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 30 and len(manifest["files"]) == 3
        back = EdgeConfig.from_snapshot((out / manifest["files"][0]).read_text())
        assert back == cfgs[0]


class StubSpec:
    """Deterministic witness supplier for exercising the mode estimator."""

    mode = "area_only"
    area_min = 0.0

    def __init__(self, circuits):
        self.circuits = circuits
        self.i = -1

    def holds(self, config):
        return True

    def witness(self, config):
        self.i += 1
        return self.circuits[self.i % len(self.circuits)]


class TestEstimateCswRules:
    def test_constant_sw_returns_it(self):
        from rcdroplet.circuits import Circuit

        c = Circuit(((2, 3), (3, 3), (3, 4), (2, 4)))
        v = estimate_c_sw(Window(6), RcmParams(0.45, 1.0), 2, 7, make_rng(1),
                          spec=StubSpec([c]))
        assert v == (2, 3)

    def test_two_way_tie_breaks_lexicographically(self):
        from rcdroplet.circuits import Circuit

        a = Circuit(((2, 3), (3, 3), (3, 4), (2, 4)))
        b = Circuit(((1, 5), (2, 5), (2, 6), (1, 6)))
        v = estimate_c_sw(Window(8), RcmParams(0.45, 1.0), 2, 4, make_rng(2),
                          spec=StubSpec([a, b]))
        assert v == (1, 5)  # tie at 2 samples each; lexicographic minimum
