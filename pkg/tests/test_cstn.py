import random

import pytest
from hypothesis import given, settings, strategies as st

from togglenet.cstn import (
    AffineModel, CoverageBudgetError, DimensionError, NetworkKind, Topology,
    TopologyError, Trn, apply_forward, apply_inverse, build_topology,
    default_log_extra, extract_affine, mirror, permutation_coverage,
    reverse_trn,
)
from reference_impls import ref_apply_forward, gf2_rank


def rand_trn(rnd, topo):
    return Trn(rnd.getrandbits(topo.selector_count), topo.selector_count)


class TestBuildTopology:
    def test_omega8_counts(self):
        topo = build_topology(8, "omega", 0)
        assert topo.stages == 3
        assert topo.switch_count == 12
        assert topo.selector_count == 36

    def test_log64_selector_count(self):
        assert build_topology(64, "log", 4).selector_count == 960

    def test_omega4(self):
        topo = build_topology(4, "omega", 0)
        assert topo.stages == 2
        assert topo.selector_count == 12

    def test_omega_formula_through_512(self):
        for n in (4, 8, 16, 32, 64, 128, 256, 512):
            topo = build_topology(n, "omega", 0)
            assert topo.selector_count == 3 * (n // 2) * (n.bit_length() - 1)

    def test_default_log_extra(self):
        topo = default_log_extra(64)
        assert (topo.m, topo.stages) == (4, 10)

    @pytest.mark.parametrize("n", [3, 6, 12, 2, 0, 1])
    def test_rejects_bad_widths(self, n):
        with pytest.raises(TopologyError):
            build_topology(n, "omega", 0)

    def test_rejects_log_without_extra_stage(self):
        with pytest.raises(TopologyError):
            build_topology(8, "log", 0)

    def test_rejects_omega_with_extra_stage(self):
        with pytest.raises(TopologyError):
            build_topology(8, "omega", 1)

    def test_wiring_entries_are_bijections(self):
        for topo in (build_topology(16, "omega", 0), build_topology(16, "log", 2)):
            assert len(topo.wiring) == topo.stages - 1
            for w in topo.wiring:
                assert sorted(w) == list(range(topo.n))

    def test_json_roundtrip(self):
        topo = build_topology(32, "log", 3)
        assert Topology.from_json(topo.to_json()) == topo


class TestApplyForward:
    def test_zero_trn_zero_block_fixed_point(self):
        topo = build_topology(4, "omega", 0)
        assert apply_forward(topo, Trn.zeros(topo), 0) == 0

    def test_zero_trn_is_wiring_composition(self):
        topo = build_topology(8, "omega", 0)
        trn = Trn.zeros(topo)
        for j in range(8):
            dest = topo.wiring[1][topo.wiring[0][j]]
            assert apply_forward(topo, trn, 1 << j) == 1 << dest

    def test_all_toggles_give_complement_pattern(self):
        # toggles 1, swaps 0: output = wiring composition of all-ones = all-ones
        topo = build_topology(8, "omega", 0)
        bits = 0
        for i in range(topo.switch_count):
            bits |= 0b110 << (3 * i)
        trn = Trn(bits, topo.selector_count)
        assert apply_forward(topo, trn, 0) == ref_apply_forward(topo, bits, 0) == 0xFF

    def test_matches_reference_evaluator(self):
        rnd = random.Random(1)
        for n, kind, m in [(4, "omega", 0), (8, "omega", 0), (8, "log", 1),
                           (16, "log", 2), (64, "log", 4)]:
            topo = build_topology(n, kind, m)
            for _ in range(50):
                trn = rand_trn(rnd, topo)
                x = rnd.getrandbits(n)
                assert apply_forward(topo, trn, x) == ref_apply_forward(topo, trn.bits, x)

    def test_matches_affine_model_n8(self):
        rnd = random.Random(2)
        topo = build_topology(8, "omega", 0)
        trn = rand_trn(rnd, topo)
        am = extract_affine(topo, trn)
        for _ in range(64):
            x = rnd.getrandbits(8)
            assert apply_forward(topo, trn, x) == am.apply(x)

    def test_dimension_errors(self):
        topo = build_topology(8, "omega", 0)
        with pytest.raises(DimensionError):
            apply_forward(topo, Trn.zeros(topo), 1 << 8)
        wrong = Trn(0, 12)
        with pytest.raises(DimensionError):
            apply_forward(topo, wrong, 0)


class TestInverse:
    def test_exhaustive_n4(self):
        topo = build_topology(4, "omega", 0)
        for bits in range(1 << 12):
            trn = Trn(bits, 12)
            for x in range(16):
                assert apply_inverse(topo, trn, apply_forward(topo, trn, x)) == x

    def test_zero_trn_inverse_is_unshuffle(self):
        topo = build_topology(8, "omega", 0)
        trn = Trn.zeros(topo)
        for j in range(8):
            dest = topo.wiring[1][topo.wiring[0][j]]
            assert apply_inverse(topo, trn, 1 << dest) == 1 << j

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**960 - 1), st.integers(0, 2**64 - 1))
    def test_roundtrip_n64(self, bits, x):
        topo = build_topology(64, "log", 4)
        trn = Trn(bits, 960)
        assert apply_inverse(topo, trn, apply_forward(topo, trn, x)) == x

    def test_bijectivity_exhaustive_n8(self):
        rnd = random.Random(3)
        topo = build_topology(8, "omega", 0)
        trn = rand_trn(rnd, topo)
        images = {apply_forward(topo, trn, x) for x in range(256)}
        assert len(images) == 256


class TestMirrorReuse:
    def test_exhaustive_n4(self):
        topo = build_topology(4, "omega", 0)
        mtopo = mirror(topo)
        for bits in range(1 << 12):
            trn = Trn(bits, 12)
            rt = reverse_trn(topo, trn)
            for x in range(16):
                assert apply_forward(mtopo, rt, apply_forward(topo, trn, x)) == x

    def test_zero_trn_reverses_to_zero(self):
        topo = build_topology(16, "omega", 0)
        assert reverse_trn(topo, Trn.zeros(topo)) == Trn.zeros(topo)

    @pytest.mark.parametrize("n,kind,m", [(8, "omega", 0), (64, "log", 4)])
    def test_sampled(self, n, kind, m):
        rnd = random.Random(4)
        topo = build_topology(n, kind, m)
        mtopo = mirror(topo)
        for _ in range(1000):
            trn = rand_trn(rnd, topo)
            rt = reverse_trn(topo, trn)
            x = rnd.getrandbits(n)
            assert apply_forward(mtopo, rt, apply_forward(topo, trn, x)) == x

    def test_mirror_is_involution_on_topology(self):
        topo = build_topology(16, "log", 2)
        assert mirror(mirror(topo)) == topo


class TestAffine:
    def test_zero_trn_permutation_matrix(self):
        topo = build_topology(8, "omega", 0)
        am = extract_affine(topo, Trn.zeros(topo))
        assert am.offset == 0
        assert sorted(am.columns) == sorted(1 << j for j in range(8))

    def test_exhaustive_equivalence_n8(self):
        rnd = random.Random(5)
        topo = build_topology(8, "omega", 0)
        for _ in range(20):
            trn = rand_trn(rnd, topo)
            am = extract_affine(topo, trn)
            assert all(am.apply(x) == apply_forward(topo, trn, x) for x in range(256))

    def test_full_rank_n16(self):
        rnd = random.Random(6)
        topo = build_topology(16, "omega", 0)
        for _ in range(100):
            am = extract_affine(topo, rand_trn(rnd, topo))
            assert gf2_rank(list(am.columns), 16) == 16

    def test_affinity_identity_exhaustive_n8(self):
        rnd = random.Random(7)
        topo = build_topology(8, "log", 1)
        trn = rand_trn(rnd, topo)
        f0 = apply_forward(topo, trn, 0)
        fs = [apply_forward(topo, trn, x) for x in range(256)]
        for x in range(256):
            for y in range(256):
                assert fs[x ^ y] ^ f0 == (fs[x] ^ f0) ^ (fs[y] ^ f0)


class TestCoverage:
    def test_omega4_blocking(self):
        count = permutation_coverage(build_topology(4, "omega", 0))
        assert count < 24

    def test_omega8_blocking(self):
        count = permutation_coverage(build_topology(8, "omega", 0))
        assert count < 40320

    def test_log811_exceeds_omega8(self):
        omega = permutation_coverage(build_topology(8, "omega", 0))
        log = permutation_coverage(build_topology(8, "log", 1))
        assert log > omega

    def test_budget_guard(self):
        with pytest.raises(CoverageBudgetError):
            permutation_coverage(build_topology(16, "omega", 0), budget=1 << 20)

    def test_sampled_mode(self):
        count = permutation_coverage(
            build_topology(16, "omega", 0), mode="sampled", budget=500, seed=1
        )
        assert 0 < count <= 500


class TestSerialization:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**960 - 1))
    def test_hex_roundtrip(self, bits):
        topo = build_topology(64, "log", 4)
        trn = Trn(bits, 960)
        assert Trn.from_hex(trn.to_hex(), topo) == trn

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**36 - 1))
    def test_parts_roundtrip(self, bits):
        topo = build_topology(8, "omega", 0)
        trn = Trn(bits, 36)
        assert trn.parts(topo).to_trn(topo) == trn

    def test_msb_first_convention(self):
        topo = build_topology(4, "omega", 0)
        trn = Trn(1, 12)  # selector 0 set
        assert trn.to_bytes()[0] == 0x80

    def test_wrong_length_rejected(self):
        topo = build_topology(8, "omega", 0)
        with pytest.raises(ValueError):
            Trn.from_bytes(b"\x00" * 3, topo)  # needs 5 bytes

    def test_cyclic_fold_matches_definition(self):
        rnd = random.Random(8)
        topo = build_topology(64, "log", 4)
        trn = rand_trn(rnd, topo)
        block = rnd.getrandbits(64)
        parts = trn.parts(topo).copy()
        parts.xor_cyclic(topo, block)
        cyc = 0
        for i in range(topo.selector_count):
            cyc |= ((block >> (i % 64)) & 1) << i
        assert parts.to_trn(topo).bits == trn.bits ^ cyc
