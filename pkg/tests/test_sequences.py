import numpy as np
import pytest

from framesync import (
    IncompatibleLength,
    Lfsr,
    NoValidLength,
    SyncWord,
    UnsupportedDegree,
    ZeroSeed,
    build_sync_word,
    generate_mlsr,
    min_shift_hamming_distance,
    nearest_valid_length,
)
from framesync.sequences import PRIMITIVE_POLYS


def brute_force_lfsr(m, taps_mask, seed, steps):
    """Reference bit-by-bit register simulation."""
    state = seed
    out = []
    for _ in range(steps):
        out.append(state & 1)
        fb = bin(state & taps_mask).count("1") % 2
        state = (state >> 1) | (fb << (m - 1))
    return out


class TestMlsr:
    def test_degree2_period_and_balance(self):
        seq = generate_mlsr(2)
        assert len(seq) == 3
        assert seq.sum() == 2  # two ones, one zero

    def test_degree3_canonical_sequence(self):
        # x^3 + x + 1, seed 001: brute-force register simulation
        seq = generate_mlsr(3, seed=1)
        assert len(seq) == 7
        assert seq.sum() == 4
        assert seq.tolist() == brute_force_lfsr(3, 0b011, 1, 7)

    @pytest.mark.parametrize("m", sorted(PRIMITIVE_POLYS))
    def test_full_period_every_degree(self, m):
        reg = Lfsr(m, seed=1)
        period = reg.period
        for _ in range(period):
            reg.step()
        assert reg.state == 1  # returned to the seed after exactly one period
        if m <= 10:
            # no earlier return
            reg = Lfsr(m, seed=1)
            seen = set()
            for _ in range(period):
                assert reg.state not in seen
                seen.add(reg.state)
                reg.step()

    @pytest.mark.parametrize("m", range(2, 11))
    def test_cyclic_shift_distance(self, m):
        seq = generate_mlsr(m)
        n = len(seq)
        for tau in range(1, n):
            assert np.count_nonzero(seq != np.roll(seq, tau)) == 2 ** (m - 1)

    @pytest.mark.parametrize("m", range(2, 9))
    def test_seed_shift_equivalence(self, m):
        base = generate_mlsr(m, seed=1).tolist()
        doubled = base + base
        n = len(base)
        for seed in range(1, 2**m):
            seq = generate_mlsr(m, seed=seed).tolist()
            assert any(doubled[s : s + n] == seq for s in range(n))

    def test_bad_degree_and_seed(self):
        with pytest.raises(UnsupportedDegree):
            generate_mlsr(1)
        with pytest.raises(UnsupportedDegree):
            generate_mlsr(17)
        with pytest.raises(ZeroSeed):
            generate_mlsr(4, seed=0)
        with pytest.raises(ValueError):
            generate_mlsr(4, seed=16)


class TestBuildSyncWord:
    def test_degenerate_prefix_rejected(self):
        # floor(7/7) = 1 would need a single-bit register
        with pytest.raises(IncompatibleLength):
            build_sync_word(7, 7)

    def test_n21_k3_layout(self):
        word = build_sync_word(21, 3)
        assert word.prefix_len == 7
        assert len(word) == 21
        assert np.all(word.symbols[7:] == 1)
        # mapping rule re-derived: bit 1 -> x(0), bit 0 -> x(1)
        bits = generate_mlsr(3)
        assert all(
            int(sym) == (1 if bit == 0 else 0)
            for sym, bit in zip(word.symbols[:7], bits)
        )

    def test_incompatible_length(self):
        with pytest.raises(IncompatibleLength):
            build_sync_word(20, 3)  # floor(20/3) = 6, not 2^m - 1

    @pytest.mark.parametrize("k", [3, 4, 8])
    @pytest.mark.parametrize("m", [3, 4, 5, 6])
    def test_active_fraction_floor(self, k, m):
        n = k * (2**m - 1)
        word = build_sync_word(n, k)
        bound = 1.0 - (1.0 / k) * (2 ** (m - 1)) / (2**m - 1)
        assert word.active_fraction() >= bound - 1e-12

    def test_line_round_trip(self):
        word = build_sync_word(45, 3)
        back = SyncWord.from_line(word.to_line(), word.prefix_len, word.k)
        assert np.array_equal(back.symbols, word.symbols)


class TestNearestValidLength:
    def test_target_100_k4(self):
        assert nearest_valid_length(100, 4) == 63

    def test_exact_target_kept(self):
        assert nearest_valid_length(21, 3) == 21

    def test_below_minimum(self):
        with pytest.raises(NoValidLength):
            nearest_valid_length(5, 3)

    def test_band_interior(self):
        # floor(62/4) = 15 = 2^4 - 1, and 62 < 63 = 4*15 + 3
        assert nearest_valid_length(62, 4) == 62


class TestMinShiftDistance:
    def test_constant_word_is_shift_invariant(self):
        word = SyncWord(np.ones(16, dtype=np.int8), prefix_len=0, k=0)
        dist, _ = min_shift_hamming_distance(word)
        assert dist == 0

    def test_constructed_word_strictly_positive(self):
        word = build_sync_word(21, 3)
        dist, shift = min_shift_hamming_distance(word)
        assert dist > 0
        assert 1 <= shift <= 20
        # brute-force oracle over all shifts
        sym = word.symbols
        ref = min(
            int(np.count_nonzero(sym != np.roll(sym, t))) for t in range(1, 21)
        )
        assert dist == ref

    def test_distance_grows_linearly_in_family(self):
        # N in {21, 45, 93} at K = 3: distance/N bounded below
        ratios = []
        for n in (21, 45, 93):
            word = build_sync_word(n, 3)
            dist, _ = min_shift_hamming_distance(word)
            ratios.append(dist / n)
        assert min(ratios) >= 1.0 / 12.0
