import itertools
import math

import numpy as np
import pytest

import fockdyn as fd


def all_two_mode_configs(n_max):
    """Every L=2, S=2 occupation matrix with 1 <= N <= n_max."""
    for n11 in range(n_max + 1):
        for n12 in range(n_max + 1 - n11):
            for n21 in range(n_max + 1 - n11 - n12):
                for n22 in range(n_max + 1 - n11 - n12 - n21):
                    if n11 + n12 + n21 + n22 == 0:
                        continue
                    yield [[n11, n12], [n21, n22]]


def random_config(rng, max_modes=12, max_species=4, max_total=24):
    L = rng.integers(2, max_modes + 1)
    S = rng.integers(1, max_species + 1)
    N = rng.integers(1, max_total + 1)
    occ = np.zeros((L, S), dtype=np.int64)
    slots = rng.integers(0, L * S, size=N)
    for slot in slots:
        occ[slot // S, slot % S] += 1
    return occ


class TestMakeConfig:
    def test_valid(self):
        cfg = fd.make_config([[4, 0], [4, 0]])
        assert cfg.total == 8
        assert cfg.mode_totals.tolist() == [4, 4]
        assert cfg.species_totals.tolist() == [8, 0]

    def test_negative(self):
        with pytest.raises(fd.NegativeOccupation):
            fd.make_config([[-1, 0], [0, 0]])

    def test_empty(self):
        with pytest.raises(fd.EmptyConfiguration):
            fd.make_config([[0, 0], [0, 0]])

    def test_immutability(self):
        cfg = fd.make_config([[1, 0], [0, 1]])
        with pytest.raises(ValueError):
            cfg.occupations[0, 0] = 5

    def test_json_roundtrip(self):
        cfg = fd.make_config([[3, 1], [1, 3]])
        again = fd.FockConfiguration.from_json(cfg.to_json())
        assert again == cfg

    def test_json_shape_mismatch(self):
        with pytest.raises(fd.DimensionMismatch):
            fd.FockConfiguration.from_json(
                '{"L": 3, "S": 2, "occupations": [[1, 0], [0, 1]]}'
            )


class TestDoi:
    def test_single_species_two_modes(self):
        assert fd.doi(fd.make_config([[4, 0], [4, 0]])) == 1.0

    def test_separated_species(self):
        assert fd.doi(fd.make_config([[4, 0], [0, 4]])) == 0.0

    def test_mixed(self):
        # numerator 12, denominator 32
        assert fd.doi(fd.make_config([[3, 1], [1, 3]])) == 0.375

    def test_single_mode_undefined(self):
        with pytest.raises(fd.UndefinedDOI):
            fd.doi(fd.make_config([[3, 2], [0, 0]]))

    def test_range_and_extremes(self):
        rng = np.random.default_rng(42)
        checked = 0
        while checked < 10_000:
            occ = random_config(rng)
            cfg = fd.make_config(occ)
            if np.count_nonzero(cfg.mode_totals) < 2:
                continue
            checked += 1
            value = fd.doi(cfg)
            assert 0.0 <= value <= 1.0
            one_species = np.count_nonzero(cfg.species_totals) == 1
            assert (value == 1.0) == one_species

    def test_label_permutation_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            occ = random_config(rng)
            cfg = fd.make_config(occ)
            if np.count_nonzero(cfg.mode_totals) < 2:
                continue
            value = fd.doi(cfg)
            mode_perm = rng.permutation(occ.shape[0])
            species_perm = rng.permutation(occ.shape[1])
            shuffled = fd.make_config(occ[mode_perm][:, species_perm])
            if np.count_nonzero(shuffled.mode_totals) < 2:
                continue
            assert fd.doi(shuffled) == pytest.approx(value, abs=1e-15)


class TestTwoModeDoi:
    def test_indistinguishable(self):
        assert fd.two_mode_doi(fd.TwoModeParams(8, 0, 4, 4)) == 1.0

    def test_delta2_zero(self):
        assert fd.two_mode_doi(fd.TwoModeParams(8, 0, 2, 0)) == 0.5

    def test_separated(self):
        assert fd.two_mode_doi(fd.TwoModeParams(8, 0, 4, -4)) == 0.0

    def test_empty_mode(self):
        with pytest.raises(fd.UndefinedDOI):
            fd.two_mode_doi(fd.TwoModeParams(8, 8, 4, 0))

    def test_parity_validation(self):
        with pytest.raises(fd.InvalidImbalance):
            fd.TwoModeParams(8, 0, 3, 0)
        with pytest.raises(fd.InvalidImbalance):
            fd.TwoModeParams(8, 9, 0, 0)

    def test_agrees_with_general_doi(self):
        for occ in all_two_mode_configs(8):
            cfg = fd.make_config(occ)
            if np.count_nonzero(cfg.mode_totals) < 2:
                continue
            params = fd.two_mode_params(cfg)
            assert fd.two_mode_doi(params) == pytest.approx(fd.doi(cfg), abs=1e-14)
            assert params.to_config() == cfg


class TestMultiplicityTables:
    def test_single_species_pair(self):
        tables = fd.multiplicity_tables(fd.make_config([[1, 0], [1, 0]]))
        assert tables.ladder[0, 1] == 1
        assert tables.crossed[0, 1] == 1

    def test_distinct_species_pair(self):
        tables = fd.multiplicity_tables(fd.make_config([[1, 0], [0, 1]]))
        assert tables.ladder[0, 1] == 1
        assert tables.crossed[0, 1] == 0

    def test_mixed(self):
        tables = fd.multiplicity_tables(fd.make_config([[3, 1], [1, 3]]))
        assert tables.crossed[0, 1] == 6
        assert tables.ladder[0, 1] == 16

    def test_reconstructs_doi(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            cfg = fd.make_config(random_config(rng))
            if np.count_nonzero(cfg.mode_totals) < 2:
                continue
            ladder, crossed = fd.multiplicity_tables(cfg).offdiag_sums()
            assert crossed / ladder == pytest.approx(fd.doi(cfg), abs=1e-15)
            tables = fd.multiplicity_tables(cfg)
            assert np.array_equal(tables.ladder, tables.ladder.T)
            assert np.array_equal(tables.crossed, tables.crossed.T)
            assert np.all(tables.crossed <= tables.ladder)


class TestSuperposition:
    def hom(self, alpha):
        return fd.SuperposedFock(
            [
                (math.sqrt(alpha), fd.make_config([[1, 0], [1, 0]])),
                (math.sqrt(1 - alpha), fd.make_config([[1, 0], [0, 1]])),
            ]
        )

    def test_hom_family(self):
        assert fd.doi_superposition(self.hom(0.7)) == pytest.approx(0.7, abs=1e-14)

    def test_single_term(self):
        cfg = fd.make_config([[3, 1], [1, 3]])
        state = fd.SuperposedFock([(1.0, cfg)])
        assert fd.doi_superposition(state) == fd.doi(cfg)

    def test_equal_mix_of_extremes(self):
        state = fd.SuperposedFock(
            [
                (math.sqrt(0.5), fd.make_config([[4, 0], [4, 0]])),
                (math.sqrt(0.5), fd.make_config([[4, 0], [0, 4]])),
            ]
        )
        assert fd.doi_superposition(state) == pytest.approx(0.5, abs=1e-14)

    def test_weight_linearity(self):
        rng = np.random.default_rng(5)
        terms = [
            fd.make_config([[4, 0], [4, 0]]),
            fd.make_config([[4, 0], [0, 4]]),
            fd.make_config([[3, 1], [1, 3]]),
        ]
        values = [fd.doi(cfg) for cfg in terms]
        for _ in range(50):
            raw = rng.random(3)
            probs = raw / raw.sum()
            state = fd.SuperposedFock(
                [(math.sqrt(p), cfg) for p, cfg in zip(probs, terms)]
            )
            assert fd.doi_superposition(state) == pytest.approx(
                float(np.dot(probs, values)), abs=1e-12
            )

    def test_norm_violation(self):
        with pytest.raises(fd.NormalizationError):
            fd.SuperposedFock([(0.9, fd.make_config([[1, 0], [1, 0]]))])

    def test_density_mismatch(self):
        with pytest.raises(fd.InconsistentDensities):
            fd.SuperposedFock(
                [
                    (math.sqrt(0.5), fd.make_config([[1, 0], [1, 0]])),
                    (math.sqrt(0.5), fd.make_config([[1, 1], [0, 0]])),
                ]
            )

    def test_undefined_doi_propagates(self):
        state = fd.SuperposedFock([(1.0, fd.make_config([[1, 1], [0, 0]]))])
        with pytest.raises(fd.UndefinedDOI):
            fd.doi_superposition(state)


class TestSectorBasis:
    def test_dimensions(self):
        assert fd.sector_dimension(2, (4, 4)) == 25
        assert fd.sector_dimension(3, (1,)) == 3
        assert fd.sector_dimension(3, (2, 1)) == 18

    def test_documented_order(self):
        # per species lexicographic ascending, species 0 most significant
        basis = fd.enumerate_sector(2, (1, 1))
        states = [b.occupations.tolist() for b in basis]
        assert states == [
            [[0, 0], [1, 1]],
            [[0, 1], [1, 0]],
            [[1, 0], [0, 1]],
            [[1, 1], [0, 0]],
        ]

    @pytest.mark.parametrize(
        "n_modes,counts",
        [(2, (4, 4)), (4, (3, 2)), (3, (4, 4)), (6, (4, 3)), (5, (6,))],
    )
    def test_rank_unrank_roundtrip(self, n_modes, counts):
        basis = fd.enumerate_sector(n_modes, counts)
        assert basis.dimension <= 10_000
        for i in range(basis.dimension):
            assert basis.rank(basis.occupations[i]) == i
        sums = basis.occupations.sum(axis=1)
        assert np.all(sums == np.asarray(counts))

    def test_dimension_overflow(self):
        with pytest.raises(fd.DimensionOverflow):
            fd.enumerate_sector(12, (24,))

    def test_cap_override(self):
        basis = fd.enumerate_sector(6, (4, 3), cap=10_000)
        assert basis.dimension == 7056

    def test_rank_rejects_foreign_sector(self):
        basis = fd.enumerate_sector(2, (2, 1))
        with pytest.raises(fd.DimensionMismatch):
            basis.rank(np.array([[2, 2], [0, 0]]))


def brute_force_double_well_classes(N, M):
    """Orbit count over explicit occupation matrices, quotienting by species
    swap and, for a balanced density, mode swap."""
    n1, n2 = (N + M) // 2, (N - M) // 2
    seen = set()
    for up1 in range(n1 + 1):
        for up2 in range(n2 + 1):
            occ = ((up1, n1 - up1), (up2, n2 - up2))
            orbit = {occ, tuple(tuple(row[::-1]) for row in occ)}
            if n1 == n2:
                orbit |= {tuple(o[::-1]) for o in orbit}
            seen.add(max(orbit))
    return seen


class TestNonequivalentDoubleWell:
    def test_nine_classes_for_n8(self):
        classes = fd.nonequivalent_double_well(8, 0)
        assert len(classes) == 9
        pairs = {(c.delta1, c.delta2) for c in classes}
        assert pairs == {
            (0, 0), (2, -2), (2, 0), (2, 2),
            (4, -4), (4, -2), (4, 0), (4, 2), (4, 4),
        }
        by_pair = {(c.delta1, c.delta2): c.doi for c in classes}
        assert by_pair[(4, 4)] == 1.0
        assert by_pair[(4, -4)] == 0.0
        assert by_pair[(2, 0)] == 0.5

    @pytest.mark.parametrize("N,M", [(2, 0), (4, 0), (8, 0), (8, 4), (8, 6), (5, 1)])
    def test_against_exhaustive_enumeration(self, N, M):
        classes = fd.nonequivalent_double_well(N, M)
        oracle = brute_force_double_well_classes(N, M)
        assert len(classes) == len(oracle)
        produced = {
            tuple(tuple(int(v) for v in row) for row in c.config.occupations)
            for c in classes
        }
        assert produced == oracle

    def test_all_in_one_mode(self):
        classes = fd.nonequivalent_double_well(8, 8)
        assert len(classes) == 5
        assert all(c.doi is None for c in classes)

    def test_invalid_imbalance(self):
        with pytest.raises(fd.InvalidImbalance):
            fd.nonequivalent_double_well(8, 3)
        with pytest.raises(fd.InvalidImbalance):
            fd.nonequivalent_double_well(4, 6)

    def test_representative_chart(self):
        # balanced density: delta1 in [0, N/2], |delta2| <= delta1
        for cls in fd.nonequivalent_double_well(8, 0):
            assert 0 <= cls.delta1 <= 4
            assert abs(cls.delta2) <= cls.delta1


class TestSpeciesSplits:
    def test_triple_well_class_count(self):
        # 4^3 split assignments, species swap halves them (no fixed points)
        splits = fd.nonequivalent_species_splits((3, 3, 3))
        assert len(splits) == 32
        assert len({s.occupations.tobytes() for s in splits}) == 32
        for cfg in splits:
            assert cfg.mode_totals.tolist() == [3, 3, 3]

    def test_canonical_ordering(self):
        cfg = fd.make_config([[0, 3], [1, 2], [0, 3]])
        canon = fd.canonical_species_order(cfg)
        assert canon.species_totals[0] >= canon.species_totals[1]
        again = fd.canonical_species_order(
            fd.make_config(cfg.occupations[:, ::-1])
        )
        assert canon == again
