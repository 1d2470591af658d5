"""Encoding mapper: default assignment, injectivity oracle, quantization."""

import itertools
import random

import pytest

from somaviz.mapping import (
    HUE,
    NOISE_TEXTURE,
    NORMAL_PERTURBATION,
    SAT_BRIGHT,
    AttributeValue,
    CategoryClash,
    MappingError,
    MappingSpec,
    PropTypeClash,
    VisualAttribute,
    alternation_schedule,
    bin_boundaries,
    build_default_mapping,
    build_domain_map,
    encode_observation,
    map_domain_value,
    validate_mapping,
)
from somaviz.records import (
    Category,
    Observation,
    Property,
    View,
    ViewRegistry,
    load_default_registry,
)


@pytest.fixture(scope="module")
def registry():
    return load_default_registry()


@pytest.fixture(scope="module")
def spec(registry):
    return build_default_mapping(registry)


class TestDefaultMapping:
    def test_category_hues(self, spec):
        assert spec.category_values["paresis"].hue_deg == 280.0  # purple
        assert spec.category_values["radicularPain"].hue_deg == 0.0
        assert spec.category_values["tReflex"].hue_deg == 120.0
        assert spec.category_values["excretionDisorder"].hue_deg == 30.0
        assert spec.category_values["sensoryDisorder"].hue_deg == 180.0

    def test_range_cardinalities(self, spec):
        sizes = {k: len(v) for k, v in spec.prop_ranges.items()}
        assert sizes[("radicularPain", "intensity")] == 3
        assert sizes[("paresis", "intensity")] == 3
        assert sizes[("tReflex", "intensity")] == 5
        assert sizes[("excretionDisorder", "intensity")] == 3
        assert sizes[("sensoryDisorder", "intensity")] == 4
        assert sizes[("radicularPain", "trigger")] == 1
        assert sizes[("sensoryDisorder", "paresthesia")] == 3

    def test_intensity_shares_one_attribute(self, spec):
        kinds = {
            spec.prop_ranges[(c, "intensity")].kind
            for c in ("radicularPain", "paresis", "tReflex", "excretionDisorder", "sensoryDisorder")
        }
        assert kinds == {SAT_BRIGHT}
        assert spec.prop_attributes["intensity"] == SAT_BRIGHT

    def test_json_round_trip(self, spec):
        again = MappingSpec.loads(spec.dumps())
        assert again.category_values == spec.category_values
        assert again.prop_ranges == spec.prop_ranges
        assert again.domain_maps == spec.domain_maps


class TestDomainMap:
    def test_paresis_bijective(self, spec, registry):
        prop = registry.category("paresis").prop("intensity")
        m = spec.domain_maps[("paresis", "intensity")]
        assert [m[v] for v in prop.domain] == [0, 1, 2]

    def test_pain_bins_frozen(self, spec):
        # Expected bins computed by the enumeration oracle below and frozen:
        # {1..3} -> 0, {4..7} -> 1, {8..10} -> 2.
        m = spec.domain_maps[("radicularPain", "intensity")]
        assert m == {1: 0, 2: 0, 3: 0, 4: 1, 5: 1, 6: 1, 7: 1, 8: 2, 9: 2, 10: 2}

    def test_binning_oracle(self):
        # Oracle: among contiguous partitions, sizes must differ by at most
        # one (balanced, which also minimizes the max bin size), and an exact
        # half tie goes to the top bin.
        for n in range(1, 30):
            for k in range(1, n + 1):
                bounds = bin_boundaries(n, k)
                sizes = [bounds[b + 1] - bounds[b] for b in range(k)]
                assert bounds[0] == 0 and bounds[-1] == n
                assert all(s >= 1 for s in sizes)
                assert max(sizes) - min(sizes) <= 1
        # Exact half ties: 5 into 2 -> (2, 3), 7 into 2 -> (3, 4).
        assert bin_boundaries(5, 2) == [0, 2, 5]
        assert bin_boundaries(7, 2) == [0, 3, 7]

    def test_binary_to_highest(self, spec):
        m = spec.domain_maps[("excretionDisorder", "intensity")]
        assert m[False] == 0
        assert m[True] == 2

    def test_treflex_by_absolute_value(self, spec):
        m = spec.domain_maps[("tReflex", "intensity")]
        assert m == {1: 0, 2: 1, 3: 2, 4: 3, 5: 4}

    def test_monotone_on_ordered_domains(self):
        rng = random.Random(11)
        for _ in range(200):
            n = rng.randint(1, 12)
            k = rng.randint(1, 6)
            prop = Property("intensity", "numerical", tuple(range(n)))
            m = build_domain_map(prop, k)
            idx = [m[v] for v in prop.domain]
            assert idx == sorted(idx)
            assert min(idx) >= 0 and max(idx) < k

    def test_quantization_iff_non_injective(self, spec, registry):
        # Enumeration: the quantized flag must agree with non-injectivity of
        # the value map over the encodable (non-normal) domain.
        report = validate_mapping(spec, registry)
        flagged = {(q.category, q.prop_type) for q in report.quantized_properties}
        for cat in registry.categories.values():
            for prop in cat.props:
                m = spec.domain_maps[(cat.name, prop.prop_type)]
                eff = prop.effective_domain()
                injective = len({m[v] for v in eff}) == len(eff)
                assert ((cat.name, prop.prop_type) in flagged) == (not injective)

    def test_value_not_in_domain(self, spec):
        with pytest.raises(MappingError) as err:
            map_domain_value(spec, "radicularPain", "intensity", 42)
        assert err.value.code == "value-not-in-domain"


class TestValidateDefault:
    def test_table_conformance(self, spec, registry):
        report = validate_mapping(spec, registry)
        assert report.local_violations == []
        assert report.global_violations == []
        assert [(q.category, q.prop_type, q.domain_size, q.range_size) for q in report.quantized_properties] == [
            ("radicularPain", "intensity", 10, 3)
        ]
        assert [(s.spatial_ref, s.categories) for s in report.spatial_conflicts] == [
            ("dermatome", ("radicularPain", "sensoryDisorder"))
        ]

    def test_duplicate_hue_is_local_violation(self, registry):
        spec = build_default_mapping(registry)
        spec.category_values["paresis"] = spec.category_values["radicularPain"]
        report = validate_mapping(spec, registry)
        assert any(isinstance(v, CategoryClash) for v in report.local_violations)

    def test_single_category_view_trivially_clean(self):
        cat = Category("solo", "muscle", (Property("intensity", "ordinal", ("a", "b")),))
        registry = ViewRegistry({"solo": cat}, {"v": View("v", (cat,))}, "v")
        attr = VisualAttribute(HUE, HUE, (AttributeValue(HUE, hue_deg=10.0),))
        spec = MappingSpec(
            category_attribute=attr,
            category_values={"solo": attr.range_values[0]},
            prop_attributes={"intensity": SAT_BRIGHT},
            prop_ranges={("solo", "intensity"): VisualAttribute(SAT_BRIGHT, SAT_BRIGHT, (
                AttributeValue(SAT_BRIGHT, sat=0.4, brightness=0.9),
                AttributeValue(SAT_BRIGHT, sat=1.0, brightness=0.6),
            ))},
            domain_maps={("solo", "intensity"): {"a": 0, "b": 1}},
        )
        report = validate_mapping(spec, registry)
        assert report.passed

    def test_sat_bright_cap(self):
        values = tuple(
            AttributeValue(SAT_BRIGHT, sat=0.2 + 0.15 * i, brightness=0.9 - 0.08 * i) for i in range(5)
        )
        with pytest.raises(MappingError):
            VisualAttribute(SAT_BRIGHT, SAT_BRIGHT, values)
        attr = VisualAttribute(SAT_BRIGHT, SAT_BRIGHT, values, pairwise_comparable=True)
        assert len(attr) == 5


def random_registry_and_spec(rng):
    """Small random universe plus a random (possibly clashing) assignment."""
    n_cats = rng.randint(1, 8)
    type_pool = [f"t{i}" for i in range(4)]
    attr_pool = [SAT_BRIGHT, NOISE_TEXTURE, NORMAL_PERTURBATION, "texture-extra"]
    categories = {}
    for i in range(n_cats):
        n_props = rng.randint(1, 4)
        types = rng.sample(type_pool, n_props)
        props = tuple(
            Property(t, "numerical", tuple(range(rng.randint(1, 6)))) for t in types
        )
        categories[f"c{i}"] = Category(f"c{i}", rng.choice(["muscle", "dermatome", "tendon"]), props)
    names = sorted(categories)
    views = {}
    for v in range(rng.randint(1, 6)):
        members = rng.sample(names, rng.randint(1, len(names)))
        views[f"v{v}"] = View(f"v{v}", tuple(categories[m] for m in sorted(members)))
    registry = ViewRegistry(categories, views, sorted(views)[0])

    hues = [AttributeValue(HUE, hue_deg=45.0 * i) for i in range(8)]
    spec = MappingSpec(
        category_attribute=VisualAttribute(HUE, HUE, tuple(hues)),
        category_values={n: rng.choice(hues) for n in names},
        prop_attributes={},
        prop_ranges={},
        domain_maps={},
    )
    # Property types map to a random attribute; ranges instantiated per use.
    type_attr = {t: rng.choice(attr_pool) for t in type_pool}
    spec.prop_attributes = {t: type_attr[t] for t in type_pool}
    for cat in categories.values():
        for prop in cat.props:
            k = rng.randint(1, 4)
            name = type_attr[prop.prop_type]
            values = tuple(
                AttributeValue(NOISE_TEXTURE, level=j, frequency=0.1 * (j + 1), amplitude=0.2)
                for j in range(k)
            )
            spec.prop_ranges[(cat.name, prop.prop_type)] = VisualAttribute(name, NOISE_TEXTURE, values)
            spec.domain_maps[(cat.name, prop.prop_type)] = build_domain_map(prop, k)
    return registry, spec


def brute_force_violations(registry, spec):
    """Independent oracle: literal pairwise enumeration of all scopes."""
    local, global_ = set(), set()
    for view in registry.views.values():
        for a, b in itertools.combinations(sorted(view.category_names), 2):
            if spec.category_values[a] == spec.category_values[b]:
                local.add(("cat", f"view:{view.name}", a, b))
    for cat in registry.categories.values():
        for a, b in itertools.combinations(sorted(cat.prop_types), 2):
            if spec.prop_attributes[a] == spec.prop_attributes[b]:
                local.add(("prop", f"category:{cat.name}", a, b))
    for a, b in itertools.combinations(sorted(registry.categories), 2):
        if spec.category_values[a] == spec.category_values[b]:
            global_.add(("cat", "global", a, b))
    for a, b in itertools.combinations(sorted(registry.all_prop_types), 2):
        if spec.prop_attributes[a] == spec.prop_attributes[b]:
            global_.add(("prop", "global", a, b))
    return local, global_


def report_sets(report):
    def key(v):
        return ("cat" if isinstance(v, CategoryClash) else "prop", v.scope, v.first, v.second)

    return {key(v) for v in report.local_violations}, {key(v) for v in report.global_violations}


class TestInjectivityOracle:
    def test_random_specs_match_brute_force(self):
        rng = random.Random(2024)
        for _ in range(200):
            registry, spec = random_registry_and_spec(rng)
            report = validate_mapping(spec, registry)
            got_local, got_global = report_sets(report)
            want_local, want_global = brute_force_violations(registry, spec)
            assert got_local == want_local
            assert got_global == want_global


class TestEncode:
    def test_pain_with_stress_trigger(self, spec, registry):
        o = Observation("radicularPain", "dermatome-L5-left", {"intensity": 9, "trigger": "stress"})
        style = encode_observation(o, spec, registry)
        assert style.hue.hue_deg == 0.0
        assert style.sat_bright == spec.prop_ranges[("radicularPain", "intensity")].range_values[2]
        assert len(style.texture_layers) == 1
        assert style.texture_layers[0].kind == NORMAL_PERTURBATION

    def test_constant_trigger_adds_no_layer(self, spec, registry):
        o = Observation("radicularPain", "dermatome-L5-left", {"intensity": 9, "trigger": "constant"})
        style = encode_observation(o, spec, registry)
        assert style.texture_layers == ()
        assert style.sat_bright == spec.prop_ranges[("radicularPain", "intensity")].range_values[2]

    def test_sensory_with_paresthesia(self, spec, registry):
        o = Observation("sensoryDisorder", "dermatome-L5-left", {"intensity": 2, "paresthesia": 3})
        style = encode_observation(o, spec, registry)
        assert style.hue.hue_deg == 180.0
        assert style.sat_bright == spec.prop_ranges[("sensoryDisorder", "intensity")].range_values[1]
        assert [l.level for l in style.texture_layers] == [2]
        assert style.texture_layers[0].kind == NOISE_TEXTURE

    def test_pure_function(self, spec, registry):
        o = Observation("paresis", "muscle-quadriceps-left", {"intensity": "severe"})
        assert encode_observation(o, spec, registry) == encode_observation(o, spec, registry)

    def test_unmapped_category(self, spec, registry):
        o = Observation("radicularPain", "dermatome-L5-left", {"intensity": 1})
        bad = MappingSpec(
            category_attribute=spec.category_attribute,
            category_values={},
            prop_attributes=spec.prop_attributes,
            prop_ranges=spec.prop_ranges,
            domain_maps=spec.domain_maps,
        )
        with pytest.raises(MappingError) as err:
            encode_observation(o, bad, registry)
        assert err.value.code == "unmapped-category"


class TestAlternation:
    def test_round_robin(self):
        group = ["radicularPain", "sensoryDisorder"]
        assert alternation_schedule(group, None, 0) == "radicularPain"
        assert alternation_schedule(group, None, 1) == "sensoryDisorder"
        assert alternation_schedule(group, None, 2) == "radicularPain"

    def test_selection_wins(self):
        group = ["radicularPain", "sensoryDisorder"]
        for phase in range(4):
            assert alternation_schedule(group, "sensoryDisorder", phase) == "sensoryDisorder"

    def test_singleton(self):
        assert alternation_schedule(["paresis"], None, 3) == "paresis"

    def test_selection_not_in_group(self):
        with pytest.raises(MappingError) as err:
            alternation_schedule(["a", "b"], "c", 0)
        assert err.value.code == "selection-not-in-group"
