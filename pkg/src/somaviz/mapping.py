"""Mapping of clinical data onto visual attributes, plus its validation.

Categories are encoded as hue, the shared intensity property as a composite
saturation-brightness ramp, and additional properties as procedural texture
layers (noise for graded values, normal perturbation for on/off flags).
The validator checks injectivity of the assignment locally per view and
category, globally across all categories and property types, detects
categories competing for the same structure kind, and reports quantized
properties (domain larger than the usable attribute range).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .records import Category, Property, Value, View, ViewRegistry

HUE = "hue"
SAT_BRIGHT = "saturation-brightness"
NOISE_TEXTURE = "texture-noise"
NORMAL_PERTURBATION = "texture-normal-perturbation"

ATTRIBUTE_KINDS = (HUE, SAT_BRIGHT, NOISE_TEXTURE, NORMAL_PERTURBATION)

# Distinguishable-value caps without an on-screen reference; a
# saturation-brightness range may carry one extra step when its values are
# read in left/right pairs.
MAX_HUES = 8
MAX_SAT_BRIGHT = 4
MAX_SAT_BRIGHT_PAIRWISE = 5

# Saturation-brightness ramp endpoints (pale/bright -> saturated/dark),
# chosen for readability on a light skin albedo.
SB_RAMP_START = (0.35, 0.95)
SB_RAMP_END = (1.0, 0.55)

# Texture level parameters: frequency in cycles per millimetre of body space.
NOISE_BASE_FREQUENCY = 0.04
NOISE_BASE_AMPLITUDE = 0.25
PERTURBATION_FREQUENCY = 0.12
PERTURBATION_AMPLITUDE = 0.6


class MappingError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class AttributeValue:
    """One perceivable value of a visual attribute; payload depends on kind."""

    kind: str
    hue_deg: float | None = None
    sat: float | None = None
    brightness: float | None = None
    level: int | None = None
    frequency: float | None = None
    amplitude: float | None = None

    def __post_init__(self):
        if self.kind == HUE:
            if self.hue_deg is None or not (0.0 <= self.hue_deg < 360.0):
                raise MappingError("bad-attribute-value", f"hue out of range: {self.hue_deg}")
        elif self.kind == SAT_BRIGHT:
            if self.sat is None or self.brightness is None:
                raise MappingError("bad-attribute-value", "saturation-brightness needs (sat, brightness)")
            if not (0.0 <= self.sat <= 1.0 and 0.0 <= self.brightness <= 1.0):
                raise MappingError("bad-attribute-value", "saturation/brightness outside [0,1]")
        elif self.kind in (NOISE_TEXTURE, NORMAL_PERTURBATION):
            if self.level is None or self.frequency is None or self.amplitude is None:
                raise MappingError("bad-attribute-value", "texture value needs level, frequency, amplitude")
            if self.frequency <= 0:
                raise MappingError("bad-attribute-value", "texture frequency must be positive")
        else:
            raise MappingError("bad-attribute-value", f"unknown attribute kind {self.kind!r}")

    def to_json(self) -> dict:
        payload = {"kind": self.kind}
        for key, val in (
            ("hue", self.hue_deg),
            ("sat", self.sat),
            ("brightness", self.brightness),
            ("level", self.level),
            ("frequency", self.frequency),
            ("amplitude", self.amplitude),
        ):
            if val is not None:
                payload[key] = val
        return payload

    @staticmethod
    def from_json(doc: dict) -> "AttributeValue":
        return AttributeValue(
            kind=doc["kind"],
            hue_deg=doc.get("hue"),
            sat=doc.get("sat"),
            brightness=doc.get("brightness"),
            level=doc.get("level"),
            frequency=doc.get("frequency"),
            amplitude=doc.get("amplitude"),
        )


@dataclass(frozen=True)
class VisualAttribute:
    """A named visual attribute with a concrete, finite range of values."""

    name: str
    kind: str
    range_values: tuple[AttributeValue, ...]
    pairwise_comparable: bool = False

    def __post_init__(self):
        if not self.range_values:
            raise MappingError("bad-attribute-range", f"{self.name}: empty range")
        if len(set(self.range_values)) != len(self.range_values):
            raise MappingError("bad-attribute-range", f"{self.name}: duplicate range values")
        for v in self.range_values:
            if v.kind != self.kind:
                raise MappingError("bad-attribute-range", f"{self.name}: mixed value kinds")
        cap = None
        if self.kind == HUE:
            cap = MAX_HUES
        elif self.kind == SAT_BRIGHT:
            cap = MAX_SAT_BRIGHT_PAIRWISE if self.pairwise_comparable else MAX_SAT_BRIGHT
        if cap is not None and len(self.range_values) > cap:
            raise MappingError(
                "bad-attribute-range",
                f"{self.name}: {len(self.range_values)} values exceed the perceivable cap of {cap}",
            )

    def __len__(self) -> int:
        return len(self.range_values)


@dataclass(frozen=True)
class VisualStyle:
    """Resolved appearance of one observation: hue + intensity + texture layers."""

    hue: AttributeValue
    sat_bright: AttributeValue | None
    texture_layers: tuple[AttributeValue, ...]


# Validation report entries -------------------------------------------------


@dataclass(frozen=True)
class CategoryClash:
    scope: str  # "view:<name>" or "global"
    first: str
    second: str


@dataclass(frozen=True)
class PropTypeClash:
    scope: str  # "category:<name>" or "global"
    first: str
    second: str


@dataclass(frozen=True)
class SpatialConflict:
    view: str
    spatial_ref: str
    categories: tuple[str, ...]


@dataclass(frozen=True)
class QuantizedProperty:
    category: str
    prop_type: str
    domain_size: int
    range_size: int


@dataclass
class ValidationReport:
    local_violations: list[CategoryClash | PropTypeClash] = field(default_factory=list)
    global_violations: list[CategoryClash | PropTypeClash] = field(default_factory=list)
    spatial_conflicts: list[SpatialConflict] = field(default_factory=list)
    quantized_properties: list[QuantizedProperty] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not (
            self.local_violations
            or self.global_violations
            or self.spatial_conflicts
            or self.quantized_properties
        )

    @property
    def locally_injective(self) -> bool:
        return not self.local_violations

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "locallyInjective": self.locally_injective,
            "localViolations": [_clash_json(v) for v in self.local_violations],
            "globalViolations": [_clash_json(v) for v in self.global_violations],
            "spatialConflicts": [
                {"view": s.view, "spatialRef": s.spatial_ref, "categories": list(s.categories)}
                for s in self.spatial_conflicts
            ],
            "quantizedProperties": [
                {
                    "category": q.category,
                    "propType": q.prop_type,
                    "domainSize": q.domain_size,
                    "rangeSize": q.range_size,
                }
                for q in self.quantized_properties
            ],
        }

    def summary(self) -> str:
        lines = []
        status = "OK" if self.locally_injective else "FAILED"
        lines.append(f"mapping validation: {status}")
        for v in self.local_violations:
            lines.append(f"  local violation [{v.scope}]: {v.first} and {v.second} share a value")
        for v in self.global_violations:
            lines.append(f"  global violation [{v.scope}]: {v.first} and {v.second} share a value")
        for s in self.spatial_conflicts:
            cats = ", ".join(s.categories)
            lines.append(f"  spatial conflict in {s.view} on {s.spatial_ref}: {cats} (alternation applies)")
        for q in self.quantized_properties:
            lines.append(
                f"  quantized: {q.category}.{q.prop_type} has {q.domain_size} values for a range of {q.range_size}"
            )
        if self.passed:
            lines.append("  no violations")
        return "\n".join(lines)


def _clash_json(v: CategoryClash | PropTypeClash) -> dict:
    kind = "category" if isinstance(v, CategoryClash) else "propType"
    return {"kind": kind, "scope": v.scope, "members": [v.first, v.second]}


# Mapping specification ------------------------------------------------------


@dataclass
class MappingSpec:
    """Complete assignment of clinical data to visual attributes.

    ``category_values`` maps category names into the category attribute's
    range.  ``prop_attributes`` assigns each property type an attribute name;
    ``prop_ranges`` instantiates that attribute with a concrete cardinality
    per (category, property), and ``domain_maps`` takes each domain value to
    an index of that range.
    """

    category_attribute: VisualAttribute
    category_values: dict[str, AttributeValue]
    prop_attributes: dict[str, str]
    prop_ranges: dict[tuple[str, str], VisualAttribute]
    domain_maps: dict[tuple[str, str], dict[Value, int]]

    def category_value(self, category: str) -> AttributeValue:
        if category not in self.category_values:
            raise MappingError("unmapped-category", f"category {category!r} has no visual value")
        return self.category_values[category]

    def to_json(self) -> dict:
        return {
            "categoryAttribute": {
                "name": self.category_attribute.name,
                "kind": self.category_attribute.kind,
                "range": [v.to_json() for v in self.category_attribute.range_values],
            },
            "categoryValues": {c: v.to_json() for c, v in self.category_values.items()},
            "propTypeAttributes": dict(self.prop_attributes),
            "propRanges": [
                {
                    "category": c,
                    "propType": t,
                    "attribute": attr.name,
                    "kind": attr.kind,
                    "pairwiseComparable": attr.pairwise_comparable,
                    "range": [v.to_json() for v in attr.range_values],
                }
                for (c, t), attr in self.prop_ranges.items()
            ],
            "domainMaps": [
                {"category": c, "propType": t, "entries": [[v, i] for v, i in m.items()]}
                for (c, t), m in self.domain_maps.items()
            ],
        }

    @staticmethod
    def from_json(doc: dict) -> "MappingSpec":
        ca = doc["categoryAttribute"]
        category_attribute = VisualAttribute(
            name=ca["name"],
            kind=ca["kind"],
            range_values=tuple(AttributeValue.from_json(v) for v in ca["range"]),
        )
        prop_ranges = {}
        for r in doc["propRanges"]:
            prop_ranges[(r["category"], r["propType"])] = VisualAttribute(
                name=r["attribute"],
                kind=r["kind"],
                range_values=tuple(AttributeValue.from_json(v) for v in r["range"]),
                pairwise_comparable=r.get("pairwiseComparable", False),
            )
        domain_maps = {}
        for m in doc["domainMaps"]:
            domain_maps[(m["category"], m["propType"])] = {v: i for v, i in m["entries"]}
        return MappingSpec(
            category_attribute=category_attribute,
            category_values={
                c: AttributeValue.from_json(v) for c, v in doc["categoryValues"].items()
            },
            prop_attributes=dict(doc["propTypeAttributes"]),
            prop_ranges=prop_ranges,
            domain_maps=domain_maps,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @staticmethod
    def loads(text: str) -> "MappingSpec":
        return MappingSpec.from_json(json.loads(text))


# Domain-to-range assignment -------------------------------------------------


def bin_boundaries(domain_size: int, range_size: int) -> list[int]:
    """Contiguous balanced partition of ``domain_size`` items into bins.

    Boundary b sits at ceil(b*n/k - 1/2): bin sizes differ by at most one and
    an exact half tie enlarges the top bin.
    """
    n, k = domain_size, range_size
    return [math.ceil(b * n / k - 0.5) for b in range(k + 1)]


def build_domain_map(prop: Property, range_size: int) -> dict[Value, int]:
    """Order-preserving assignment of a property domain into a range.

    Domains larger than the range are quantized into contiguous balanced
    bins; smaller domains spread across the range so the top domain value
    reaches the top range value.
    """
    n = len(prop.domain)
    k = range_size
    if n > k:
        bounds = bin_boundaries(n, k)
        mapping = {}
        for b in range(k):
            for i in range(bounds[b], bounds[b + 1]):
                mapping[prop.domain[i]] = b
        return mapping
    if n == 1:
        return {prop.domain[0]: k - 1}
    return {v: round(i * (k - 1) / (n - 1)) for i, v in enumerate(prop.domain)}


def map_domain_value(spec: MappingSpec, category: str, prop_type: str, value: Value) -> AttributeValue:
    key = (category, prop_type)
    if key not in spec.domain_maps or key not in spec.prop_ranges:
        raise MappingError("incomplete-mapping", f"no mapping for {category}.{prop_type}")
    mapping = spec.domain_maps[key]
    if value not in mapping:
        raise MappingError("value-not-in-domain", f"{value!r} not mapped for {category}.{prop_type}")
    return spec.prop_ranges[key].range_values[mapping[value]]


# Default assignment ----------------------------------------------------------

DEFAULT_CATEGORY_HUES = {
    "radicularPain": 0.0,  # red
    "paresis": 280.0,  # purple
    "tReflex": 120.0,  # green
    "excretionDisorder": 30.0,  # orange
    "sensoryDisorder": 180.0,  # cyan
}


def sat_bright_ramp(cardinality: int, pairwise_comparable: bool = False) -> VisualAttribute:
    values = []
    for i in range(cardinality):
        t = 1.0 if cardinality == 1 else i / (cardinality - 1)
        s = SB_RAMP_START[0] + t * (SB_RAMP_END[0] - SB_RAMP_START[0])
        v = SB_RAMP_START[1] + t * (SB_RAMP_END[1] - SB_RAMP_START[1])
        values.append(AttributeValue(kind=SAT_BRIGHT, sat=round(s, 6), brightness=round(v, 6)))
    return VisualAttribute(
        name=SAT_BRIGHT,
        kind=SAT_BRIGHT,
        range_values=tuple(values),
        pairwise_comparable=pairwise_comparable,
    )


def noise_levels(cardinality: int) -> VisualAttribute:
    values = tuple(
        AttributeValue(
            kind=NOISE_TEXTURE,
            level=i,
            frequency=NOISE_BASE_FREQUENCY * (i + 1),
            amplitude=NOISE_BASE_AMPLITUDE * (i + 1),
        )
        for i in range(cardinality)
    )
    return VisualAttribute(name=NOISE_TEXTURE, kind=NOISE_TEXTURE, range_values=values)


def perturbation_levels(cardinality: int) -> VisualAttribute:
    values = tuple(
        AttributeValue(
            kind=NORMAL_PERTURBATION,
            level=i,
            frequency=PERTURBATION_FREQUENCY,
            amplitude=PERTURBATION_AMPLITUDE * (i + 1) / cardinality,
        )
        for i in range(cardinality)
    )
    return VisualAttribute(name=NORMAL_PERTURBATION, kind=NORMAL_PERTURBATION, range_values=values)


# Per-(category, property) range cardinalities of the default view.
DEFAULT_RANGE_CARDINALITIES = {
    ("radicularPain", "intensity"): 3,
    ("radicularPain", "trigger"): 1,
    ("paresis", "intensity"): 3,
    ("tReflex", "intensity"): 5,
    ("excretionDisorder", "intensity"): 3,
    ("sensoryDisorder", "intensity"): 4,
    ("sensoryDisorder", "paresthesia"): 3,
}

DEFAULT_PROP_ATTRIBUTES = {
    "intensity": SAT_BRIGHT,
    "trigger": NORMAL_PERTURBATION,
    "paresthesia": NOISE_TEXTURE,
}


def build_default_mapping(registry: ViewRegistry | None = None) -> MappingSpec:
    """Hand-built default assignment for the disc-herniation view."""
    if registry is None:
        from .records import load_default_registry

        registry = load_default_registry()

    palette = tuple(
        AttributeValue(kind=HUE, hue_deg=h) for h in DEFAULT_CATEGORY_HUES.values()
    )
    category_attribute = VisualAttribute(name=HUE, kind=HUE, range_values=palette)
    category_values = {
        name: AttributeValue(kind=HUE, hue_deg=h) for name, h in DEFAULT_CATEGORY_HUES.items()
    }

    prop_ranges: dict[tuple[str, str], VisualAttribute] = {}
    domain_maps: dict[tuple[str, str], dict[Value, int]] = {}
    for (cat_name, prop_type), cardinality in DEFAULT_RANGE_CARDINALITIES.items():
        cat = registry.category(cat_name)
        prop = cat.prop(prop_type)
        attr_name = DEFAULT_PROP_ATTRIBUTES[prop_type]
        if attr_name == SAT_BRIGHT:
            attr = sat_bright_ramp(cardinality, pairwise_comparable=cardinality > MAX_SAT_BRIGHT)
        elif attr_name == NOISE_TEXTURE:
            attr = noise_levels(cardinality)
        else:
            attr = perturbation_levels(cardinality)
        prop_ranges[(cat_name, prop_type)] = attr
        domain_maps[(cat_name, prop_type)] = build_domain_map(prop, cardinality)

    return MappingSpec(
        category_attribute=category_attribute,
        category_values=category_values,
        prop_attributes=dict(DEFAULT_PROP_ATTRIBUTES),
        prop_ranges=prop_ranges,
        domain_maps=domain_maps,
    )


# Validation ------------------------------------------------------------------


def validate_mapping(spec: MappingSpec, registry: ViewRegistry) -> ValidationReport:
    """Check the assignment against all injectivity and capacity rules.

    Local violations break readability inside a single view or category;
    global violations break uniqueness across all known categories and
    property types.  Spatial conflicts and quantized properties are not
    violations of the mapping itself but must be reported so alternation
    and textual overlays can handle them.
    """
    report = ValidationReport()

    for cat_name in registry.categories:
        if cat_name not in spec.category_values:
            raise MappingError("incomplete-mapping", f"category {cat_name!r} unmapped")
    for cat in registry.categories.values():
        for prop in cat.props:
            if prop.prop_type not in spec.prop_attributes:
                raise MappingError("incomplete-mapping", f"property type {prop.prop_type!r} unmapped")
            key = (cat.name, prop.prop_type)
            if key not in spec.prop_ranges or key not in spec.domain_maps:
                raise MappingError("incomplete-mapping", f"no range for {cat.name}.{prop.prop_type}")
            missing = [v for v in prop.domain if v not in spec.domain_maps[key]]
            if missing:
                raise MappingError(
                    "incomplete-mapping", f"{cat.name}.{prop.prop_type}: unmapped values {missing}"
                )

    # Local injectivity: category values inside each view, attributes inside
    # each category.
    for view in registry.views.values():
        names = sorted(view.category_names)
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                if spec.category_values[a] == spec.category_values[b]:
                    report.local_violations.append(CategoryClash(f"view:{view.name}", a, b))
    for cat in registry.categories.values():
        types = sorted(cat.prop_types)
        for i, a in enumerate(types):
            for b in types[i + 1 :]:
                if spec.prop_attributes[a] == spec.prop_attributes[b]:
                    report.local_violations.append(PropTypeClash(f"category:{cat.name}", a, b))

    # Global injectivity across all categories and all property types.
    all_cats = sorted(registry.categories)
    for i, a in enumerate(all_cats):
        for b in all_cats[i + 1 :]:
            if spec.category_values[a] == spec.category_values[b]:
                report.global_violations.append(CategoryClash("global", a, b))
    all_types = sorted(registry.all_prop_types)
    for i, a in enumerate(all_types):
        for b in all_types[i + 1 :]:
            if spec.prop_attributes[a] == spec.prop_attributes[b]:
                report.global_violations.append(PropTypeClash("global", a, b))

    # Categories of one view competing for the same structure kind.
    for view in registry.views.values():
        by_ref: dict[str, list[str]] = {}
        for cat in view.categories:
            by_ref.setdefault(cat.spatial_ref, []).append(cat.name)
        for ref, cats in sorted(by_ref.items()):
            if len(cats) > 1:
                report.spatial_conflicts.append(
                    SpatialConflict(view.name, ref, tuple(sorted(cats)))
                )

    # Quantization: more encodable values than range slots.  Values equal to
    # the declared normal carry no visual encoding and do not count.
    for cat in registry.categories.values():
        for prop in cat.props:
            key = (cat.name, prop.prop_type)
            range_size = len(spec.prop_ranges[key])
            if len(prop.effective_domain()) > range_size:
                report.quantized_properties.append(
                    QuantizedProperty(cat.name, prop.prop_type, len(prop.domain), range_size)
                )

    return report


# Observation styling and alternation -----------------------------------------


def encode_observation(obs, spec: MappingSpec, registry: ViewRegistry) -> VisualStyle:
    """Resolve the visual appearance of a single observation.

    The category sets the hue, the saturation-brightness property sets the
    color ramp position, and each further property whose value differs from
    its normal value adds one texture layer.
    """
    cat = registry.category(obs.category_name)
    hue = spec.category_value(obs.category_name)

    sat_bright: AttributeValue | None = None
    layers: list[AttributeValue] = []
    for prop in cat.props:
        key = (cat.name, prop.prop_type)
        attr = spec.prop_ranges.get(key)
        if attr is None:
            raise MappingError("incomplete-mapping", f"no range for {key}")
        value = obs.values.get(prop.prop_type)
        if attr.kind == SAT_BRIGHT:
            if value is not None:
                sat_bright = map_domain_value(spec, cat.name, prop.prop_type, value)
            else:
                sat_bright = attr.range_values[0]
        else:
            if value is None or value == prop.normal_value:
                continue
            layers.append(map_domain_value(spec, cat.name, prop.prop_type, value))
    return VisualStyle(hue=hue, sat_bright=sat_bright, texture_layers=tuple(layers))


def alternation_schedule(
    conflict_group: list[str] | tuple[str, ...],
    selection: str | None,
    phase: int,
) -> str:
    """Active category of a spatial conflict group for a given phase tick."""
    group = sorted(conflict_group)
    if not group:
        raise MappingError("selection-not-in-group", "empty conflict group")
    if selection is not None:
        if selection not in group:
            raise MappingError("selection-not-in-group", f"{selection!r} not in {group}")
        return selection
    return group[phase % len(group)]
